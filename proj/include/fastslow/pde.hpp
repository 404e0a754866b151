#pragma once

#include <vector>

#include "fastslow/core.hpp"

namespace fastslow {

/// Dirichlet states held at x = 0 and x = 1.
struct BoundaryConditions {
  StateVector left;
  StateVector right;
};

struct SolverSettings {
  int node_count = 101;
  /// Fraction of the explicit stability limit actually used, in (0, 1].
  double dt_safety = 0.8;
  /// Sup-norm of the interior right-hand side that counts as stationary.
  double steady_tol = 1e-8;
  double max_time = 1e4;
  /// Residual history cadence in steps.
  int history_every = 100;

  /// Throws ContractViolation for N < 3, dt_safety outside (0, 1], negative steady_tol,
  /// non-positive max_time or history_every < 1.
  void validate() const;
};

/// z_i = left + (right - left) x_i.
SpatialProfile linear_initial_profile(const StateVector& left, const StateVector& right,
                                      const Grid1D& grid);

/// Phi + D z_xx at every node, with zero columns at the two boundary nodes.
Matrix full_rhs(const ReactionDiffusionModel& model, const SpatialProfile& profile);

/// Sup-norm of full_rhs over interior nodes.
double interior_residual(const ReactionDiffusionModel& model, const SpatialProfile& profile);

/// dt_safety * min(dx^2 / (2 max D), 2 / rho), rho the largest Gershgorin bound of the
/// source Jacobian over the nodes.
double stable_dt(const ReactionDiffusionModel& model, const SpatialProfile& profile,
                 double dt_safety = 0.8);

/// One classical Runge-Kutta step of the interior nodes; boundary columns are copied.
/// Throws StabilityError when dt exceeds stable_dt and DivergenceError on non-finite values.
SpatialProfile step(const SpatialProfile& profile, const ReactionDiffusionModel& model, double dt,
                    double dt_safety = 0.8);

struct ResidualSample {
  double t;
  double residual;
};

struct SteadyStateResult {
  SpatialProfile profile;
  double elapsed_time;
  long steps;
  double residual;
  std::vector<ResidualSample> history;
};

/// Steps from linear_initial_profile(bc) at the stable dt until interior_residual < steady_tol.
/// Throws ConvergenceError (with the last residual) once max_time is reached.
SteadyStateResult integrate_to_steady(const ReactionDiffusionModel& model,
                                      const BoundaryConditions& bc,
                                      const SolverSettings& settings = {});

}  // namespace fastslow
