#pragma once

#include <span>

#include "fastslow/core.hpp"
#include "fastslow/gql.hpp"
#include "fastslow/pde.hpp"

namespace fastslow {

/// Entry time of a trajectory into {|g| < sqrt(eps)} compared with the analytic bound.
///
/// Times are slow times t = eps * tau, tau being the model's own time variable.
struct FastTimeReport {
  double epsilon = 0.0;
  /// Transport-to-fast ratio; 0 without transport.
  double K = 0.0;
  /// |y0 - y_s| in fast coordinates.
  double y0_distance = 0.0;
  double t_enter = 0.0;
  /// sqrt(2 eps) * 2 (1 + eps K) |y0 - y_s|.
  double bound = 0.0;
  double ratio = 0.0;
  /// sqrt(2 eps) (1 + eps K) |y0 - y_s|, the sharper constant.
  double tight_bound = 0.0;
  double tight_ratio = 0.0;
  /// Length of the fast-coordinate path up to entry.
  double path_length = 0.0;
  /// path_length <= 2 |y0 - y_s|.
  bool fast_path_simple = false;
  StateVector start;
  StateVector fast_root;
};

struct FastTimeOptions {
  /// Slow-time step; 0 selects eps / 1000. Must not exceed eps / 10.
  double dt = 0.0;
  /// Slow-time budget before giving up.
  double max_time = 1.0;
};

/// |Z~_f Phi(z)| < sqrt(eps).
bool slow_neighborhood_test(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                            const Eigen::Ref<const Vector>& z);

/// max over snapshots and interior nodes outside the slow neighbourhood of
/// |Z~_f D z_xx| / |Z~_f Phi(z)|; 0 when no node qualifies.
double estimate_K(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                  std::span<const SpatialProfile> snapshots);

/// Integrates dz/dtau = Phi(z) from z0 by RK4 until the state enters the slow neighbourhood.
/// Throws ContractViolation if z0 is already inside or dt > eps/10, ConvergenceError if the
/// fast fibre through z0 has no attracting slow-manifold point, NonEntryError past max_time.
FastTimeReport measure_fast_time_ode(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                                     const StateVector& z0, const FastTimeOptions& options = {});

/// Integrates the PDE from the straight-line profile between the boundary states and tracks
/// the node nearest x0. K is accumulated over every step of the transient.
FastTimeReport measure_fast_time_pde(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                                     const BoundaryConditions& bc, const SolverSettings& settings,
                                     double x0, const FastTimeOptions& options = {});

}  // namespace fastslow
