#include "fastslow/pde.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

void rhs_into(const ReactionDiffusionModel& model, const Matrix& states, double dx,
              const Vector& diffusion, Matrix& out) {
  const auto n = states.cols();
  out.col(0).setZero();
  out.col(n - 1).setZero();
  const double inv_dx2 = 1.0 / (dx * dx);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    auto col = out.col(i);
    model.source_into(states.col(i), col);
    col += diffusion.cwiseProduct(states.col(i - 1) - 2.0 * states.col(i) + states.col(i + 1)) *
           inv_dx2;
  }
  if (!out.allFinite()) throw DivergenceError("non-finite right-hand side during time stepping");
}

/// Classical RK4 over the interior; boundary columns of the stage derivatives are zero.
struct Rk4Workspace {
  Matrix k1, k2, k3, k4, stage;

  explicit Rk4Workspace(const Matrix& like)
      : k1(like.rows(), like.cols()),
        k2(like.rows(), like.cols()),
        k3(like.rows(), like.cols()),
        k4(like.rows(), like.cols()),
        stage(like.rows(), like.cols()) {}
};

/// Advances states in place; k1 must already hold the derivative at states.
void rk4_advance(const ReactionDiffusionModel& model, Matrix& states, double dx,
                 const Vector& diffusion, double dt, Rk4Workspace& ws) {
  ws.stage = states + 0.5 * dt * ws.k1;
  rhs_into(model, ws.stage, dx, diffusion, ws.k2);
  ws.stage = states + 0.5 * dt * ws.k2;
  rhs_into(model, ws.stage, dx, diffusion, ws.k3);
  ws.stage = states + dt * ws.k3;
  rhs_into(model, ws.stage, dx, diffusion, ws.k4);
  states += (dt / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
  if (!states.allFinite()) throw DivergenceError("non-finite state during time stepping");
}

double stable_dt_states(const ReactionDiffusionModel& model, const Matrix& states, double dx,
                        const Vector& diffusion, double dt_safety) {
  double rho = 0.0;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    rho = std::max(rho, spectral_radius_bound(jacobian(model, states.col(i))));
  }
  const double max_d = diffusion.size() > 0 ? diffusion.maxCoeff() : 0.0;
  const double dt_diff = max_d > 0.0 ? dx * dx / (2.0 * max_d) : std::numeric_limits<double>::infinity();
  const double dt_react = rho > 0.0 ? 2.0 / rho : std::numeric_limits<double>::infinity();
  return dt_safety * std::min(dt_diff, dt_react);
}

}  // namespace

void SolverSettings::validate() const {
  if (node_count < 3) throw ContractViolation("solver needs at least 3 nodes");
  if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw ContractViolation("dt_safety must be in (0, 1]");
  if (!(steady_tol >= 0.0)) throw ContractViolation("steady_tol must be >= 0");
  if (!(max_time > 0.0)) throw ContractViolation("max_time must be positive");
  if (history_every < 1) throw ContractViolation("history_every must be >= 1");
}

SpatialProfile linear_initial_profile(const StateVector& left, const StateVector& right,
                                      const Grid1D& grid) {
  if (left.size() != right.size()) throw ContractViolation("boundary states differ in dimension");
  Matrix states(left.size(), grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    if (i == 0) {
      states.col(i) = left;
    } else if (i == grid.size() - 1) {
      states.col(i) = right;
    } else {
      states.col(i) = left + (right - left) * grid.node(i);
    }
  }
  return SpatialProfile(grid, std::move(states));
}

Matrix full_rhs(const ReactionDiffusionModel& model, const SpatialProfile& profile) {
  require_dimension(model, profile.dimension(), "full_rhs");
  Matrix out(profile.dimension(), profile.size());
  rhs_into(model, profile.states(), profile.grid().spacing(), model.diffusion(), out);
  return out;
}

double interior_residual(const ReactionDiffusionModel& model, const SpatialProfile& profile) {
  return full_rhs(model, profile).lpNorm<Eigen::Infinity>();
}

double stable_dt(const ReactionDiffusionModel& model, const SpatialProfile& profile,
                 double dt_safety) {
  require_dimension(model, profile.dimension(), "stable_dt");
  if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw ContractViolation("dt_safety must be in (0, 1]");
  return stable_dt_states(model, profile.states(), profile.grid().spacing(), model.diffusion(),
                          dt_safety);
}

SpatialProfile step(const SpatialProfile& profile, const ReactionDiffusionModel& model, double dt,
                    double dt_safety) {
  require_dimension(model, profile.dimension(), "step");
  if (!(dt > 0.0)) throw ContractViolation("time step must be positive");
  const double limit = stable_dt(model, profile, dt_safety);
  if (dt > limit) {
    std::ostringstream msg;
    msg << "time step " << dt << " exceeds the stability limit " << limit;
    throw StabilityError(msg.str(), limit);
  }
  SpatialProfile next = profile;
  Rk4Workspace ws(profile.states());
  const Vector diffusion = model.diffusion();
  const double dx = profile.grid().spacing();
  rhs_into(model, next.states(), dx, diffusion, ws.k1);
  rk4_advance(model, next.states(), dx, diffusion, dt, ws);
  return next;
}

SteadyStateResult integrate_to_steady(const ReactionDiffusionModel& model,
                                      const BoundaryConditions& bc,
                                      const SolverSettings& settings) {
  settings.validate();
  require_dimension(model, bc.left.size(), "integrate_to_steady left boundary");
  require_dimension(model, bc.right.size(), "integrate_to_steady right boundary");

  const Grid1D grid(settings.node_count);
  SpatialProfile profile = linear_initial_profile(bc.left, bc.right, grid);
  Matrix& states = profile.states();
  const Vector diffusion = model.diffusion();
  const double dx = grid.spacing();
  Rk4Workspace ws(states);

  std::vector<ResidualSample> history;
  double t = 0.0;
  long steps = 0;
  double residual = std::numeric_limits<double>::infinity();
  while (true) {
    rhs_into(model, states, dx, diffusion, ws.k1);
    residual = ws.k1.lpNorm<Eigen::Infinity>();
    if (steps % settings.history_every == 0) history.push_back({t, residual});
    if (residual < settings.steady_tol) break;
    if (t >= settings.max_time) {
      std::ostringstream msg;
      msg << "no stationary profile within max_time " << settings.max_time
          << " (interior residual " << residual << ")";
      throw ConvergenceError(msg.str(), residual);
    }
    const double dt = stable_dt_states(model, states, dx, diffusion, settings.dt_safety);
    rk4_advance(model, states, dx, diffusion, dt, ws);
    t += dt;
    ++steps;
  }
  if (history.empty() || history.back().t != t) history.push_back({t, residual});
  return {std::move(profile), t, steps, residual, std::move(history)};
}

}  // namespace fastslow
