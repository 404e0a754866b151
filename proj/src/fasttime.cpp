#include "fastslow/fasttime.hpp"

#include <cmath>
#include <sstream>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

double resolve_dt(const GqlDecomposition& dec, const FastTimeOptions& options) {
  const double dt = options.dt > 0.0 ? options.dt : dec.epsilon / 1000.0;
  if (dt > dec.epsilon / 10.0) {
    std::ostringstream msg;
    msg << "slow-time step " << dt << " does not resolve the fast scale (needs dt <= eps/10 = "
        << dec.epsilon / 10.0 << ")";
    throw ContractViolation(msg.str());
  }
  if (!(options.max_time > 0.0)) throw ContractViolation("max_time must be positive");
  return dt;
}

/// Seeds a report with y_s from the fast fibre through z0.
FastTimeReport start_report(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                            const StateVector& z0) {
  if (slow_neighborhood_test(dec, model, z0)) {
    throw ContractViolation("initial state already lies in the slow neighbourhood");
  }
  const Vector u0 = dec.fast_left() * z0;
  const Vector v0 = dec.slow_left() * z0;
  auto root = slow_manifold_point(dec, model, v0, u0);
  if (!root) {
    throw ConvergenceError("no attracting slow-manifold point on the fast fibre through the initial state",
                           fast_residual(dec, model, z0).norm());
  }
  FastTimeReport report;
  report.epsilon = dec.epsilon;
  report.start = z0;
  report.fast_root = *root;
  report.y0_distance = (u0 - dec.fast_left() * *root).norm();
  return report;
}

void finish_report(FastTimeReport& r) {
  const double s = std::sqrt(2.0 * r.epsilon) * (1.0 + r.epsilon * r.K) * r.y0_distance;
  r.tight_bound = s;
  r.bound = 2.0 * s;
  r.ratio = r.t_enter / r.bound;
  r.tight_ratio = r.t_enter / r.tight_bound;
  r.fast_path_simple = r.path_length <= 2.0 * r.y0_distance;
}

NonEntryError non_entry(double max_time, double residual) {
  std::ostringstream msg;
  msg << "trajectory did not enter the slow neighbourhood within slow time " << max_time
      << " (fast residual " << residual << ")";
  return NonEntryError(msg.str(), residual);
}

double profile_K(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                 const SpatialProfile& profile, double threshold) {
  const Vector diffusion = model.diffusion();
  double k = 0.0;
  for (int i = 1; i + 1 < profile.size(); ++i) {
    const double g = fast_residual(dec, model, profile.state(i)).norm();
    if (g < threshold) continue;
    const Vector lf = dec.fast_left() * diffusion.cwiseProduct(laplacian(profile, i));
    k = std::max(k, lf.norm() / g);
  }
  return k;
}

}  // namespace

bool slow_neighborhood_test(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                            const Eigen::Ref<const Vector>& z) {
  return fast_residual(dec, model, z).norm() < std::sqrt(dec.epsilon);
}

double estimate_K(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                  std::span<const SpatialProfile> snapshots) {
  const double threshold = std::sqrt(dec.epsilon);
  double k = 0.0;
  for (const auto& p : snapshots) {
    require_dimension(model, p.dimension(), "estimate_K");
    k = std::max(k, profile_K(dec, model, p, threshold));
  }
  return k;
}

FastTimeReport measure_fast_time_ode(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                                     const StateVector& z0, const FastTimeOptions& options) {
  require_dimension(model, z0.size(), "measure_fast_time_ode");
  const double dt = resolve_dt(dec, options);
  FastTimeReport report = start_report(dec, model, z0);
  const double h = dt / dec.epsilon;

  StateVector z = z0;
  Vector u = dec.fast_left() * z;
  long steps = 0;
  const auto max_steps = static_cast<long>(std::ceil(options.max_time / dt));
  while (!slow_neighborhood_test(dec, model, z)) {
    if (steps >= max_steps) throw non_entry(options.max_time, fast_residual(dec, model, z).norm());
    const StateVector k1 = eval_source(model, z);
    const StateVector k2 = eval_source(model, z + 0.5 * h * k1);
    const StateVector k3 = eval_source(model, z + 0.5 * h * k2);
    const StateVector k4 = eval_source(model, z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Vector u_next = dec.fast_left() * z;
    report.path_length += (u_next - u).norm();
    u = u_next;
    ++steps;
  }
  report.t_enter = static_cast<double>(steps) * dt;
  report.K = 0.0;
  finish_report(report);
  return report;
}

FastTimeReport measure_fast_time_pde(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                                     const BoundaryConditions& bc, const SolverSettings& settings,
                                     double x0, const FastTimeOptions& options) {
  settings.validate();
  require_dimension(model, bc.left.size(), "measure_fast_time_pde left boundary");
  require_dimension(model, bc.right.size(), "measure_fast_time_pde right boundary");
  if (!(x0 > 0.0 && x0 < 1.0)) throw ContractViolation("x0 must lie strictly inside (0, 1)");
  const Grid1D grid(settings.node_count);
  const int node = static_cast<int>(std::lround(x0 * (grid.size() - 1)));
  if (node <= 0 || node >= grid.size() - 1) {
    throw ContractViolation("x0 maps to a boundary node whose state is pinned by the Dirichlet data");
  }
  const double dt = resolve_dt(dec, options);
  const double h = dt / dec.epsilon;

  SpatialProfile profile = linear_initial_profile(bc.left, bc.right, grid);
  FastTimeReport report = start_report(dec, model, profile.state(node));
  const double threshold = std::sqrt(dec.epsilon);

  Vector u = dec.fast_left() * profile.state(node);
  long steps = 0;
  const auto max_steps = static_cast<long>(std::ceil(options.max_time / dt));
  while (true) {
    report.K = std::max(report.K, profile_K(dec, model, profile, threshold));
    if (slow_neighborhood_test(dec, model, profile.state(node))) break;
    if (steps >= max_steps) {
      throw non_entry(options.max_time, fast_residual(dec, model, profile.state(node)).norm());
    }
    const double limit = stable_dt(model, profile, settings.dt_safety);
    const int sub = std::max(1, static_cast<int>(std::ceil(h / (0.5 * limit))));
    for (int s = 0; s < sub; ++s) profile = step(profile, model, h / sub, settings.dt_safety);
    const Vector u_next = dec.fast_left() * profile.state(node);
    report.path_length += (u_next - u).norm();
    u = u_next;
    ++steps;
  }
  report.t_enter = static_cast<double>(steps) * dt;
  finish_report(report);
  return report;
}

}  // namespace fastslow
