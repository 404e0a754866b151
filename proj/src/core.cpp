#include "fastslow/core.hpp"

#include <cmath>
#include <sstream>

#include "fastslow/errors.hpp"

namespace fastslow {

Grid1D::Grid1D(int node_count) : node_count_(node_count), spacing_(0.0) {
  if (node_count < 3) {
    throw ContractViolation("Grid1D needs at least 3 nodes, got " + std::to_string(node_count));
  }
  spacing_ = 1.0 / static_cast<double>(node_count - 1);
}

double Grid1D::node(int i) const noexcept {
  if (i == node_count_ - 1) return 1.0;
  return static_cast<double>(i) * spacing_;
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> x(static_cast<std::size_t>(node_count_));
  for (int i = 0; i < node_count_; ++i) x[static_cast<std::size_t>(i)] = node(i);
  return x;
}

SpatialProfile::SpatialProfile(Grid1D grid, Matrix states)
    : grid_(grid), states_(std::move(states)) {
  if (states_.cols() != grid_.size()) {
    throw ContractViolation("profile has " + std::to_string(states_.cols()) +
                            " states for a grid of " + std::to_string(grid_.size()) + " nodes");
  }
}

std::vector<std::string> ReactionDiffusionModel::species() const {
  std::vector<std::string> names;
  for (int k = 0; k < dimension(); ++k) names.push_back("z" + std::to_string(k + 1));
  return names;
}

void require_dimension(const ReactionDiffusionModel& model, Eigen::Index size, const char* what) {
  if (size != model.dimension()) {
    std::ostringstream msg;
    msg << what << ": expected dimension " << model.dimension() << ", got " << size;
    throw ContractViolation(msg.str());
  }
}

StateVector eval_source(const ReactionDiffusionModel& model, const Eigen::Ref<const Vector>& z) {
  require_dimension(model, z.size(), "eval_source");
  StateVector out(model.dimension());
  model.source_into(z, out);
  if (!out.allFinite()) throw DivergenceError("source term produced a non-finite value");
  return out;
}

Matrix finite_difference_jacobian(const ReactionDiffusionModel& model,
                                  const Eigen::Ref<const Vector>& z, double rel_step) {
  require_dimension(model, z.size(), "finite_difference_jacobian");
  const int n = model.dimension();
  Matrix jac(n, n);
  Vector zp = z;
  Vector zm = z;
  Vector fp(n);
  Vector fm(n);
  for (int k = 0; k < n; ++k) {
    const double h = rel_step * std::max(1.0, std::abs(z[k]));
    zp[k] = z[k] + h;
    zm[k] = z[k] - h;
    model.source_into(zp, fp);
    model.source_into(zm, fm);
    jac.col(k) = (fp - fm) / (2.0 * h);
    zp[k] = z[k];
    zm[k] = z[k];
  }
  return jac;
}

Matrix jacobian(const ReactionDiffusionModel& model, const Eigen::Ref<const Vector>& z) {
  require_dimension(model, z.size(), "jacobian");
  if (auto jac = model.analytic_jacobian(z)) return *std::move(jac);
  return finite_difference_jacobian(model, z);
}

namespace {

void require_interior(const SpatialProfile& profile, int node_index, const char* what) {
  if (node_index <= 0 || node_index >= profile.size() - 1) {
    throw ContractViolation(std::string(what) + ": node " + std::to_string(node_index) +
                            " is not interior (boundary values are Dirichlet-held)");
  }
}

}  // namespace

StateVector laplacian(const SpatialProfile& profile, int node_index) {
  require_interior(profile, node_index, "laplacian");
  const double dx = profile.grid().spacing();
  const auto& s = profile.states();
  return (s.col(node_index - 1) - 2.0 * s.col(node_index) + s.col(node_index + 1)) / (dx * dx);
}

StateVector eval_full_rhs(const ReactionDiffusionModel& model, const SpatialProfile& profile,
                          int node_index) {
  require_dimension(model, profile.dimension(), "eval_full_rhs");
  require_interior(profile, node_index, "eval_full_rhs");
  StateVector rhs = eval_source(model, profile.state(node_index));
  rhs += model.diffusion().cwiseProduct(laplacian(profile, node_index));
  return rhs;
}

bool WorkingBox::contains(const Eigen::Ref<const Vector>& z, double slack) const {
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (z[k] < lower[k] - slack || z[k] > upper[k] + slack) return false;
  }
  return true;
}

std::vector<StateVector> WorkingBox::vertices() const {
  const auto n = lower.size();
  std::vector<StateVector> out;
  const std::size_t count = std::size_t{1} << n;
  out.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    StateVector v(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool hi = (mask >> (n - 1 - k)) & 1U;
      v[k] = hi ? upper[k] : lower[k];
    }
    out.push_back(std::move(v));
  }
  return out;
}

double spectral_radius_bound(const Matrix& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace fastslow
