#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fastslow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point in species space. Its length is the owning model's dimension.
using StateVector = Eigen::VectorXd;

using ParameterList = std::vector<std::pair<std::string, double>>;

/// Uniform grid on [0, 1] with node_count >= 3 nodes.
class Grid1D {
 public:
  explicit Grid1D(int node_count);

  int size() const noexcept { return node_count_; }
  double spacing() const noexcept { return spacing_; }
  /// x_i = i * dx; the last node is exactly 1.
  double node(int i) const noexcept;
  std::vector<double> nodes() const;

  bool operator==(const Grid1D& other) const noexcept { return node_count_ == other.node_count_; }

 private:
  int node_count_;
  double spacing_;
};

/// Profile Gamma(x) sampled on a Grid1D, one state per node.
///
/// States are stored column-wise: column i is the state at node i.
class SpatialProfile {
 public:
  SpatialProfile(Grid1D grid, Matrix states);

  const Grid1D& grid() const noexcept { return grid_; }
  int dimension() const noexcept { return static_cast<int>(states_.rows()); }
  int size() const noexcept { return grid_.size(); }

  const Matrix& states() const noexcept { return states_; }
  Matrix& states() noexcept { return states_; }
  auto state(int i) const { return states_.col(i); }
  auto state(int i) { return states_.col(i); }

  /// Component k as a function of x.
  Vector component(int k) const { return states_.row(k).transpose(); }

 private:
  Grid1D grid_;
  Matrix states_;
};

/// Source term Phi(z) plus constant diagonal diffusion for a reaction-diffusion system
///   dz/dt = Phi(z) + D * z_xx.
class ReactionDiffusionModel {
 public:
  virtual ~ReactionDiffusionModel() = default;

  virtual int dimension() const = 0;
  virtual std::string name() const = 0;
  virtual std::vector<std::string> species() const;
  /// Parameters echoed into artifact provenance headers.
  virtual ParameterList parameters() const { return {}; }

  /// Writes Phi(z) into out. Implementations may assume sizes already match.
  virtual void source_into(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) const = 0;

  virtual std::optional<Matrix> analytic_jacobian(const Eigen::Ref<const Vector>& /*z*/) const {
    return std::nullopt;
  }

  /// Diagonal diffusion coefficients, all >= 0.
  virtual Vector diffusion() const = 0;
};

/// Phi(z). Throws ContractViolation on dimension mismatch and DivergenceError on non-finite output.
StateVector eval_source(const ReactionDiffusionModel& model, const Eigen::Ref<const Vector>& z);

/// Analytic Jacobian when the model has one, otherwise central differences.
Matrix jacobian(const ReactionDiffusionModel& model, const Eigen::Ref<const Vector>& z);

Matrix finite_difference_jacobian(const ReactionDiffusionModel& model,
                                  const Eigen::Ref<const Vector>& z, double rel_step = 1e-6);

/// Second difference (z_{i-1} - 2 z_i + z_{i+1}) / dx^2 at an interior node.
StateVector laplacian(const SpatialProfile& profile, int node_index);

/// Phi(z_i) + D * laplacian(profile, i) at an interior node. Boundary nodes are Dirichlet-held.
StateVector eval_full_rhs(const ReactionDiffusionModel& model, const SpatialProfile& profile,
                          int node_index);

/// Axis-aligned box in species space used for sampling and diagnostics.
struct WorkingBox {
  Vector lower;
  Vector upper;

  bool contains(const Eigen::Ref<const Vector>& z, double slack = 0.0) const;
  /// All 2^n corners, first coordinate varying slowest.
  std::vector<StateVector> vertices() const;
};

/// Upper bound on the spectral radius (max absolute row sum).
double spectral_radius_bound(const Matrix& m);

void require_dimension(const ReactionDiffusionModel& model, Eigen::Index size, const char* what);

}  // namespace fastslow
