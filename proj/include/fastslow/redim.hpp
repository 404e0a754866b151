#pragma once

#include <array>
#include <vector>

#include "fastslow/core.hpp"

namespace fastslow {

/// Moore-Penrose pseudo-inverse (A^T A)^{-1} A^T of a full-column-rank n x m matrix.
/// Throws ParametrizationError when the Gram matrix has condition number >= 1e12.
Matrix pseudo_inverse(const Matrix& psi_theta);

/// I - A A^+, the projector onto the complement of the tangent space spanned by A's columns,
/// formed as I - Q Q^T from a Householder QR basis of A.
Matrix tangent_projector(const Matrix& psi_theta);

/// Uniform nodes on [lower, upper].
struct UniformAxis {
  double lower = 0.0;
  double upper = 1.0;
  int count = 3;

  double spacing() const noexcept { return (upper - lower) / (count - 1); }
  /// The last node is exactly upper.
  double node(int i) const noexcept;
  void validate(const char* what) const;
};

/// Closure for the spatial gradient of the manifold parameters, as a function of theta1.
///
/// One component (theta_x) for 1-D manifolds, two (theta1_x, theta2_x) for 2-D manifolds.
/// Values are piecewise linear between knots and constant beyond them.
class GradientEstimate {
 public:
  static GradientEstimate constant(const Vector& value);

  /// dX/dx (and dY/dx for manifold_dim 2) of the profile, indexed by X(x).
  /// Throws ParametrizationError when X is not strictly monotone along x.
  static GradientEstimate from_profile(const SpatialProfile& profile, int manifold_dim);

  int components() const noexcept { return static_cast<int>(values_.cols()); }
  Vector at(double theta1) const;

  const std::vector<double>& knots() const noexcept { return knots_; }
  const Matrix& values() const noexcept { return values_; }

 private:
  std::vector<double> knots_;
  Matrix values_;
};

/// Graph-form curve Psi(theta) with component 0 equal to theta.
struct Manifold1D {
  UniformAxis theta;
  /// n x M; column j is Psi(theta_j).
  Matrix states;
  /// theta_x at each node.
  Vector chi;

  int size() const noexcept { return theta.count; }
};

/// Graph-form surface Z(theta1, theta2) of a three-species model with X = theta1, Y = theta2.
struct Manifold2D {
  UniformAxis theta1;
  UniformAxis theta2;
  /// M1 x M2.
  Matrix Z;
  /// Gradient estimate (theta1_x, theta2_x) at each node, M1 x M2 each.
  Matrix grad1;
  Matrix grad2;

  StateVector state(int i, int j) const;
  /// Bilinear interpolation of Z. Throws ContractViolation outside the parameter domain.
  double evaluate(double t1, double t2) const;
};

/// D chi_j^2 (Psi_{j-1} - 2 Psi_j + Psi_{j+1}) / dtheta^2 at an interior node.
StateVector local_diffusion_1d(const ReactionDiffusionModel& model, const Manifold1D& manifold, int j);

/// D_Z (a, b) Hess(Z) (a, b)^T with central differences at an interior node.
double local_diffusion_2d(const ReactionDiffusionModel& model, const Manifold2D& manifold, int i,
                          int j);

/// Graph-form normal evolution at an interior node: G - G_X Psi_theta with
/// G = Phi + local_diffusion_1d. Returns the n - 1 non-parameter components.
Vector redim_rhs_1d(const ReactionDiffusionModel& model, const Manifold1D& manifold, int j);

/// |(I - Psi_theta Psi_theta^+) G| at an interior node, Psi_theta by central differences.
double projected_residual_1d(const ReactionDiffusionModel& model, const Manifold1D& manifold, int j);

/// G_Z - Z_theta1 G_X - Z_theta2 G_Y at an interior node.
double redim_rhs_2d(const ReactionDiffusionModel& model, const Manifold2D& manifold, int i, int j);

struct RedimSettings {
  double tol = 1e-8;
  double dt_safety = 0.8;
  long max_steps = 2'000'000;
  /// Per-node pseudo-time steps; the stationary manifold is unchanged, only the path to it.
  bool local_time_stepping = true;

  void validate() const;
};

struct Redim1DResult {
  Manifold1D manifold;
  long steps;
  double residual;
};

/// Relaxes the straight line between the anchors under redim_rhs_1d with the anchors held.
/// The anchors' first components must equal the ends of the theta range.
/// Throws ConvergenceError after max_steps and DivergenceError on non-finite values.
Redim1DResult evolve_redim_1d(const ReactionDiffusionModel& model, const UniformAxis& theta,
                              const GradientEstimate& grad, const StateVector& left_anchor,
                              const StateVector& right_anchor, const RedimSettings& settings = {});

/// Relaxes a caller-supplied initial curve; its end states are held.
Redim1DResult evolve_redim_1d(const ReactionDiffusionModel& model, Manifold1D initial,
                              const RedimSettings& settings = {});

/// Treatment of one edge of the 2-D parameter domain.
///   held:        Dirichlet at the initial values.
///   mirror:      evolved with a mirrored ghost row (zero normal derivative).
///   extrapolate: evolved with a linearly extrapolated ghost row (zero normal curvature).
enum class EdgeMode { held, mirror, extrapolate };

/// Edge modes in the order theta1 = min, theta1 = max, theta2 = min, theta2 = max.
struct EdgeModes {
  EdgeMode theta1_lower = EdgeMode::held;
  EdgeMode theta1_upper = EdgeMode::held;
  EdgeMode theta2_lower = EdgeMode::mirror;
  EdgeMode theta2_upper = EdgeMode::mirror;

  static EdgeModes all(EdgeMode mode) { return {mode, mode, mode, mode}; }
};

struct Redim2DResult {
  Manifold2D manifold;
  long steps;
  double residual;
};

/// Surface built on the theta grids with the gradient estimate sampled at each node and
/// Z initialised to the straight line between the anchors' Z values along theta1.
Manifold2D initial_manifold_2d(const UniformAxis& theta1, const UniformAxis& theta2,
                               const GradientEstimate& grad, double z_at_theta1_lower,
                               double z_at_theta1_upper);

/// Relaxes Z under dZ = G_Z - Z_theta1 G_X - Z_theta2 G_Y, G = Phi + local diffusion.
Redim2DResult evolve_redim_2d(const ReactionDiffusionModel& model, Manifold2D initial,
                              const EdgeModes& edges = {}, const RedimSettings& settings = {});

}  // namespace fastslow
