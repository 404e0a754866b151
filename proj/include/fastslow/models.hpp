#pragma once

#include <memory>
#include <string>

#include "fastslow/core.hpp"

namespace fastslow {

/// Dimensionless rate-constant ratios of the three-species enzyme model and its
/// diffusion coefficient.
struct MichaelisMentenParams {
  double L1 = 0.99;
  double L2 = 1.0;
  double L3 = 0.05;
  double L4 = 0.1;
  double mu = 1.0;
  double delta = 0.01;

  /// Throws ContractViolation unless the rates are positive, delta >= 0 and L1 != 1.
  void validate() const;
};

/// Three-species Michaelis-Menten system in (X, Y, Z):
///
///   Phi_X = -XZ + L1 (1 - Z - mu (1 - Y))
///   Phi_Y = -L3 Y Z + (L4 / L2) (1 - Y)
///   Phi_Z = (1 / L2) [ (-XZ + 1 - Z - mu (1 - Y)) + mu (-L3 Y Z + (L4 / L2) (1 - Y)) ]
///
/// with the same diffusion coefficient delta for every species.
class MichaelisMentenModel final : public ReactionDiffusionModel {
 public:
  explicit MichaelisMentenModel(MichaelisMentenParams params = {});

  const MichaelisMentenParams& params() const noexcept { return params_; }

  int dimension() const override { return 3; }
  std::string name() const override { return "michaelis-menten"; }
  std::vector<std::string> species() const override { return {"X", "Y", "Z"}; }
  ParameterList parameters() const override;

  void source_into(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) const override;
  std::optional<Matrix> analytic_jacobian(const Eigen::Ref<const Vector>& z) const override;
  Vector diffusion() const override { return Vector::Constant(3, params_.delta); }

  /// [0,2] x [0,1] x [0,1]: hull of the boundary data and the equilibrium.
  static StateVector working_box_lower() { return StateVector::Zero(3); }
  static StateVector working_box_upper() { return StateVector{{2.0, 1.0, 1.0}}; }
  static WorkingBox working_box() { return {working_box_lower(), working_box_upper()}; }
  /// Dirichlet state at x = 1.
  static StateVector boundary_state() { return StateVector{{2.0, 0.0, 1.0}}; }

 private:
  MichaelisMentenParams params_;
};

/// Linear test field F(z) = A (z - z_star) with diagonal diffusion.
struct LinearModelParams {
  Matrix A;
  StateVector shift;
  Vector diffusion;

  /// Throws ContractViolation for mismatched sizes, negative diffusion or a non-hyperbolic A.
  void validate() const;
};

class LinearModel final : public ReactionDiffusionModel {
 public:
  explicit LinearModel(LinearModelParams params);

  const LinearModelParams& params() const noexcept { return params_; }

  int dimension() const override { return static_cast<int>(params_.A.rows()); }
  std::string name() const override { return "linear"; }
  ParameterList parameters() const override;

  void source_into(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) const override;
  std::optional<Matrix> analytic_jacobian(const Eigen::Ref<const Vector>& z) const override;
  Vector diffusion() const override { return params_.diffusion; }

 private:
  LinearModelParams params_;
};

struct EquilibriumOptions {
  double tol = 1e-12;
  int max_iterations = 100;
  int max_halvings = 40;
};

/// Damped Newton iteration on Phi(z) = 0. The step is halved while the residual norm
/// does not decrease.
///
/// Throws DecompositionError on a singular Jacobian and ConvergenceError after
/// max_iterations without |Phi|_inf < tol.
StateVector equilibrium(const ReactionDiffusionModel& model, const StateVector& initial_guess,
                        const EquilibriumOptions& options = {});

}  // namespace fastslow
