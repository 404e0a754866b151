#include "fastslow/models.hpp"

#include <cmath>
#include <sstream>

#include "fastslow/errors.hpp"

namespace fastslow {

void MichaelisMentenParams::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ContractViolation(std::string("michaelis-menten parameter ") + name +
                              " must be a positive finite number");
    }
  };
  positive(L1, "L1");
  positive(L2, "L2");
  positive(L3, "L3");
  positive(L4, "L4");
  positive(mu, "mu");
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ContractViolation("michaelis-menten parameter delta must be >= 0");
  }
  if (L1 == 1.0) {
    throw ContractViolation("michaelis-menten parameter L1 must differ from 1");
  }
}

MichaelisMentenModel::MichaelisMentenModel(MichaelisMentenParams params) : params_(params) {
  params_.validate();
}

ParameterList MichaelisMentenModel::parameters() const {
  return {{"L1", params_.L1}, {"L2", params_.L2},   {"L3", params_.L3},
          {"L4", params_.L4}, {"mu", params_.mu}, {"delta", params_.delta}};
}

void MichaelisMentenModel::source_into(const Eigen::Ref<const Vector>& z,
                                       Eigen::Ref<Vector> out) const {
  const auto& p = params_;
  const double x = z[0];
  const double y = z[1];
  const double s = z[2];
  const double phi_y = -p.L3 * y * s + (p.L4 / p.L2) * (1.0 - y);
  out[0] = -x * s + p.L1 * (1.0 - s - p.mu * (1.0 - y));
  out[1] = phi_y;
  out[2] = ((-x * s + 1.0 - s - p.mu * (1.0 - y)) + p.mu * phi_y) / p.L2;
}

std::optional<Matrix> MichaelisMentenModel::analytic_jacobian(
    const Eigen::Ref<const Vector>& z) const {
  const auto& p = params_;
  const double x = z[0];
  const double y = z[1];
  const double s = z[2];
  const double dphiy_dy = -p.L3 * s - p.L4 / p.L2;
  const double dphiy_ds = -p.L3 * y;
  Matrix jac(3, 3);
  jac << -s, p.L1 * p.mu, -x - p.L1,
         0.0, dphiy_dy, dphiy_ds,
         -s / p.L2, (p.mu + p.mu * dphiy_dy) / p.L2, (-x - 1.0 + p.mu * dphiy_ds) / p.L2;
  return jac;
}

void LinearModelParams::validate() const {
  if (A.rows() != A.cols() || A.rows() < 1) {
    throw ContractViolation("linear model matrix must be square and non-empty");
  }
  if (shift.size() != A.rows()) throw ContractViolation("linear model shift has wrong size");
  if (diffusion.size() != A.rows()) {
    throw ContractViolation("linear model diffusion has wrong size");
  }
  if ((diffusion.array() < 0.0).any()) {
    throw ContractViolation("linear model diffusion coefficients must be >= 0");
  }
  const Eigen::VectorXcd eig = A.eigenvalues();
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  for (const auto& lam : eig) {
    if (std::abs(lam.real()) <= 1e-12 * scale) {
      throw ContractViolation("linear model matrix has an eigenvalue on the imaginary axis");
    }
  }
}

LinearModel::LinearModel(LinearModelParams params) : params_(std::move(params)) {
  params_.validate();
}

ParameterList LinearModel::parameters() const {
  ParameterList out;
  const auto n = params_.A.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out.emplace_back("A" + std::to_string(i + 1) + std::to_string(j + 1), params_.A(i, j));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out.emplace_back("shift" + std::to_string(i + 1), params_.shift[i]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out.emplace_back("D" + std::to_string(i + 1), params_.diffusion[i]);
  }
  return out;
}

void LinearModel::source_into(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) const {
  out.noalias() = params_.A * (z - params_.shift);
}

std::optional<Matrix> LinearModel::analytic_jacobian(const Eigen::Ref<const Vector>&) const {
  return params_.A;
}

StateVector equilibrium(const ReactionDiffusionModel& model, const StateVector& initial_guess,
                        const EquilibriumOptions& options) {
  require_dimension(model, initial_guess.size(), "equilibrium");
  if (!(options.tol > 0.0)) throw ContractViolation("equilibrium tolerance must be positive");

  StateVector z = initial_guess;
  StateVector f = eval_source(model, z);
  double norm = f.norm();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (f.lpNorm<Eigen::Infinity>() < options.tol) return z;

    const Matrix jac = jacobian(model, z);
    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
      std::ostringstream msg;
      msg << "singular Jacobian at Newton iterate " << iter;
      throw DecompositionError(msg.str());
    }
    const StateVector step = lu.solve(-f);

    double lambda = 1.0;
    StateVector trial = z + step;
    StateVector f_trial = eval_source(model, trial);
    for (int h = 0; h < options.max_halvings && f_trial.norm() >= norm; ++h) {
      lambda *= 0.5;
      trial = z + lambda * step;
      f_trial = eval_source(model, trial);
    }
    z = std::move(trial);
    f = std::move(f_trial);
    norm = f.norm();
  }
  if (f.lpNorm<Eigen::Infinity>() < options.tol) return z;
  throw ConvergenceError("equilibrium Newton iteration did not converge in " +
                             std::to_string(options.max_iterations) + " iterations",
                         f.lpNorm<Eigen::Infinity>());
}

}  // namespace fastslow
