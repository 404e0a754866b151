#include "fastslow/redim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

constexpr double kMaxGramCondition = 1e12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double reaction_dt(const ReactionDiffusionModel& model, const Eigen::Ref<const Vector>& z) {
  const double rho = spectral_radius_bound(jacobian(model, z));
  return rho > 0.0 ? 2.0 / rho : kInf;
}

Matrix checked_gram(const Matrix& psi_theta) {
  if (psi_theta.cols() < 1 || psi_theta.rows() < psi_theta.cols()) {
    throw ParametrizationError("tangent matrix must have at least as many rows as columns");
  }
  const Matrix gram = psi_theta.transpose() * psi_theta;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo >= kMaxGramCondition || !std::isfinite(hi)) {
    std::ostringstream msg;
    msg << "degenerate parametrization: tangent Gram matrix condition number "
        << (lo > 0.0 ? hi / lo : kInf);
    throw ParametrizationError(msg.str());
  }
  return gram;
}

}  // namespace

Matrix pseudo_inverse(const Matrix& psi_theta) {
  return checked_gram(psi_theta).ldlt().solve(psi_theta.transpose());
}

Matrix tangent_projector(const Matrix& psi_theta) {
  checked_gram(psi_theta);
  const auto n = psi_theta.rows();
  const Eigen::HouseholderQR<Matrix> qr(psi_theta);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, psi_theta.cols());
  return Matrix::Identity(n, n) - q * q.transpose();
}

double UniformAxis::node(int i) const noexcept {
  if (i == count - 1) return upper;
  return lower + static_cast<double>(i) * spacing();
}

void UniformAxis::validate(const char* what) const {
  if (count < 3) throw ContractViolation(std::string(what) + ": at least 3 nodes required");
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw ContractViolation(std::string(what) + ": range must be finite with upper > lower");
  }
}

GradientEstimate GradientEstimate::constant(const Vector& value) {
  if (value.size() < 1 || value.size() > 2) {
    throw ContractViolation("constant gradient estimate needs 1 or 2 components");
  }
  if (!value.allFinite()) throw ContractViolation("gradient estimate must be finite");
  GradientEstimate out;
  out.knots_ = {0.0};
  out.values_ = value.transpose();
  return out;
}

GradientEstimate GradientEstimate::from_profile(const SpatialProfile& profile, int manifold_dim) {
  if (manifold_dim != 1 && manifold_dim != 2) {
    throw ContractViolation("manifold dimension must be 1 or 2");
  }
  if (profile.dimension() < manifold_dim) {
    throw ContractViolation("profile has fewer species than manifold parameters");
  }
  const int n = profile.size();
  const double dx = profile.grid().spacing();
  const Matrix& s = profile.states();

  Matrix deriv(n, manifold_dim);
  for (int k = 0; k < manifold_dim; ++k) {
    deriv(0, k) = (-3.0 * s(k, 0) + 4.0 * s(k, 1) - s(k, 2)) / (2.0 * dx);
    deriv(n - 1, k) = (3.0 * s(k, n - 1) - 4.0 * s(k, n - 2) + s(k, n - 3)) / (2.0 * dx);
    for (int i = 1; i + 1 < n; ++i) deriv(i, k) = (s(k, i + 1) - s(k, i - 1)) / (2.0 * dx);
  }

  bool increasing = true;
  bool decreasing = true;
  for (int i = 0; i + 1 < n; ++i) {
    increasing = increasing && s(0, i + 1) > s(0, i);
    decreasing = decreasing && s(0, i + 1) < s(0, i);
  }
  if (!increasing && !decreasing) {
    throw ParametrizationError("first species is not strictly monotone along x; it cannot serve as the manifold parameter");
  }

  GradientEstimate out;
  out.knots_.resize(static_cast<std::size_t>(n));
  out.values_.resize(n, manifold_dim);
  for (int i = 0; i < n; ++i) {
    const int src = increasing ? i : n - 1 - i;
    out.knots_[static_cast<std::size_t>(i)] = s(0, src);
    out.values_.row(i) = deriv.row(src);
  }
  return out;
}

Vector GradientEstimate::at(double theta1) const {
  const auto& k = knots_;
  if (theta1 <= k.front()) return values_.row(0).transpose();
  if (theta1 >= k.back()) return values_.row(values_.rows() - 1).transpose();
  const auto hi = std::upper_bound(k.begin(), k.end(), theta1) - k.begin();
  const auto lo = hi - 1;
  const double w = (theta1 - k[static_cast<std::size_t>(lo)]) /
                   (k[static_cast<std::size_t>(hi)] - k[static_cast<std::size_t>(lo)]);
  return ((1.0 - w) * values_.row(lo) + w * values_.row(hi)).transpose();
}

StateVector Manifold2D::state(int i, int j) const {
  return StateVector{{theta1.node(i), theta2.node(j), Z(i, j)}};
}

double Manifold2D::evaluate(double t1, double t2) const {
  constexpr double slack = 1e-12;
  if (t1 < theta1.lower - slack || t1 > theta1.upper + slack || t2 < theta2.lower - slack ||
      t2 > theta2.upper + slack) {
    std::ostringstream msg;
    msg << "point (" << t1 << ", " << t2 << ") lies outside the manifold parameter domain";
    throw ContractViolation(msg.str());
  }
  const auto locate = [](const UniformAxis& ax, double t, int& cell, double& w) {
    const double u = std::clamp((t - ax.lower) / ax.spacing(), 0.0, static_cast<double>(ax.count - 1));
    cell = std::min(static_cast<int>(u), ax.count - 2);
    w = u - cell;
  };
  int i = 0;
  int j = 0;
  double wi = 0.0;
  double wj = 0.0;
  locate(theta1, t1, i, wi);
  locate(theta2, t2, j, wj);
  return (1.0 - wi) * ((1.0 - wj) * Z(i, j) + wj * Z(i, j + 1)) +
         wi * ((1.0 - wj) * Z(i + 1, j) + wj * Z(i + 1, j + 1));
}

StateVector local_diffusion_1d(const ReactionDiffusionModel& model, const Manifold1D& manifold, int j) {
  require_dimension(model, manifold.states.rows(), "local_diffusion_1d");
  if (j <= 0 || j >= manifold.size() - 1) {
    throw ContractViolation("local_diffusion_1d: node " + std::to_string(j) + " is not interior");
  }
  const double h = manifold.theta.spacing();
  const auto& s = manifold.states;
  const double chi = manifold.chi[j];
  StateVector out = model.diffusion().cwiseProduct(s.col(j - 1) - 2.0 * s.col(j) + s.col(j + 1)) *
                    (chi * chi / (h * h));
  out[0] = 0.0;
  return out;
}

double local_diffusion_2d(const ReactionDiffusionModel& model, const Manifold2D& manifold, int i,
                          int j) {
  require_dimension(model, 3, "local_diffusion_2d");
  if (i <= 0 || i >= manifold.theta1.count - 1 || j <= 0 || j >= manifold.theta2.count - 1) {
    throw ContractViolation("local_diffusion_2d: node is not interior");
  }
  const auto& z = manifold.Z;
  const double d1 = manifold.theta1.spacing();
  const double d2 = manifold.theta2.spacing();
  const double z11 = (z(i + 1, j) - 2.0 * z(i, j) + z(i - 1, j)) / (d1 * d1);
  const double z22 = (z(i, j + 1) - 2.0 * z(i, j) + z(i, j - 1)) / (d2 * d2);
  const double z12 = (z(i + 1, j + 1) - z(i + 1, j - 1) - z(i - 1, j + 1) + z(i - 1, j - 1)) /
                     (4.0 * d1 * d2);
  const double a = manifold.grad1(i, j);
  const double b = manifold.grad2(i, j);
  return model.diffusion()[2] * (a * a * z11 + 2.0 * a * b * z12 + b * b * z22);
}

namespace {

StateVector tangent_1d(const Manifold1D& m, int j) {
  return (m.states.col(j + 1) - m.states.col(j - 1)) / (2.0 * m.theta.spacing());
}

StateVector total_field_1d(const ReactionDiffusionModel& model, const Manifold1D& m, int j) {
  return eval_source(model, m.states.col(j)) + local_diffusion_1d(model, m, j);
}

}  // namespace

Vector redim_rhs_1d(const ReactionDiffusionModel& model, const Manifold1D& manifold, int j) {
  const StateVector g = total_field_1d(model, manifold, j);
  const StateVector t = tangent_1d(manifold, j);
  const auto n = g.size();
  return g.tail(n - 1) - t.tail(n - 1) * g[0];
}

double projected_residual_1d(const ReactionDiffusionModel& model, const Manifold1D& manifold, int j) {
  const StateVector g = total_field_1d(model, manifold, j);
  const Matrix p = tangent_projector(tangent_1d(manifold, j));
  return (p * g).norm();
}

double redim_rhs_2d(const ReactionDiffusionModel& model, const Manifold2D& manifold, int i, int j) {
  const StateVector z = manifold.state(i, j);
  const StateVector g = eval_source(model, z);
  const double gz = g[2] + local_diffusion_2d(model, manifold, i, j);
  const auto& m = manifold.Z;
  const double z1 = (m(i + 1, j) - m(i - 1, j)) / (2.0 * manifold.theta1.spacing());
  const double z2 = (m(i, j + 1) - m(i, j - 1)) / (2.0 * manifold.theta2.spacing());
  return gz - z1 * g[0] - z2 * g[1];
}

void RedimSettings::validate() const {
  if (!(tol > 0.0)) throw ContractViolation("redim tolerance must be positive");
  if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw ContractViolation("dt_safety must be in (0, 1]");
  if (max_steps < 1) throw ContractViolation("max_steps must be >= 1");
}

Redim1DResult evolve_redim_1d(const ReactionDiffusionModel& model, const UniformAxis& theta,
                              const GradientEstimate& grad, const StateVector& left_anchor,
                              const StateVector& right_anchor, const RedimSettings& settings) {
  theta.validate("1-D manifold theta grid");
  require_dimension(model, left_anchor.size(), "evolve_redim_1d left anchor");
  require_dimension(model, right_anchor.size(), "evolve_redim_1d right anchor");
  if (left_anchor[0] != theta.lower || right_anchor[0] != theta.upper) {
    throw ContractViolation("anchor parameter values must equal the ends of the theta range");
  }
  Manifold1D m;
  m.theta = theta;
  m.states.resize(model.dimension(), theta.count);
  m.chi.resize(theta.count);
  for (int j = 0; j < theta.count; ++j) {
    const double w = (theta.node(j) - theta.lower) / (theta.upper - theta.lower);
    if (j == 0) {
      m.states.col(j) = left_anchor;
    } else if (j == theta.count - 1) {
      m.states.col(j) = right_anchor;
    } else {
      m.states.col(j) = left_anchor + w * (right_anchor - left_anchor);
      m.states(0, j) = theta.node(j);
    }
    m.chi[j] = grad.at(theta.node(j))[0];
  }
  return evolve_redim_1d(model, std::move(m), settings);
}

Redim1DResult evolve_redim_1d(const ReactionDiffusionModel& model, Manifold1D m,
                              const RedimSettings& settings) {
  settings.validate();
  m.theta.validate("1-D manifold theta grid");
  require_dimension(model, m.states.rows(), "evolve_redim_1d");
  const int count = m.size();
  if (m.states.cols() != count || m.chi.size() != count) {
    throw ContractViolation("manifold arrays do not match the theta grid");
  }
  for (int j = 0; j < count; ++j) {
    if (m.states(0, j) != m.theta.node(j)) {
      throw ContractViolation("manifold is not in graph form: first component must equal theta");
    }
  }

  const int n = model.dimension();
  const int free = n - 1;
  const double h = m.theta.spacing();
  const double max_d = model.diffusion().maxCoeff();

  Vector dt_static(count);
  for (int j = 0; j < count; ++j) {
    const double c2 = m.chi[j] * m.chi[j];
    dt_static[j] = (max_d > 0.0 && c2 > 0.0) ? h * h / (2.0 * max_d * c2) : kInf;
  }

  Matrix k1 = Matrix::Zero(free, count);
  Matrix k2 = k1;
  Matrix k3 = k1;
  Matrix k4 = k1;
  Vector dt(count);
  dt.setZero();
  Manifold1D stage = m;

  const auto eval = [&](const Manifold1D& cur, Matrix& out) {
    for (int j = 1; j + 1 < count; ++j) out.col(j) = redim_rhs_1d(model, cur, j);
    if (!out.allFinite()) throw DivergenceError("non-finite REDIM right-hand side");
  };
  const auto apply = [&](const Matrix& from, const Matrix& k, double scale, Manifold1D& to) {
    for (int j = 1; j + 1 < count; ++j) {
      to.states.col(j).tail(free) = from.col(j).tail(free) + scale * dt[j] * k.col(j);
    }
  };

  double residual = kInf;
  long steps = 0;
  while (true) {
    eval(m, k1);
    residual = k1.lpNorm<Eigen::Infinity>();
    if (residual < settings.tol) break;
    if (steps >= settings.max_steps) {
      std::ostringstream msg;
      msg << "1-D REDIM did not converge in " << settings.max_steps << " steps (residual "
          << residual << ")";
      throw ConvergenceError(msg.str(), residual);
    }
    for (int j = 1; j + 1 < count; ++j) {
      const StateVector z = m.states.col(j);
      const double gx = eval_source(model, z)[0];
      const double dt_adv = gx != 0.0 ? h / std::abs(gx) : kInf;
      dt[j] = settings.dt_safety * std::min({dt_static[j], reaction_dt(model, z), dt_adv});
    }
    if (!settings.local_time_stepping) {
      dt.segment(1, count - 2).setConstant(dt.segment(1, count - 2).minCoeff());
    }
    const Matrix start = m.states;
    apply(start, k1, 0.5, stage);
    eval(stage, k2);
    apply(start, k2, 0.5, stage);
    eval(stage, k3);
    apply(start, k3, 1.0, stage);
    eval(stage, k4);
    const Matrix incr = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    apply(start, incr, 1.0, m);
    if (!m.states.allFinite()) throw DivergenceError("non-finite state during REDIM evolution");
    ++steps;
  }
  return {std::move(m), steps, residual};
}

Manifold2D initial_manifold_2d(const UniformAxis& theta1, const UniformAxis& theta2,
                               const GradientEstimate& grad, double z_at_theta1_lower,
                               double z_at_theta1_upper) {
  theta1.validate("2-D manifold theta1 grid");
  theta2.validate("2-D manifold theta2 grid");
  if (grad.components() != 2) {
    throw ContractViolation("2-D manifold needs a two-component gradient estimate");
  }
  Manifold2D m;
  m.theta1 = theta1;
  m.theta2 = theta2;
  m.Z.resize(theta1.count, theta2.count);
  m.grad1.resize(theta1.count, theta2.count);
  m.grad2.resize(theta1.count, theta2.count);
  for (int i = 0; i < theta1.count; ++i) {
    const double t1 = theta1.node(i);
    const double w = (t1 - theta1.lower) / (theta1.upper - theta1.lower);
    const Vector g = grad.at(t1);
    for (int j = 0; j < theta2.count; ++j) {
      m.Z(i, j) = z_at_theta1_lower + (z_at_theta1_upper - z_at_theta1_lower) * w;
      m.grad1(i, j) = g[0];
      m.grad2(i, j) = g[1];
    }
  }
  return m;
}

namespace {

/// Z padded with one ghost row/column on each side, filled per edge mode.
void fill_padded(const Matrix& z, const EdgeModes& edges, Matrix& p) {
  const auto m1 = z.rows();
  const auto m2 = z.cols();
  p.block(1, 1, m1, m2) = z;
  const auto ghost = [](EdgeMode mode, auto edge, auto inner) {
    return mode == EdgeMode::extrapolate ? (2.0 * edge - inner).eval() : inner.eval();
  };
  p.row(0).segment(1, m2) = ghost(edges.theta1_lower, z.row(0), z.row(1));
  p.row(m1 + 1).segment(1, m2) = ghost(edges.theta1_upper, z.row(m1 - 1), z.row(m1 - 2));
  p.col(0) = ghost(edges.theta2_lower, p.col(1), p.col(2));
  p.col(m2 + 1) = ghost(edges.theta2_upper, p.col(m2), p.col(m2 - 1));
}

}  // namespace

Redim2DResult evolve_redim_2d(const ReactionDiffusionModel& model, Manifold2D m,
                              const EdgeModes& edges, const RedimSettings& settings) {
  settings.validate();
  if (model.dimension() != 3) {
    throw ContractViolation("2-D graph-form REDIM is defined for three-species models");
  }
  m.theta1.validate("2-D manifold theta1 grid");
  m.theta2.validate("2-D manifold theta2 grid");
  const int m1 = m.theta1.count;
  const int m2 = m.theta2.count;
  if (m.Z.rows() != m1 || m.Z.cols() != m2 || m.grad1.rows() != m1 || m.grad1.cols() != m2 ||
      m.grad2.rows() != m1 || m.grad2.cols() != m2) {
    throw ContractViolation("manifold arrays do not match the theta grids");
  }

  const double d1 = m.theta1.spacing();
  const double d2 = m.theta2.spacing();
  const double dz = model.diffusion()[2];

  // Nodes on held edges keep their initial values.
  const int i_lo = edges.theta1_lower == EdgeMode::held ? 1 : 0;
  const int i_hi = edges.theta1_upper == EdgeMode::held ? m1 - 2 : m1 - 1;
  const int j_lo = edges.theta2_lower == EdgeMode::held ? 1 : 0;
  const int j_hi = edges.theta2_upper == EdgeMode::held ? m2 - 2 : m2 - 1;

  Matrix dt_static = Matrix::Constant(m1, m2, kInf);
  for (int i = 0; i < m1; ++i) {
    for (int j = 0; j < m2; ++j) {
      const double a = m.grad1(i, j);
      const double b = m.grad2(i, j);
      const double denom = 2.0 * dz * (a * a / (d1 * d1) + b * b / (d2 * d2) + std::abs(a * b) / (d1 * d2));
      if (denom > 0.0) dt_static(i, j) = 1.0 / denom;
    }
  }

  Matrix padded(m1 + 2, m2 + 2);
  Matrix gx(m1, m2);
  Matrix gy(m1, m2);
  Vector z(3);
  Vector g(3);
  const auto eval = [&](const Matrix& cur, Matrix& out) {
    fill_padded(cur, edges, padded);
    for (int i = i_lo; i <= i_hi; ++i) {
      for (int j = j_lo; j <= j_hi; ++j) {
        const int pi = i + 1;
        const int pj = j + 1;
        z << m.theta1.node(i), m.theta2.node(j), cur(i, j);
        model.source_into(z, g);
        const double c = padded(pi, pj);
        const double z1 = (padded(pi + 1, pj) - padded(pi - 1, pj)) / (2.0 * d1);
        const double z2 = (padded(pi, pj + 1) - padded(pi, pj - 1)) / (2.0 * d2);
        const double z11 = (padded(pi + 1, pj) - 2.0 * c + padded(pi - 1, pj)) / (d1 * d1);
        const double z22 = (padded(pi, pj + 1) - 2.0 * c + padded(pi, pj - 1)) / (d2 * d2);
        const double z12 = (padded(pi + 1, pj + 1) - padded(pi + 1, pj - 1) -
                            padded(pi - 1, pj + 1) + padded(pi - 1, pj - 1)) /
                           (4.0 * d1 * d2);
        const double a = m.grad1(i, j);
        const double b = m.grad2(i, j);
        out(i, j) = g[2] + dz * (a * a * z11 + 2.0 * a * b * z12 + b * b * z22) - z1 * g[0] -
                    z2 * g[1];
        gx(i, j) = g[0];
        gy(i, j) = g[1];
      }
    }
    if (!out.allFinite()) throw DivergenceError("non-finite REDIM right-hand side");
  };

  Matrix k1 = Matrix::Zero(m1, m2);
  Matrix k2 = k1;
  Matrix k3 = k1;
  Matrix k4 = k1;
  Matrix dt = Matrix::Zero(m1, m2);
  Matrix stage(m1, m2);

  double residual = kInf;
  long steps = 0;
  while (true) {
    eval(m.Z, k1);
    residual = k1.lpNorm<Eigen::Infinity>();
    if (residual < settings.tol) break;
    if (steps >= settings.max_steps) {
      std::ostringstream msg;
      msg << "2-D REDIM did not converge in " << settings.max_steps << " steps (residual "
          << residual << ")";
      throw ConvergenceError(msg.str(), residual);
    }
    double dt_min = kInf;
    for (int i = i_lo; i <= i_hi; ++i) {
      for (int j = j_lo; j <= j_hi; ++j) {
        const double adv = std::abs(gx(i, j)) / d1 + std::abs(gy(i, j)) / d2;
        const double dt_adv = adv > 0.0 ? 1.0 / adv : kInf;
        z << m.theta1.node(i), m.theta2.node(j), m.Z(i, j);
        dt(i, j) = settings.dt_safety * std::min({dt_static(i, j), reaction_dt(model, z), dt_adv});
        dt_min = std::min(dt_min, dt(i, j));
      }
    }
    if (!settings.local_time_stepping) {
      dt.block(i_lo, j_lo, i_hi - i_lo + 1, j_hi - j_lo + 1).setConstant(dt_min);
    }
    stage = m.Z + 0.5 * dt.cwiseProduct(k1);
    eval(stage, k2);
    stage = m.Z + 0.5 * dt.cwiseProduct(k2);
    eval(stage, k3);
    stage = m.Z + dt.cwiseProduct(k3);
    eval(stage, k4);
    m.Z += dt.cwiseProduct(k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    if (!m.Z.allFinite()) throw DivergenceError("non-finite state during REDIM evolution");
    ++steps;
  }
  return {std::move(m), steps, residual};
}

}  // namespace fastslow
