#include <doctest.h>

#include <functional>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "fastslow/errors.hpp"
#include "support.hpp"

using namespace fastslow;
using namespace fastslow::testing;

namespace {

Manifold1D curve(const UniformAxis& theta, double chi,
                 const std::function<Vector(double)>& psi) {
  Manifold1D m{theta, Matrix(3, theta.count), Vector::Constant(theta.count, chi)};
  for (int j = 0; j < theta.count; ++j) m.states.col(j) = psi(theta.node(j));
  return m;
}

Manifold2D surface(const UniformAxis& t1, const UniformAxis& t2, double a, double b,
                   const std::function<double(double, double)>& z) {
  Manifold2D m{t1, t2, Matrix(t1.count, t2.count), Matrix::Constant(t1.count, t2.count, a),
               Matrix::Constant(t1.count, t2.count, b)};
  for (int i = 0; i < t1.count; ++i) {
    for (int j = 0; j < t2.count; ++j) m.Z(i, j) = z(t1.node(i), t2.node(j));
  }
  return m;
}

double sup_curve_distance(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) d = std::max(d, distance_to_polyline(b, a.col(j)));
  for (Eigen::Index j = 0; j < b.cols(); ++j) d = std::max(d, distance_to_polyline(a, b.col(j)));
  return d;
}

}  // namespace

TEST_CASE("pseudo-inverse reference values") {
  CHECK((pseudo_inverse(Vector{{1.0, 0.0, 0.0}}) - Matrix{{1.0, 0.0, 0.0}}).norm() < 1e-15);
  CHECK((pseudo_inverse(Vector{{1.0, 1.0, 1.0}}) - Matrix::Constant(1, 3, 1.0 / 3.0)).norm() < 1e-15);
  const Matrix e12 = Matrix::Identity(3, 2);
  CHECK((pseudo_inverse(e12) - e12.transpose()).norm() < 1e-15);
  CHECK_THROWS_AS(pseudo_inverse(Matrix{{1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}}), ParametrizationError);
  CHECK_THROWS_AS(pseudo_inverse(Matrix::Zero(3, 1)), ParametrizationError);
}

TEST_CASE("pseudo-inverse agrees with complete orthogonal decomposition") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 1000; ++k) {
    const Matrix a = random_matrix(rng, 3, 1 + k % 2, -2.0, 2.0);
    const Matrix p = pseudo_inverse(a);
    const Matrix ref = a.completeOrthogonalDecomposition().pseudoInverse();
    CHECK((p - ref).norm() < 1e-9 * std::max(1.0, ref.norm()));
    CHECK((p * a - Matrix::Identity(a.cols(), a.cols())).norm() < 1e-12 * std::max(1.0, ref.norm() * a.norm()));
  }
}

TEST_CASE("projector identities on random tangents") {
  std::mt19937_64 rng(19);
  int checked = 0;
  for (int k = 0; k < 1000; ++k) {
    const Matrix a = random_matrix(rng, 3, 1 + k % 2, -2.0, 2.0);
    const Matrix p = tangent_projector(a);
    CHECK((p * p - p).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((p.transpose() - p).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((p * a).lpNorm<Eigen::Infinity>() < 1e-12);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("one-dimensional projector has the outer-product form") {
  CHECK((tangent_projector(Vector{{1.0, 0.0, 0.0}}) - Vector{{0.0, 1.0, 1.0}}.asDiagonal().toDenseMatrix())
            .norm() < 1e-15);
  const Vector t{{1.0, -0.4, 2.5}};
  const Matrix expected = Matrix::Identity(3, 3) - t * t.transpose() / t.squaredNorm();
  CHECK((tangent_projector(t) - expected).norm() < 1e-14);
}

TEST_CASE("uniform axis") {
  const UniformAxis a{0.25, 2.0, 8};
  CHECK(a.node(0) == 0.25);
  CHECK(a.node(7) == 2.0);
  CHECK_THROWS_AS((UniformAxis{0.0, 1.0, 2}.validate("axis")), ContractViolation);
  CHECK_THROWS_AS((UniformAxis{1.0, 1.0, 5}.validate("axis")), ContractViolation);
}

TEST_CASE("gradient estimate from a linear profile") {
  const Grid1D grid(51);
  Matrix s(3, 51);
  for (int i = 0; i < 51; ++i) s.col(i) = Vector{{2.0 * grid.node(i), 0.5, 0.1 * grid.node(i)}};
  const auto g1 = GradientEstimate::from_profile(SpatialProfile(grid, s), 1);
  for (double t : {-1.0, 0.0, 0.3, 1.7, 2.0, 5.0}) CHECK(g1.at(t)[0] == doctest::Approx(2.0).epsilon(1e-12));
  const auto g2 = GradientEstimate::from_profile(SpatialProfile(grid, s), 2);
  CHECK(g2.components() == 2);
  CHECK(g2.at(1.0)[1] == doctest::Approx(0.0).scale(1.0));

  const SpatialProfile flat(grid, Vector{{1.0, 0.5, 0.5}}.replicate(1, 51));
  CHECK_THROWS_AS(GradientEstimate::from_profile(flat, 1), ParametrizationError);
  CHECK_THROWS_AS(GradientEstimate::constant(Vector::Zero(3)), ContractViolation);
}

TEST_CASE("gradient estimate of the stationary profile is positive") {
  const auto g = GradientEstimate::from_profile(mm_stationary().profile, 1);
  for (int k = 0; k <= 200; ++k) CHECK(g.at(2.0 * k / 200.0)[0] > 0.0);
  const double first = g.knots().front();
  CHECK(g.at(first - 1.0)[0] == g.values()(0, 0));
}

TEST_CASE("local diffusion on curves") {
  const UniformAxis theta{0.0, 2.0, 21};
  const auto line = curve(theta, 3.0, [](double t) { return Vector{{t, 0.2 + 0.1 * t, 1.0 - t}}; });
  const auto quad = curve(theta, 1.0, [](double t) { return Vector{{t, t * t, 0.0}}; });
  const auto frozen = curve(theta, 0.0, [](double t) { return Vector{{t, t * t, std::sin(t)}}; });
  for (int j = 1; j < 20; ++j) {
    CHECK(local_diffusion_1d(mm(), line, j).norm() < 1e-14);
    const Vector q = local_diffusion_1d(mm(), quad, j);
    CHECK(q[0] == 0.0);
    CHECK(q[1] == doctest::Approx(0.02).epsilon(1e-10));
    CHECK(local_diffusion_1d(mm(), frozen, j).norm() == 0.0);
  }
  CHECK_THROWS_AS(local_diffusion_1d(mm(), line, 0), ContractViolation);
  CHECK_THROWS_AS(local_diffusion_1d(mm(), line, 20), ContractViolation);
}

TEST_CASE("local diffusion on surfaces") {
  const UniformAxis t1{0.0, 2.0, 11};
  const UniformAxis t2{0.0, 1.0, 11};
  const auto plane = surface(t1, t2, 0.7, -0.3, [](double a, double b) { return 0.3 + a - 2.0 * b; });
  const auto sq = surface(t1, t2, 1.0, 0.0, [](double a, double) { return a * a; });
  const auto mixed = surface(t1, t2, 1.0, 1.0, [](double a, double b) { return a * b; });
  for (int i = 1; i < 10; ++i) {
    for (int j = 1; j < 10; ++j) {
      CHECK(std::abs(local_diffusion_2d(mm(), plane, i, j)) < 1e-13);
      CHECK(local_diffusion_2d(mm(), sq, i, j) == doctest::Approx(0.02).epsilon(1e-10));
      CHECK(local_diffusion_2d(mm(), mixed, i, j) == doctest::Approx(0.02).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(local_diffusion_2d(mm(), plane, 0, 5), ContractViolation);
  CHECK_THROWS_AS(local_diffusion_2d(mm(), plane, 5, 10), ContractViolation);
}

TEST_CASE("surface evaluation") {
  const UniformAxis t1{0.0, 2.0, 11};
  const UniformAxis t2{0.0, 1.0, 11};
  const auto plane = surface(t1, t2, 1.0, 0.0, [](double a, double b) { return 0.3 + a - 2.0 * b; });
  CHECK(plane.evaluate(0.37, 0.81) == doctest::Approx(0.3 + 0.37 - 1.62).epsilon(1e-13));
  CHECK(plane.state(2, 3) == StateVector{{t1.node(2), t2.node(3), plane.Z(2, 3)}});
  CHECK_THROWS_AS(plane.evaluate(2.5, 0.5), ContractViolation);
}

TEST_CASE("flat curve evolves by the source alone") {
  const UniformAxis theta{0.0, 2.0, 11};
  const auto flat = curve(theta, 1.5, [](double t) { return Vector{{t, 0.4, 0.6}}; });
  for (int j = 1; j < 10; ++j) {
    const Vector phi = eval_source(mm(), flat.states.col(j));
    const Vector r = redim_rhs_1d(mm(), flat, j);
    CHECK(r[0] == doctest::Approx(phi[1]).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(phi[2]).epsilon(1e-14));
  }
}

TEST_CASE("graph-form and projected residuals are related by the tangential correction") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const UniformAxis theta{0.0, 2.0, 15};
  for (int trial = 0; trial < 20; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const auto m = curve(theta, 1.0 + trial * 0.1, [&](double t) {
      return Vector{{t, 0.5 + a * t + b * std::sin(3.0 * t), 0.5 + c * t * t}};
    });
    const double h = theta.spacing();
    for (int j = 1; j < 14; ++j) {
      const Vector tangent = (m.states.col(j + 1) - m.states.col(j - 1)) / (2.0 * h);
      const Vector g = eval_source(mm(), m.states.col(j)) + local_diffusion_1d(mm(), m, j);
      const Vector rhs = redim_rhs_1d(mm(), m, j);
      const Vector graph{{0.0, rhs[0], rhs[1]}};
      const double correction = (pseudo_inverse(tangent) * graph)[0];
      const Vector projected = tangent_projector(tangent) * g;
      CHECK(projected[0] == doctest::Approx(-correction).scale(1.0));
      CHECK((projected.tail(2) - (rhs - tangent.tail(2) * correction)).norm() < 1e-12);
      CHECK(projected_residual_1d(mm(), m, j) == doctest::Approx(projected.norm()).epsilon(1e-10));
    }
  }
}

TEST_CASE("one-dimensional REDIM matches the stationary profile") {
  const auto& r = mm_redim1d();
  const auto& m = r.manifold;
  CHECK(r.residual < 1e-8);
  CHECK(m.states.col(0) == mm_equilibrium());
  CHECK(m.states.col(m.size() - 1) == MichaelisMentenModel::boundary_state());
  for (int j = 0; j < m.size(); ++j) CHECK(m.states(0, j) == m.theta.node(j));

  const double dist = sup_curve_distance(m.states, mm_stationary().profile.states());
  MESSAGE("sup distance REDIM 1-D vs stationary profile: " << dist);
  CHECK(dist <= 1e-2);

  double projected = 0.0;
  for (int j = 1; j + 1 < m.size(); ++j) projected = std::max(projected, projected_residual_1d(mm(), m, j));
  CHECK(projected <= 1e-6);
}

TEST_CASE("one-dimensional REDIM is consistent under refinement") {
  const auto& coarse = mm_redim1d(101).manifold;
  const auto& fine = mm_redim1d(201).manifold;
  double diff = 0.0;
  for (int j = 0; j < 101; ++j) diff = std::max(diff, (coarse.states.col(j) - fine.states.col(2 * j)).norm());
  MESSAGE("M=101 vs M=201: " << diff);
  CHECK(diff <= 1e-3);
}

TEST_CASE("one-dimensional REDIM argument and budget errors") {
  const auto grad = GradientEstimate::constant(Vector::Constant(1, 2.0));
  const StateVector right = MichaelisMentenModel::boundary_state();
  CHECK_THROWS_AS(evolve_redim_1d(mm(), UniformAxis{0.5, 2.0, 21}, grad, mm_equilibrium(), right),
                  ContractViolation);
  RedimSettings s;
  s.max_steps = 10;
  try {
    evolve_redim_1d(mm(), UniformAxis{mm_equilibrium()[0], 2.0, 21}, grad, mm_equilibrium(), right, s);
    FAIL("expected non-convergence");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_residual() > s.tol);
  }
  s = {};
  s.tol = 0.0;
  CHECK_THROWS_AS(s.validate(), ContractViolation);
}

TEST_CASE("one-dimensional REDIM with and without local time stepping agree") {
  const auto grad = GradientEstimate::from_profile(mm_stationary().profile, 1);
  const UniformAxis theta{mm_equilibrium()[0], 2.0, 41};
  RedimSettings global;
  global.local_time_stepping = false;
  const auto a = evolve_redim_1d(mm(), theta, grad, mm_equilibrium(), MichaelisMentenModel::boundary_state());
  const auto b = evolve_redim_1d(mm(), theta, grad, mm_equilibrium(), MichaelisMentenModel::boundary_state(), global);
  CHECK((a.manifold.states - b.manifold.states).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("two-dimensional REDIM contains the stationary profile") {
  const auto& r = mm_redim2d();
  CHECK(r.residual < 1e-8);
  const auto& profile = mm_stationary().profile;
  double worst = 0.0;
  for (int i = 0; i < profile.size(); ++i) {
    const Vector z = profile.state(i);
    worst = std::max(worst, std::abs(r.manifold.evaluate(z[0], z[1]) - z[2]));
  }
  MESSAGE("max |Z_profile - Z_surface(X, Y)|: " << worst);
  CHECK(worst <= 2e-2);

  const auto initial = initial_manifold_2d(r.manifold.theta1, r.manifold.theta2,
                                           GradientEstimate::from_profile(profile, 2),
                                           mm_equilibrium()[2], 1.0);
  for (int j = 0; j < r.manifold.theta2.count; ++j) {
    CHECK(r.manifold.Z(0, j) == initial.Z(0, j));
    CHECK(r.manifold.Z(r.manifold.theta1.count - 1, j) == initial.Z(initial.theta1.count - 1, j));
  }
}

TEST_CASE("two-dimensional REDIM finds the invariant plane of a linear field") {
  const Matrix V{{1.0, 0.2, 0.3}, {-0.1, 1.0, 0.4}, {0.25, -0.35, 1.0}};
  const Vector shift{{0.2, -0.1, 0.4}};
  const auto lin = linear_with_spectrum(V, Vector{{0.1, 0.2, -10.0}}, shift, Vector::Zero(3));

  const Eigen::EigenSolver<Matrix> es(lin.params().A.transpose());
  Eigen::Index fast = 0;
  es.eigenvalues().real().minCoeff(&fast);
  const Vector normal = es.eigenvectors().col(fast).real();

  const UniformAxis t1{-1.0, 1.0, 31};
  const UniformAxis t2{-1.0, 1.0, 31};
  const auto init = initial_manifold_2d(t1, t2, GradientEstimate::constant(Vector{{1.0, 0.5}}), 0.0, 1.0);
  RedimSettings s;
  s.tol = 1e-11;
  const auto r = evolve_redim_2d(lin, init, EdgeModes::all(EdgeMode::extrapolate), s);
  double err = 0.0;
  for (int i = 0; i < t1.count; ++i) {
    for (int j = 0; j < t2.count; ++j) {
      const double x = t1.node(i) - shift[0];
      const double y = t2.node(j) - shift[1];
      const double exact = shift[2] - (normal[0] * x + normal[1] * y) / normal[2];
      err = std::max(err, std::abs(r.manifold.Z(i, j) - exact));
    }
  }
  CHECK(err <= 1e-8);
}

TEST_CASE("without diffusion the surface reduces to the slow manifold") {
  MichaelisMentenParams p;
  p.delta = 0.0;
  const MichaelisMentenModel model(p);
  const auto initial = initial_manifold_2d(UniformAxis{0.0, 2.0, 61}, UniformAxis{0.0, 1.0, 61},
                                           GradientEstimate::from_profile(mm_stationary().profile, 2),
                                           mm_equilibrium()[2], 1.0);
  const auto r = evolve_redim_2d(model, initial, EdgeModes::all(EdgeMode::mirror));
  CHECK(r.residual < 1e-8);
  const auto& d = mm_decomposition();
  const auto box = MichaelisMentenModel::working_box();
  int inside = 0;
  for (int i = 0; i < 61; ++i) {
    for (int j = 0; j < 61; ++j) {
      const StateVector z = r.manifold.state(i, j);
      if (!box.contains(z)) continue;
      ++inside;
      CHECK(fast_residual(d, model, z).norm() <= std::sqrt(d.epsilon));
    }
  }
  CHECK(inside > 0);
}

TEST_CASE("two-dimensional REDIM rejects a non-graph model") {
  const auto lin2 = LinearModel(LinearModelParams{-Matrix::Identity(2, 2), Vector::Zero(2), Vector::Zero(2)});
  const auto init = initial_manifold_2d(UniformAxis{0.0, 1.0, 5}, UniformAxis{0.0, 1.0, 5},
                                        GradientEstimate::constant(Vector{{1.0, 0.0}}), 0.0, 1.0);
  CHECK_THROWS_AS(evolve_redim_2d(lin2, init), ContractViolation);
  CHECK_THROWS_AS(initial_manifold_2d(UniformAxis{0.0, 1.0, 5}, UniformAxis{0.0, 1.0, 5},
                                      GradientEstimate::constant(Vector::Constant(1, 1.0)), 0.0, 1.0),
                  ContractViolation);
}
