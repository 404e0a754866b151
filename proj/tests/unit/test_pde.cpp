#include <doctest.h>

#include "fastslow/errors.hpp"
#include "support.hpp"

using namespace fastslow;
using namespace fastslow::testing;

TEST_CASE("linear initial profile") {
  const auto p = linear_initial_profile(mm_equilibrium(), MichaelisMentenModel::boundary_state(),
                                        Grid1D(101));
  CHECK(p.state(0) == mm_equilibrium());
  CHECK(p.state(100) == MichaelisMentenModel::boundary_state());
  const Vector mid = p.state(50);
  CHECK(std::abs(mid[0] - 1.0) < 1e-7);
  CHECK(std::abs(mid[1] - 0.3660254) < 1e-7);
  CHECK(std::abs(mid[2] - 0.8660254) < 1e-7);
  CHECK_THROWS_AS(linear_initial_profile(Vector::Zero(3), Vector::Zero(2), Grid1D(5)),
                  ContractViolation);
}

TEST_CASE("solver settings validation") {
  SolverSettings s;
  CHECK_NOTHROW(s.validate());
  s.node_count = 2;
  CHECK_THROWS_AS(s.validate(), ContractViolation);
  s = {};
  s.dt_safety = 1.5;
  CHECK_THROWS_AS(s.validate(), ContractViolation);
  s = {};
  s.steady_tol = -1.0;
  CHECK_THROWS_AS(s.validate(), ContractViolation);
}

TEST_CASE("equilibrium profile is a fixed point of the step") {
  const Grid1D grid(41);
  const SpatialProfile eq(grid, mm_equilibrium().replicate(1, 41));
  const double dt = stable_dt(mm(), eq);
  const auto next = step(eq, mm(), dt);
  CHECK((next.states() - eq.states()).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("step enforces the stability limit") {
  const auto p = linear_initial_profile(mm_equilibrium(), MichaelisMentenModel::boundary_state(),
                                        Grid1D(101));
  const double dt = stable_dt(mm(), p);
  const double dx = p.grid().spacing();
  CHECK(dt <= 0.8 * dx * dx / (2.0 * 0.01) * (1.0 + 1e-15));
  CHECK_NOTHROW(step(p, mm(), dt));
  try {
    step(p, mm(), 1.5 * dt);
    FAIL("expected a stability error");
  } catch (const StabilityError& e) {
    CHECK(e.dt_stable() == doctest::Approx(dt));
  }
  CHECK_THROWS_AS(step(p, mm(), 0.0), ContractViolation);
}

TEST_CASE("non-finite states diverge") {
  auto p = linear_initial_profile(mm_equilibrium(), MichaelisMentenModel::boundary_state(),
                                  Grid1D(11));
  p.states()(0, 5) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step(p, mm(), 1e-6), DivergenceError);
}

TEST_CASE("boundary columns stay bit-exact and the residual falls over the first steps") {
  auto p = linear_initial_profile(mm_equilibrium(), MichaelisMentenModel::boundary_state(),
                                  Grid1D(101));
  const Vector left = p.state(0);
  const Vector right = p.state(100);
  std::vector<double> residuals{interior_residual(mm(), p)};
  for (int k = 0; k < 10; ++k) {
    p = step(p, mm(), stable_dt(mm(), p));
    residuals.push_back(interior_residual(mm(), p));
    CHECK(p.state(0) == left);
    CHECK(p.state(100) == right);
  }
  for (std::size_t k = 1; k < residuals.size(); ++k) CHECK(residuals[k] <= residuals[k - 1]);
  CHECK(residuals.back() < residuals[1]);
}

TEST_CASE("stationary profile of the default model") {
  const auto& r = mm_stationary();
  CHECK(r.residual < 1e-8);
  CHECK(interior_residual(mm(), r.profile) < 1e-8);
  CHECK(r.profile.state(0) == mm_equilibrium());
  CHECK(r.profile.state(100) == MichaelisMentenModel::boundary_state());
  REQUIRE_FALSE(r.history.empty());
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k].t > r.history[k - 1].t);
  CHECK(r.history.back().t == r.elapsed_time);
  CHECK(r.history.back().residual == r.residual);
}

TEST_CASE("stationary profile is grid independent") {
  const auto& coarse = mm_stationary(101).profile;
  const auto& fine = mm_stationary(201).profile;
  double diff = 0.0;
  for (int i = 0; i < 101; ++i) {
    diff = std::max(diff, (coarse.state(i) - fine.state(2 * i)).lpNorm<Eigen::Infinity>());
  }
  MESSAGE("N=101 vs N=201 sup difference: " << diff);
  CHECK(diff <= 1e-3);
}

TEST_CASE("zero diffusion with equilibrium data stays at equilibrium") {
  MichaelisMentenParams p;
  p.delta = 0.0;
  const MichaelisMentenModel model(p);
  SolverSettings s;
  s.node_count = 21;
  const auto r = integrate_to_steady(model, {mm_equilibrium(), mm_equilibrium()}, s);
  for (int i = 0; i < 21; ++i) CHECK((r.profile.state(i) - mm_equilibrium()).norm() < 1e-12);
}

TEST_CASE("unreachable tolerance fails at max_time") {
  SolverSettings s;
  s.steady_tol = 0.0;
  s.max_time = 5.0;
  try {
    integrate_to_steady(mm(), mm_bc(), s);
    FAIL("expected non-convergence");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_residual() > 0.0);
  }
}

TEST_CASE("slow tail of the stationary profile lies on the slow manifold") {
  const auto& d = mm_decomposition();
  const auto& profile = mm_stationary().profile;
  double worst = 0.0;
  for (int i = 0; i < profile.size(); ++i) {
    const Vector z = profile.state(i);
    if (!(fast_residual(d, mm(), z).norm() < d.epsilon)) continue;
    worst = std::max(worst, distance_to_slow_manifold(d, mm(), z));
  }
  CHECK(worst <= 1e-2);
}

TEST_CASE("sqrt-epsilon neighbourhood of the stationary profile lies on the slow manifold" *
          doctest::may_fail()) {
  const auto& d = mm_decomposition();
  const auto& profile = mm_stationary().profile;
  double worst = 0.0;
  double worst_x = 0.0;
  for (int i = 0; i < profile.size(); ++i) {
    const Vector z = profile.state(i);
    if (!(fast_residual(d, mm(), z).norm() < std::sqrt(d.epsilon))) continue;
    const double dist = distance_to_slow_manifold(d, mm(), z);
    if (dist > worst) {
      worst = dist;
      worst_x = profile.grid().node(i);
    }
  }
  MESSAGE("max distance " << worst << " at x = " << worst_x);
  CHECK(worst <= 1e-2);
}
