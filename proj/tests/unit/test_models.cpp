#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "fastslow/errors.hpp"
#include "support.hpp"

using namespace fastslow;
using namespace fastslow::testing;

TEST_CASE("default parameters") {
  const MichaelisMentenParams p;
  CHECK(p.L1 == 0.99);
  CHECK(p.L2 == 1.0);
  CHECK(p.L3 == 0.05);
  CHECK(p.L4 == 0.1);
  CHECK(p.mu == 1.0);
  CHECK(p.delta == 0.01);
  CHECK(mm().diffusion() == Vector::Constant(3, 0.01));
}

TEST_CASE("parameter validation") {
  MichaelisMentenParams p;
  p.L2 = 0.0;
  CHECK_THROWS_AS(p.validate(), ContractViolation);
  p = {};
  p.L1 = 1.0;
  CHECK_THROWS_AS(p.validate(), ContractViolation);
  p = {};
  p.delta = -0.1;
  CHECK_THROWS_AS(p.validate(), ContractViolation);
  p = {};
  p.delta = 0.0;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("linear model validation") {
  CHECK_THROWS_AS(LinearModel(LinearModelParams{Matrix{{0.0, 1.0}, {-1.0, 0.0}}, Vector::Zero(2),
                                                Vector::Zero(2)}),
                  ContractViolation);
  CHECK_THROWS_AS(LinearModel(LinearModelParams{Matrix::Identity(2, 2), Vector::Zero(3),
                                                Vector::Zero(2)}),
                  ContractViolation);
  CHECK_THROWS_AS(LinearModel(LinearModelParams{-Matrix::Identity(2, 2), Vector::Zero(2),
                                                Vector{{0.1, -0.1}}}),
                  ContractViolation);
}

TEST_CASE("equilibrium from several guesses") {
  for (const StateVector& guess : {StateVector{{1.0, 0.5, 0.5}}, StateVector{{2.0, 0.0, 1.0}}}) {
    const StateVector eq = equilibrium(mm(), guess);
    CHECK(std::abs(eq[0]) < 1e-10);
    CHECK(std::abs(eq[1] - 0.7320508075688772) < 1e-10);
    CHECK(std::abs(eq[2] - 0.7320508075688772) < 1e-10);
    CHECK(std::abs(eq[1] - eq[2]) < 1e-12);
    CHECK(eval_source(mm(), eq).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("equilibrium is independent of the guess inside the box") {
  const StateVector ref = mm_equilibrium();
  for (const auto& v : MichaelisMentenModel::working_box().vertices()) {
    const StateVector guess = 0.5 * (v + StateVector{{1.0, 0.5, 0.5}});
    CHECK((equilibrium(mm(), guess) - ref).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("equilibrium is stable") {
  const Eigen::EigenSolver<Matrix> es(jacobian(mm(), mm_equilibrium()));
  for (Eigen::Index k = 0; k < 3; ++k) CHECK(es.eigenvalues()[k].real() < 0.0);
}

TEST_CASE("newton recovers the linear fixed point") {
  const LinearModel lin(LinearModelParams{Matrix{{-2.0, 1.0, 0.0}, {0.5, -3.0, 0.2}, {0.0, 0.1, 4.0}},
                                          Vector{{0.3, -0.2, 1.5}}, Vector::Zero(3)});
  CHECK((equilibrium(lin, Vector{{10.0, -4.0, 7.0}}) - Vector{{0.3, -0.2, 1.5}}).norm() < 1e-12);
}

TEST_CASE("equilibrium failure modes") {
  EquilibriumOptions opts;
  opts.max_iterations = 1;
  opts.tol = 1e-300;
  CHECK_THROWS_AS(equilibrium(mm(), StateVector{{2.0, 0.0, 1.0}}, opts), ConvergenceError);
  CHECK_THROWS_AS(equilibrium(mm(), Vector::Zero(2)), ContractViolation);
}

TEST_CASE("provenance parameters") {
  const auto params = mm().parameters();
  REQUIRE(params.size() == 6);
  CHECK(params[0].first == "L1");
  CHECK(params[5].first == "delta");
}
