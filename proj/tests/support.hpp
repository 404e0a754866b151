#pragma once

#include <cmath>
#include <algorithm>
#include <map>
#include <optional>
#include <random>

#include "fastslow/gql.hpp"
#include "fastslow/models.hpp"
#include "fastslow/pde.hpp"
#include "fastslow/redim.hpp"

namespace fastslow::testing {

inline const double kYeq = std::sqrt(3.0) - 1.0;

inline const MichaelisMentenModel& mm() {
  static const MichaelisMentenModel model;
  return model;
}

inline StateVector mm_equilibrium() {
  static const StateVector eq = equilibrium(mm(), StateVector{{1.0, 0.5, 0.5}});
  return eq;
}

inline BoundaryConditions mm_bc() {
  return {mm_equilibrium(), MichaelisMentenModel::boundary_state()};
}

inline const GqlDecomposition& mm_decomposition() {
  static const GqlDecomposition dec = [] {
    const StateVector eq = mm_equilibrium();
    const auto samples = box_samples(MichaelisMentenModel::working_box(), std::span(&eq, 1));
    return spectral_split(build_surrogate(mm(), samples, SurrogateMode::least_squares));
  }();
  return dec;
}

/// Converged stationary profile of the default model, cached per node count.
inline const SteadyStateResult& mm_stationary(int nodes = 101) {
  static std::map<int, SteadyStateResult> cache;
  auto it = cache.find(nodes);
  if (it == cache.end()) {
    SolverSettings s;
    s.node_count = nodes;
    it = cache.emplace(nodes, integrate_to_steady(mm(), mm_bc(), s)).first;
  }
  return it->second;
}

inline const Redim1DResult& mm_redim1d(int nodes = 101) {
  static std::map<int, Redim1DResult> cache;
  auto it = cache.find(nodes);
  if (it == cache.end()) {
    const auto grad = GradientEstimate::from_profile(mm_stationary().profile, 1);
    const StateVector left = mm_equilibrium();
    const StateVector right = MichaelisMentenModel::boundary_state();
    const UniformAxis theta{left[0], right[0], nodes};
    it = cache.emplace(nodes, evolve_redim_1d(mm(), theta, grad, left, right)).first;
  }
  return it->second;
}

inline const Redim2DResult& mm_redim2d() {
  static const Redim2DResult result = [] {
    const auto grad = GradientEstimate::from_profile(mm_stationary().profile, 2);
    const UniformAxis t1{0.0, 2.0, 61};
    const UniformAxis t2{0.0, 1.0, 61};
    const auto initial = initial_manifold_2d(t1, t2, grad, mm_equilibrium()[2], 1.0);
    return evolve_redim_2d(mm(), initial);
  }();
  return result;
}

/// Euclidean distance from z to the polyline through the columns of curve.
inline double distance_to_polyline(const Matrix& curve, const Vector& z) {
  double best = INFINITY;
  for (Eigen::Index j = 0; j + 1 < curve.cols(); ++j) {
    const Vector a = curve.col(j);
    const Vector d = curve.col(j + 1) - a;
    const double len2 = d.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((z - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (a + s * d - z).norm());
  }
  return best;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

/// A (z - shift) with A = V diag(lambda) V^{-1}.
inline LinearModel linear_with_spectrum(const Matrix& V, const Vector& lambda, const Vector& shift,
                                        const Vector& diffusion) {
  const Matrix A = V * lambda.asDiagonal() * V.inverse();
  return LinearModel(LinearModelParams{A, shift, diffusion});
}

}  // namespace fastslow::testing

namespace fastslow::testing {

inline const SlowManifoldMesh& mm_mesh() {
  static const SlowManifoldMesh mesh = [] {
    const auto& dec = mm_decomposition();
    const auto grid = slow_grid_over_box(dec, MichaelisMentenModel::working_box(), 41);
    return slow_manifold_mesh(dec, mm(), grid, mm_equilibrium());
  }();
  return mesh;
}

}  // namespace fastslow::testing

namespace fastslow::testing {

/// Euclidean distance from z to the zero-order slow manifold, by Gauss-Newton over the slow
/// coordinates starting from the fast fibre through z. Returns infinity if Newton fails.
inline double distance_to_slow_manifold(const GqlDecomposition& d, const ReactionDiffusionModel& model,
                                        const Vector& z) {
  const auto c = to_fast_slow_coords(d, z);
  Vector v = c.slow;
  Vector u = c.fast;
  double best = INFINITY;
  for (int iter = 0; iter < 50; ++iter) {
    const auto p = slow_manifold_point(d, model, v, u);
    if (!p) return best;
    u = d.fast_left() * *p;
    const Vector r = *p - z;
    best = std::min(best, r.norm());
    const Matrix j = jacobian(model, *p);
    const Matrix du = -(d.fast_left() * j * d.fast_basis())
                           .fullPivLu()
                           .solve(d.fast_left() * j * d.slow_basis());
    const Matrix tangent = d.slow_basis() + d.fast_basis() * du;
    const Vector dv = -(tangent.transpose() * tangent).ldlt().solve(tangent.transpose() * r);
    v += dv;
    if (dv.norm() < 1e-13) break;
  }
  return best;
}

}  // namespace fastslow::testing
