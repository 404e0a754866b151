#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "fastslow/core.hpp"

namespace fastslow {

enum class SurrogateMode { exact, least_squares };

/// Global linear surrogate T with T psi ~ F(psi) over the sample states.
///
/// exact: exactly n samples, T = F Psi^{-1}.
/// least_squares: >= n samples, T = F Psi^T (Psi Psi^T)^{-1} (normal equations).
/// Throws IllPosedSampleError when the sample (or image) matrix has condition number > 1e12.
Matrix build_surrogate(const ReactionDiffusionModel& model, std::span<const StateVector> samples,
                       SurrogateMode mode);

/// Vertices of the working box followed by the extra states (typically the equilibrium).
std::vector<StateVector> box_samples(const WorkingBox& box,
                                     std::span<const StateVector> extra = {});

/// Fast/slow splitting of a linear surrogate.
///
/// Columns of basis are [Z_f | Z_s] (fast first); basis_inverse = Z^{-1} has rows
/// [Z~_f ; Z~_s]. T = Z * blockdiag(fast_block, slow_block) * Z^{-1}.
struct GqlDecomposition {
  Matrix T;
  /// Ascending by modulus; the first n_slow entries are slow.
  std::vector<std::complex<double>> eigenvalues;
  int split_index = 0;
  int n_fast = 0;
  int n_slow = 0;
  Matrix basis;
  Matrix basis_inverse;
  Matrix fast_block;
  Matrix slow_block;
  /// max |lambda_slow| / min |lambda_fast|.
  double epsilon = 0.0;
  /// |lambda_{split}| / |lambda_{split-1}|, the largest consecutive modulus ratio.
  double gap_ratio = 0.0;

  int dimension() const noexcept { return static_cast<int>(T.rows()); }
  auto fast_basis() const { return basis.leftCols(n_fast); }
  auto slow_basis() const { return basis.rightCols(n_slow); }
  auto fast_left() const { return basis_inverse.topRows(n_fast); }
  auto slow_left() const { return basis_inverse.bottomRows(n_slow); }
};

/// Splits T at the largest consecutive eigenvalue-modulus ratio.
///
/// Invariant subspaces come from an ordered real Schur form, so Z stays real for complex
/// pairs. Throws DecompositionError when the best ratio is below min_gap_ratio or a
/// complex-conjugate pair would straddle the split.
GqlDecomposition spectral_split(const Matrix& T, double min_gap_ratio = 10.0);

/// (U, V) = (Z~_f z, Z~_s z).
struct FastSlowPair {
  Vector fast;
  Vector slow;
};

FastSlowPair to_fast_slow_coords(const GqlDecomposition& dec, const Eigen::Ref<const Vector>& z);
StateVector from_fast_slow_coords(const GqlDecomposition& dec, const Eigen::Ref<const Vector>& fast,
                                  const Eigen::Ref<const Vector>& slow);

/// (dU, dV) = (Z~_f Phi(z), Z~_s Phi(z)).
FastSlowPair decomposed_rhs(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                            const Eigen::Ref<const Vector>& z);

/// g(z) = Z~_f Phi(z), the fast residual.
Vector fast_residual(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                     const Eigen::Ref<const Vector>& z);

struct SlowManifoldOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  /// Reject roots whose fast block Z~_f J Z_f is not attracting.
  bool require_attracting = true;
};

/// Solves Z~_f Phi(Z_f U + Z_s V) = 0 for U by Newton from fast_guess.
/// Returns the state on the zero-order slow manifold, or nullopt if Newton fails.
std::optional<StateVector> slow_manifold_point(const GqlDecomposition& dec,
                                               const ReactionDiffusionModel& model,
                                               const Eigen::Ref<const Vector>& slow,
                                               const Eigen::Ref<const Vector>& fast_guess,
                                               const SlowManifoldOptions& options = {});

/// Tensor grid over the slow coordinates V.
struct SlowGrid {
  Vector lower;
  Vector upper;
  std::vector<int> counts;

  std::size_t size() const;
  /// V at flat index (first axis varies slowest).
  Vector point(std::size_t flat) const;
  std::vector<int> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::vector<int>& idx) const;
};

/// Bounding box of the working box's image in V coordinates with points_per_axis per axis.
SlowGrid slow_grid_over_box(const GqlDecomposition& dec, const WorkingBox& box, int points_per_axis);

struct SlowManifoldMesh {
  SlowGrid grid;
  /// One slot per grid node; nullopt where Newton failed.
  std::vector<std::optional<StateVector>> states;

  std::size_t present() const;
};

/// Zero-order slow manifold over the grid. Nodes are visited breadth-first from the node
/// nearest the seed state, each Newton solve starting from a converged neighbour.
/// Throws ConvergenceError when no node converges.
SlowManifoldMesh slow_manifold_mesh(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                                    const SlowGrid& grid, const StateVector& seed,
                                    const SlowManifoldOptions& options = {});

}  // namespace fastslow
