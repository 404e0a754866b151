#include "fastslow/gql.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fastslow/errors.hpp"

extern "C" void dtrsen_(const char* job, const char* compq, const int* select, const int* n,
                        double* t, const int* ldt, double* q, const int* ldq, double* wr, double* wi,
                        int* m, double* s, double* sep, double* work, const int* lwork, int* iwork,
                        const int* liwork, int* info, std::size_t job_len, std::size_t compq_len);

namespace fastslow {

namespace {

constexpr double kMaxCondition = 1e12;

double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
  return sv[0] / smallest;
}

/// Eigenvalues read off the 1x1 and 2x2 diagonal blocks of a quasi-triangular matrix,
/// with the block start index of each.
struct SchurEigen {
  std::complex<double> value;
  int block_start;
  int block_size;
};

std::vector<SchurEigen> schur_eigenvalues(const Matrix& r) {
  std::vector<SchurEigen> out;
  const int n = static_cast<int>(r.rows());
  int k = 0;
  while (k < n) {
    if (k + 1 < n && r(k + 1, k) != 0.0) {
      const double a = r(k, k);
      const double b = r(k, k + 1);
      const double c = r(k + 1, k);
      const double d = r(k + 1, k + 1);
      const double half_trace = 0.5 * (a + d);
      const double disc = 0.25 * (a - d) * (a - d) + b * c;
      if (disc < 0.0) {
        const double im = std::sqrt(-disc);
        out.push_back({{half_trace, im}, k, 2});
        out.push_back({{half_trace, -im}, k, 2});
      } else {
        // Standardised Schur forms never leave a real pair in a 2x2 block, but be exact anyway.
        const double root = std::sqrt(disc);
        out.push_back({{half_trace + root, 0.0}, k, 2});
        out.push_back({{half_trace - root, 0.0}, k, 2});
      }
      k += 2;
    } else {
      out.push_back({{r(k, k), 0.0}, k, 1});
      k += 1;
    }
  }
  return out;
}

bool eigen_less(const std::complex<double>& a, const std::complex<double>& b) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma != mb) return ma < mb;
  if (a.real() != b.real()) return a.real() < b.real();
  if (std::abs(a.imag()) != std::abs(b.imag())) return std::abs(a.imag()) < std::abs(b.imag());
  return a.imag() > b.imag();
}

/// Solves A X - X B = C for X (A: p x p, B: q x q) through the Kronecker form.
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
  const auto p = a.rows();
  const auto q = b.rows();
  Matrix kron = Matrix::Zero(p * q, p * q);
  for (Eigen::Index j = 0; j < q; ++j) {
    kron.block(j * p, j * p, p, p) += a;
    for (Eigen::Index i = 0; i < q; ++i) {
      kron.block(j * p, i * p, p, p) -= b(i, j) * Matrix::Identity(p, p);
    }
  }
  const Vector rhs = Eigen::Map<const Vector>(c.data(), p * q);
  Eigen::FullPivLU<Matrix> lu(kron);
  if (!lu.isInvertible()) {
    throw DecompositionError("fast and slow blocks share an eigenvalue; Sylvester system singular");
  }
  const Vector x = lu.solve(rhs);
  return Eigen::Map<const Matrix>(x.data(), p, q);
}

}  // namespace

Matrix build_surrogate(const ReactionDiffusionModel& model, std::span<const StateVector> samples,
                       SurrogateMode mode) {
  const int n = model.dimension();
  const auto m = static_cast<Eigen::Index>(samples.size());
  if (mode == SurrogateMode::exact && m != n) {
    throw ContractViolation("exact surrogate needs exactly " + std::to_string(n) +
                            " samples, got " + std::to_string(m));
  }
  if (mode == SurrogateMode::least_squares && m < n) {
    throw ContractViolation("least-squares surrogate needs at least " + std::to_string(n) +
                            " samples, got " + std::to_string(m));
  }

  Matrix psi(n, m);
  Matrix images(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& s = samples[static_cast<std::size_t>(j)];
    require_dimension(model, s.size(), "build_surrogate sample");
    psi.col(j) = s;
    images.col(j) = eval_source(model, s);
  }

  const double cond = condition_number(psi);
  if (cond > kMaxCondition) {
    std::ostringstream msg;
    msg << "sample matrix is rank deficient (condition number " << cond << ")";
    throw IllPosedSampleError(msg.str());
  }

  if (mode == SurrogateMode::exact) {
    const double image_cond = condition_number(images);
    if (image_cond > kMaxCondition) {
      std::ostringstream msg;
      msg << "sample images are linearly dependent (condition number " << image_cond << ")";
      throw IllPosedSampleError(msg.str());
    }
    // T Psi = F  <=>  Psi^T T^T = F^T
    const Matrix tt = psi.transpose().fullPivLu().solve(images.transpose());
    return tt.transpose();
  }

  const Matrix gram = psi * psi.transpose();
  const Matrix rhs = psi * images.transpose();
  const Matrix tt = gram.ldlt().solve(rhs);
  return tt.transpose();
}

std::vector<StateVector> box_samples(const WorkingBox& box, std::span<const StateVector> extra) {
  std::vector<StateVector> out = box.vertices();
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

GqlDecomposition spectral_split(const Matrix& T, double min_gap_ratio) {
  const int n = static_cast<int>(T.rows());
  if (T.cols() != n) throw ContractViolation("spectral_split: T must be square");
  if (n < 2) throw ContractViolation("spectral_split: dimension must be at least 2");
  if (!(min_gap_ratio > 1.0)) throw ContractViolation("spectral_split: min_gap_ratio must exceed 1");
  if (!T.allFinite()) throw DecompositionError("spectral_split: T has non-finite entries");

  Eigen::RealSchur<Matrix> schur(T);
  if (schur.info() != Eigen::Success) throw DecompositionError("real Schur decomposition failed");
  Matrix r = schur.matrixT();
  Matrix q = schur.matrixU();

  const auto blocks = schur_eigenvalues(r);
  std::vector<std::complex<double>> sorted;
  sorted.reserve(blocks.size());
  for (const auto& b : blocks) sorted.push_back(b.value);
  std::sort(sorted.begin(), sorted.end(), eigen_less);

  int best = -1;
  double best_ratio = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double lo = std::abs(sorted[static_cast<std::size_t>(i)]);
    const double hi = std::abs(sorted[static_cast<std::size_t>(i + 1)]);
    const double ratio = lo > 0.0 ? hi / lo : (hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i;
    }
  }
  if (best < 0 || best_ratio < min_gap_ratio) {
    std::ostringstream msg;
    msg << "no spectral gap: largest consecutive eigenvalue modulus ratio " << best_ratio
        << " is below the required " << min_gap_ratio;
    throw DecompositionError(msg.str());
  }

  const int n_slow = best + 1;
  const int n_fast = n - n_slow;
  const auto& last_slow = sorted[static_cast<std::size_t>(n_slow - 1)];
  const auto& first_fast = sorted[static_cast<std::size_t>(n_slow)];
  if (last_slow.imag() != 0.0 && first_fast == std::conj(last_slow)) {
    throw DecompositionError("split conflict: a complex-conjugate pair straddles the fast/slow split");
  }

  // Everything at or above the geometric midpoint of the gap is fast.
  const double threshold = std::sqrt(std::abs(last_slow) * std::abs(first_fast));
  std::vector<int> select(static_cast<std::size_t>(n), 0);
  int selected = 0;
  for (const auto& b : blocks) {
    const bool fast = std::abs(b.value) >= threshold;
    for (int k = 0; k < b.block_size; ++k) {
      select[static_cast<std::size_t>(b.block_start + k)] = fast ? 1 : 0;
    }
  }
  for (auto s : select) selected += s;
  if (selected != n_fast) {
    throw DecompositionError("split conflict: a complex-conjugate pair straddles the fast/slow split");
  }

  std::vector<double> wr(static_cast<std::size_t>(n));
  std::vector<double> wi(static_cast<std::size_t>(n));
  std::vector<double> work(static_cast<std::size_t>(std::max(1, n)));
  int iwork = 0;
  const int lwork = std::max(1, n);
  const int liwork = 1;
  int m_out = 0;
  double s_cond = 0.0;
  double sep = 0.0;
  int info = 0;
  dtrsen_("N", "V", select.data(), &n, r.data(), &n, q.data(), &n, wr.data(), wi.data(), &m_out,
          &s_cond, &sep, work.data(), &lwork, &iwork, &liwork, &info, 1, 1);
  if (info != 0 || m_out != n_fast) {
    throw DecompositionError("reordering of the real Schur form failed (LAPACK info " +
                             std::to_string(info) + ")");
  }

  const Matrix r11 = r.topLeftCorner(n_fast, n_fast);
  const Matrix r12 = r.topRightCorner(n_fast, n_slow);
  const Matrix r22 = r.bottomRightCorner(n_slow, n_slow);
  const Matrix x = solve_sylvester(r11, r22, -r12);

  const Matrix q1 = q.leftCols(n_fast);
  const Matrix q2 = q.rightCols(n_slow);

  GqlDecomposition dec;
  dec.T = T;
  dec.eigenvalues = std::move(sorted);
  dec.split_index = n_slow;
  dec.n_fast = n_fast;
  dec.n_slow = n_slow;
  dec.basis.resize(n, n);
  dec.basis.leftCols(n_fast) = q1;
  dec.basis.rightCols(n_slow) = q1 * x + q2;
  dec.basis_inverse.resize(n, n);
  dec.basis_inverse.topRows(n_fast) = q1.transpose() - x * q2.transpose();
  dec.basis_inverse.bottomRows(n_slow) = q2.transpose();

  // Deterministic orientation: the largest-magnitude entry of each basis column is positive.
  for (int c = 0; c < n; ++c) {
    Eigen::Index arg = 0;
    dec.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (dec.basis(arg, c) < 0.0) {
      dec.basis.col(c) *= -1.0;
      dec.basis_inverse.row(c) *= -1.0;
    }
  }
  dec.fast_block = dec.fast_left() * T * dec.fast_basis();
  dec.slow_block = dec.slow_left() * T * dec.slow_basis();
  dec.epsilon = std::abs(last_slow) / std::abs(first_fast);
  dec.gap_ratio = best_ratio;
  return dec;
}

FastSlowPair to_fast_slow_coords(const GqlDecomposition& dec, const Eigen::Ref<const Vector>& z) {
  if (z.size() != dec.dimension()) throw ContractViolation("to_fast_slow_coords: dimension mismatch");
  return {dec.fast_left() * z, dec.slow_left() * z};
}

StateVector from_fast_slow_coords(const GqlDecomposition& dec, const Eigen::Ref<const Vector>& fast,
                                  const Eigen::Ref<const Vector>& slow) {
  if (fast.size() != dec.n_fast || slow.size() != dec.n_slow) {
    throw ContractViolation("from_fast_slow_coords: coordinate sizes do not match the split");
  }
  return dec.fast_basis() * fast + dec.slow_basis() * slow;
}

FastSlowPair decomposed_rhs(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                            const Eigen::Ref<const Vector>& z) {
  require_dimension(model, dec.dimension(), "decomposed_rhs");
  const StateVector f = eval_source(model, z);
  return {dec.fast_left() * f, dec.slow_left() * f};
}

Vector fast_residual(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                     const Eigen::Ref<const Vector>& z) {
  require_dimension(model, dec.dimension(), "fast_residual");
  return dec.fast_left() * eval_source(model, z);
}

std::optional<StateVector> slow_manifold_point(const GqlDecomposition& dec,
                                               const ReactionDiffusionModel& model,
                                               const Eigen::Ref<const Vector>& slow,
                                               const Eigen::Ref<const Vector>& fast_guess,
                                               const SlowManifoldOptions& options) {
  require_dimension(model, dec.dimension(), "slow_manifold_point");
  if (dec.n_fast < 1) throw ContractViolation("slow_manifold_point: no fast directions");
  const auto zf = dec.fast_basis();
  const auto zs = dec.slow_basis();
  const auto left = dec.fast_left();
  const Vector base = zs * slow;

  Vector u = fast_guess;
  StateVector z = zf * u + base;
  Vector g = left * eval_source(model, z);
  double norm = g.norm();
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    if (!std::isfinite(norm)) return std::nullopt;
    if (norm < options.tol) {
      if (options.require_attracting) {
        const Matrix block = left * jacobian(model, z) * zf;
        const Eigen::VectorXcd eig = block.eigenvalues();
        for (const auto& lam : eig) {
          if (!(lam.real() < 0.0)) return std::nullopt;
        }
      }
      return z;
    }
    if (iter == options.max_iterations) break;
    const Matrix jg = left * jacobian(model, z) * zf;
    Eigen::FullPivLU<Matrix> lu(jg);
    if (!lu.isInvertible()) return std::nullopt;
    const Vector step = lu.solve(-g);

    double lambda = 1.0;
    Vector u_trial = u + step;
    StateVector z_trial = zf * u_trial + base;
    Vector g_trial = left * eval_source(model, z_trial);
    for (int h = 0; h < 30 && !(g_trial.norm() < norm); ++h) {
      lambda *= 0.5;
      u_trial = u + lambda * step;
      z_trial = zf * u_trial + base;
      g_trial = left * eval_source(model, z_trial);
    }
    u = std::move(u_trial);
    z = std::move(z_trial);
    g = std::move(g_trial);
    norm = g.norm();
  }
  return std::nullopt;
}

std::size_t SlowGrid::size() const {
  std::size_t total = 1;
  for (int c : counts) total *= static_cast<std::size_t>(c);
  return total;
}

std::vector<int> SlowGrid::unflatten(std::size_t flat) const {
  std::vector<int> idx(counts.size());
  for (std::size_t a = counts.size(); a-- > 0;) {
    const auto c = static_cast<std::size_t>(counts[a]);
    idx[a] = static_cast<int>(flat % c);
    flat /= c;
  }
  return idx;
}

std::size_t SlowGrid::flatten(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    flat = flat * static_cast<std::size_t>(counts[a]) + static_cast<std::size_t>(idx[a]);
  }
  return flat;
}

Vector SlowGrid::point(std::size_t flat) const {
  const auto idx = unflatten(flat);
  Vector v(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t a = 0; a < counts.size(); ++a) {
    const auto k = static_cast<Eigen::Index>(a);
    const double t = counts[a] > 1 ? static_cast<double>(idx[a]) / (counts[a] - 1) : 0.0;
    v[k] = lower[k] + t * (upper[k] - lower[k]);
  }
  return v;
}

SlowGrid slow_grid_over_box(const GqlDecomposition& dec, const WorkingBox& box, int points_per_axis) {
  if (points_per_axis < 2) throw ContractViolation("slow grid needs at least 2 points per axis");
  if (box.lower.size() != dec.dimension()) throw ContractViolation("working box dimension mismatch");
  SlowGrid grid;
  grid.lower = Vector::Constant(dec.n_slow, std::numeric_limits<double>::infinity());
  grid.upper = Vector::Constant(dec.n_slow, -std::numeric_limits<double>::infinity());
  for (const auto& v : box.vertices()) {
    const Vector s = dec.slow_left() * v;
    grid.lower = grid.lower.cwiseMin(s);
    grid.upper = grid.upper.cwiseMax(s);
  }
  grid.counts.assign(static_cast<std::size_t>(dec.n_slow), points_per_axis);
  return grid;
}

std::size_t SlowManifoldMesh::present() const {
  return static_cast<std::size_t>(
      std::count_if(states.begin(), states.end(), [](const auto& s) { return s.has_value(); }));
}

SlowManifoldMesh slow_manifold_mesh(const GqlDecomposition& dec, const ReactionDiffusionModel& model,
                                    const SlowGrid& grid, const StateVector& seed,
                                    const SlowManifoldOptions& options) {
  require_dimension(model, dec.dimension(), "slow_manifold_mesh");
  require_dimension(model, seed.size(), "slow_manifold_mesh seed");
  if (dec.n_fast < 1) throw ContractViolation("slow_manifold_mesh: no fast directions");
  if (grid.counts.size() != static_cast<std::size_t>(dec.n_slow)) {
    throw ContractViolation("slow grid dimension does not match the number of slow coordinates");
  }

  const std::size_t total = grid.size();
  SlowManifoldMesh mesh{grid, std::vector<std::optional<StateVector>>(total)};
  std::vector<Vector> guesses(total);
  std::vector<bool> queued(total, false);

  const Vector seed_slow = dec.slow_left() * seed;
  const Vector seed_fast = dec.fast_left() * seed;
  std::vector<int> start(grid.counts.size());
  for (std::size_t a = 0; a < grid.counts.size(); ++a) {
    const auto k = static_cast<Eigen::Index>(a);
    const double span = grid.upper[k] - grid.lower[k];
    const double t = span > 0.0 ? (seed_slow[k] - grid.lower[k]) / span : 0.0;
    const int last = grid.counts[a] - 1;
    start[a] = std::clamp(static_cast<int>(std::lround(t * last)), 0, last);
  }

  std::deque<std::size_t> queue;
  const std::size_t first = grid.flatten(start);
  queue.push_back(first);
  queued[first] = true;
  guesses[first] = seed_fast;

  while (!queue.empty()) {
    const std::size_t node = queue.front();
    queue.pop_front();
    auto state = slow_manifold_point(dec, model, grid.point(node), guesses[node], options);
    if (!state) continue;
    const Vector u = dec.fast_left() * *state;
    mesh.states[node] = std::move(state);

    auto idx = grid.unflatten(node);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (int delta : {-1, 1}) {
        const int moved = idx[a] + delta;
        if (moved < 0 || moved >= grid.counts[a]) continue;
        auto nb = idx;
        nb[a] = moved;
        const std::size_t flat = grid.flatten(nb);
        if (queued[flat]) continue;
        queued[flat] = true;
        guesses[flat] = u;
        queue.push_back(flat);
      }
    }
  }

  if (mesh.present() == 0) {
    throw ConvergenceError("slow manifold mesh is empty: Newton failed at every grid node",
                           std::numeric_limits<double>::infinity());
  }
  return mesh;
}

}  // namespace fastslow
