#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "errors.hpp"
#include "ncd_matrices.hpp"
#include "ranking.hpp"
#include "sparse.hpp"

namespace ncdrec {

struct EngineConfig {
  double epsilon = 0.01;
  Index f = 10;
  /// Lanczos steps per restart cycle; 0 selects max(2f, f + 20) capped at min(n, m).
  Index M = 0;
  double tol = 1e-6;
  int max_restarts = 1000;
  std::uint64_t seed = 42;

  Index lanczos_steps(Index n, Index m) const {
    const Index cap = std::min(n, m);
    return M > 0 ? M : std::min(std::max(2 * f, f + 20), cap);
  }

  void validate(Index n, Index m) const {
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
    if (!(tol > 0.0)) throw ParameterError("tol must be positive");
    if (max_restarts < 0) throw ParameterError("max_restarts must be nonnegative");
    const Index steps = lanczos_steps(n, m);
    if (f < 1 || f >= steps || steps > std::min(n, m))
      throw ParameterError("need 1 <= f < M <= min(n, m); got f = " + std::to_string(f) +
                           ", M = " + std::to_string(steps) + ", min(n, m) = " + std::to_string(std::min(n, m)));
  }
};

/// Anything that can apply a matrix and its transpose to a vector.
template <class Op>
concept LinearOperator = requires(const Op& op, const Vector& v) {
  { op.rows() } -> std::convertible_to<Index>;
  { op.cols() } -> std::convertible_to<Index>;
  { op.apply(v) } -> std::convertible_to<Vector>;
  { op.apply_adjoint(v) } -> std::convertible_to<Vector>;
};

/// G = R + eps * Z X^T, applied without forming G.
class NcdOperator {
public:
  NcdOperator(const SparseMatrix& R, const NcdFactors& factors, double epsilon)
      : R_(&R), X_(&factors.X), Z_(&factors.Z), epsilon_(epsilon) {
    if (X_->rows() != R.cols() || Z_->rows() != R.rows() || X_->cols() != Z_->cols())
      throw DimensionError("R, X and Z have inconsistent shapes");
  }

  Index rows() const noexcept { return R_->rows(); }
  Index cols() const noexcept { return R_->cols(); }

  /// R p + eps Z (X^T p)
  Vector apply(const Vector& p) const {
    if (p.size() != cols()) throw DimensionError("G * p: p has length " + std::to_string(p.size()));
    Vector phi = X_->transpose() * p;
    Vector q = *R_ * p;
    q.noalias() += epsilon_ * (*Z_ * phi);
    return q;
  }

  /// R^T q + eps X (Z^T q)
  Vector apply_adjoint(const Vector& q) const {
    if (q.size() != rows()) throw DimensionError("G^T * q: q has length " + std::to_string(q.size()));
    Vector phi = Z_->transpose() * q;
    Vector r = R_->transpose() * q;
    r.noalias() += epsilon_ * (*X_ * phi);
    return r;
  }

private:
  const SparseMatrix* R_;
  const SparseMatrix* X_;
  const SparseMatrix* Z_;
  double epsilon_;
};

/// Explicit dense operator, mostly for small problems and cross-checks.
class DenseOperator {
public:
  explicit DenseOperator(Matrix a) : a_(std::move(a)) {}
  Index rows() const noexcept { return a_.rows(); }
  Index cols() const noexcept { return a_.cols(); }
  Vector apply(const Vector& p) const { return a_ * p; }
  Vector apply_adjoint(const Vector& q) const { return a_.transpose() * q; }
  const Matrix& matrix() const noexcept { return a_; }

private:
  Matrix a_;
};

inline Vector apply_G(const NcdFactors& factors, const SparseMatrix& R, double epsilon, const Vector& p) {
  return NcdOperator(R, factors, epsilon).apply(p);
}

inline Vector apply_Gt(const NcdFactors& factors, const SparseMatrix& R, double epsilon, const Vector& q) {
  return NcdOperator(R, factors, epsilon).apply_adjoint(q);
}

/// Bases and projected matrix of a Lanczos bidiagonalization: G P = Q B and
/// G^T Q = P B^T + residual e_M^T.
struct LanczosState {
  Matrix P;  // m x M, right Lanczos vectors
  Matrix Q;  // n x M, left Lanczos vectors
  Matrix B;  // M x M upper bidiagonal (upper triangular after an augmented restart)
  Vector residual;  // unnormalized next right vector
  Index breakdowns = 0;
};

/// Leading singular triplets, sigma nonincreasing.
struct SvdFactors {
  Matrix U;      // n x f
  Vector sigma;  // f
  Matrix V;      // m x f
};

struct SvdDiagnostics {
  int restarts = 0;
  Index lanczos_steps = 0;
  Index breakdowns = 0;
  /// sqrt(|G v - s u|^2 + |G^T u - s v|^2) per returned triplet.
  std::vector<double> residuals;
};

namespace detail {

inline Vector random_unit(Index size, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = normal(rng);
  return v / v.norm();
}

/// v <- v - B (B^T v), applied twice.
inline void reorthogonalize(Vector& v, const Matrix& basis, Index cols) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    Vector h = basis.leftCols(cols).transpose() * v;
    v.noalias() -= basis.leftCols(cols) * h;
  }
}

/// Random unit vector orthogonal to the first `cols` columns of `basis`.
inline Vector random_orthogonal(const Matrix& basis, Index cols, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Vector v = random_unit(basis.rows(), rng);
    reorthogonalize(v, basis, cols);
    const double nrm = v.norm();
    if (nrm > 1e-8) return v / nrm;
  }
  throw ConvergenceError("cannot draw a vector orthogonal to the Lanczos basis", {});
}

/// Extends a bidiagonalization from column `start` to `steps`. On entry P(:, 0..start),
/// Q(:, 0..start-1) and B(0..start-1, 0..start) are set.
template <LinearOperator Op>
void extend_bidiagonalization(const Op& op, LanczosState& s, Index start, Index steps, std::mt19937_64& rng,
                              double& scale) {
  for (Index j = start; j < steps; ++j) {
    Vector q = op.apply(Vector(s.P.col(j)));
    for (Index i = 0; i < j; ++i)
      if (s.B(i, j) != 0.0) q.noalias() -= s.B(i, j) * s.Q.col(i);
    reorthogonalize(q, s.Q, j);
    double b = q.norm();
    scale = std::max(scale, b);
    if (b <= 1e-14 * scale || b == 0.0) {
      ++s.breakdowns;
      q = random_orthogonal(s.Q, j, rng);
      b = 0.0;
    } else {
      q /= b;
    }
    s.Q.col(j) = q;
    s.B(j, j) = b;

    Vector r = op.apply_adjoint(q);
    r.noalias() -= b * s.P.col(j);
    reorthogonalize(r, s.P, j + 1);
    if (j + 1 < steps) {
      double beta = r.norm();
      scale = std::max(scale, beta);
      if (beta <= 1e-14 * scale || beta == 0.0) {
        ++s.breakdowns;
        s.P.col(j + 1) = random_orthogonal(s.P, j + 1, rng);
        beta = 0.0;
      } else {
        s.P.col(j + 1) = r / beta;
      }
      s.B(j, j + 1) = beta;
    } else {
      s.residual = r;
    }
  }
}

}  // namespace detail

/// Runs `steps` Lanczos bidiagonalization steps from the unit vector `start` with
/// full reorthogonalization of both vector sequences.
template <LinearOperator Op>
LanczosState partial_lbd(const Op& op, Vector start, Index steps, std::uint64_t seed = 42) {
  if (steps < 1 || steps > std::min(op.rows(), op.cols())) throw ParameterError("need 1 <= M <= min(n, m)");
  if (start.size() != op.cols()) throw DimensionError("start vector has wrong length");
  if (std::abs(start.norm() - 1.0) > 1e-10) throw ParameterError("start vector must have unit norm");
  std::mt19937_64 rng(seed);
  LanczosState s;
  s.P = Matrix::Zero(op.cols(), steps);
  s.Q = Matrix::Zero(op.rows(), steps);
  s.B = Matrix::Zero(steps, steps);
  s.P.col(0) = start;
  double scale = 0.0;
  detail::extend_bidiagonalization(op, s, 0, steps, rng, scale);
  return s;
}

template <LinearOperator Op>
LanczosState partial_lbd(const EngineConfig& config, const Op& op, Vector start) {
  return partial_lbd(op, std::move(start), config.lanczos_steps(op.rows(), op.cols()), config.seed);
}

/// Flips each pair (u_j, v_j) so the largest-magnitude entry of v_j is positive.
inline void canonicalize_signs(SvdFactors& svd) {
  for (Index j = 0; j < svd.V.cols(); ++j) {
    Index arg = 0;
    svd.V.col(j).cwiseAbs().maxCoeff(&arg);
    if (svd.V(arg, j) < 0.0) {
      svd.V.col(j) *= -1.0;
      svd.U.col(j) *= -1.0;
    }
  }
}

/// Leading f singular triplets by Lanczos bidiagonalization with augmented restarts:
/// after each cycle the Ritz vectors are lifted back through P and Q, the
/// residual direction seeds the next cycle, and M - k fresh steps are added.
template <LinearOperator Op>
SvdFactors restarted_svd(const EngineConfig& config, const Op& op, SvdDiagnostics* diagnostics = nullptr) {
  const Index n = op.rows(), m = op.cols();
  config.validate(n, m);
  const Index f = config.f;
  const Index steps = config.lanczos_steps(n, m);
  const Index keep = std::min(steps - 1, f + (steps - f) / 2);

  std::mt19937_64 rng(config.seed);
  LanczosState s;
  s.P = Matrix::Zero(m, steps);
  s.Q = Matrix::Zero(n, steps);
  s.B = Matrix::Zero(steps, steps);
  s.P.col(0) = detail::random_unit(m, rng);

  double scale = 0.0;
  Index start = 0;
  std::vector<double> estimates(static_cast<std::size_t>(f), 0.0);
  Eigen::BDCSVD<Matrix> small;
  int restart = 0;
  for (;; ++restart) {
    detail::extend_bidiagonalization(op, s, start, steps, rng, scale);
    const double rnorm = s.residual.norm();
    small.compute(s.B, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = small.singularValues();
    const double sigma1 = sv[0];

    bool converged = true;
    for (Index j = 0; j < f; ++j) {
      estimates[static_cast<std::size_t>(j)] = rnorm * std::abs(small.matrixU()(steps - 1, j));
      if (estimates[static_cast<std::size_t>(j)] > config.tol * sigma1) converged = false;
    }
    if (converged) break;
    if (restart >= config.max_restarts)
      throw ConvergenceError("restarted Lanczos did not converge in " + std::to_string(config.max_restarts) +
                                 " restarts",
                             estimates);

    Matrix P_new = s.P * small.matrixV().leftCols(keep);
    Matrix Q_new = s.Q * small.matrixU().leftCols(keep);
    s.P.leftCols(keep) = P_new;
    s.Q.leftCols(keep) = Q_new;
    s.B.setZero();
    for (Index i = 0; i < keep; ++i) s.B(i, i) = sv[i];
    if (rnorm <= 1e-14 * std::max(scale, sigma1)) {
      ++s.breakdowns;
      s.P.col(keep) = detail::random_orthogonal(s.P, keep, rng);
    } else {
      Vector p = s.residual / rnorm;
      detail::reorthogonalize(p, s.P, keep);
      s.P.col(keep) = p / p.norm();
      for (Index i = 0; i < keep; ++i) s.B(i, keep) = rnorm * small.matrixU()(steps - 1, i);
    }
    start = keep;
  }

  SvdFactors out;
  out.U = s.Q * small.matrixU().leftCols(f);
  out.V = s.P * small.matrixV().leftCols(f);
  out.sigma = small.singularValues().head(f);
  canonicalize_signs(out);

  if (diagnostics) {
    diagnostics->restarts = restart;
    diagnostics->lanczos_steps = steps;
    diagnostics->breakdowns = s.breakdowns;
    diagnostics->residuals.clear();
    for (Index j = 0; j < f; ++j) {
      const Vector u = out.U.col(j), v = out.V.col(j);
      const double a = (op.apply(v) - out.sigma[j] * u).norm();
      const double b = (op.apply_adjoint(u) - out.sigma[j] * v).norm();
      diagnostics->residuals.push_back(std::sqrt(a * a + b * b));
    }
  }
  return out;
}

/// Row `user` of U_f Sigma_f V_f^T.
inline Vector main_scores(const SvdFactors& svd, Index user) {
  if (user < 0 || user >= svd.U.rows()) throw ParameterError("user index out of range");
  Vector weights = svd.U.row(user).transpose().cwiseProduct(svd.sigma);
  return svd.V * weights;
}

/// Ranking from the projected preference row; `rated` items are left out.
inline RankingList recommend_main(const SvdFactors& svd, Index user, std::span<const Index> rated = {}) {
  return rank_all(main_scores(svd, user), rated, Direction::max_similarity);
}

inline void save_svd(const std::string& path, const SvdFactors& svd) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path);
  out.write("NCDSVD01", 8);
  write_dense(out, svd.sigma);
  write_dense(out, svd.U);
  write_dense(out, svd.V);
  if (!out) throw Error(ErrorKind::data, "write failed: " + path);
}

inline SvdFactors load_svd(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot read " + path);
  char magic[8] = {};
  in.read(magic, 8);
  if (std::string(magic, 8) != "NCDSVD01") throw ParseError(path, 0, "not an SVD factor file");
  SvdFactors svd;
  svd.sigma = read_dense(in);
  svd.U = read_dense(in);
  svd.V = read_dense(in);
  if (svd.U.cols() != svd.sigma.size() || svd.V.cols() != svd.sigma.size())
    throw ParseError(path, 0, "inconsistent factor dimensions");
  return svd;
}

}  // namespace ncdrec
