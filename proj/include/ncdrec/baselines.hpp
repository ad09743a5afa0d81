#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "dataset.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "ranking.hpp"
#include "sparse.hpp"

namespace ncdrec {

/// Dense baselines refuse graphs above this many nodes.
inline constexpr Index kMaxBaselineNodes = 20000;

enum class EdgeWeighting { binary, rating };

/// Undirected weighted graph over users, items and blocks (node order: users, items, blocks).
/// Edges are user-item (rated) and item-block (membership).
class TripartiteGraph {
public:
  TripartiteGraph() = default;

  TripartiteGraph(Matrix adjacency, Index n_users, Index n_items, Index n_blocks)
      : A_(std::move(adjacency)), n_users_(n_users), n_items_(n_items), n_blocks_(n_blocks) {
    if (A_.rows() != A_.cols() || A_.rows() != n_users + n_items + n_blocks)
      throw DimensionError("adjacency does not match n + m + K");
    if (!A_.isApprox(A_.transpose(), 0.0) || (A_.array() < 0.0).any())
      throw ParameterError("adjacency must be symmetric and nonnegative");
    degree_ = A_.rowwise().sum();
    adjacency_.resize(static_cast<std::size_t>(A_.rows()));
    for (Index i = 0; i < A_.rows(); ++i)
      for (Index j = 0; j < A_.cols(); ++j)
        if (A_(i, j) != 0.0) adjacency_[static_cast<std::size_t>(i)].push_back(j);
  }

  /// A plain graph with no user/item/block roles.
  static TripartiteGraph from_adjacency(Matrix adjacency) {
    const Index n = adjacency.rows();
    return TripartiteGraph(std::move(adjacency), 0, n, 0);
  }

  Index size() const noexcept { return A_.rows(); }
  Index n_users() const noexcept { return n_users_; }
  Index n_items() const noexcept { return n_items_; }
  Index n_blocks() const noexcept { return n_blocks_; }
  Index user_node(Index u) const noexcept { return u; }
  Index item_node(Index j) const noexcept { return n_users_ + j; }
  Index block_node(Index k) const noexcept { return n_users_ + n_items_ + k; }

  const Matrix& adjacency() const noexcept { return A_; }
  const Vector& degree() const noexcept { return degree_; }
  double volume() const { return degree_.sum(); }
  const std::vector<Index>& neighbors(Index v) const { return adjacency_.at(static_cast<std::size_t>(v)); }

  /// L = diag(A e) - A
  Matrix laplacian() const {
    Matrix L = -A_;
    L.diagonal() += degree_;
    return L;
  }

  std::vector<std::vector<Index>> components() const {
    std::vector<std::vector<Index>> out;
    std::vector<char> seen(static_cast<std::size_t>(size()), 0);
    for (Index s = 0; s < size(); ++s) {
      if (seen[static_cast<std::size_t>(s)]) continue;
      std::vector<Index> comp{s}, stack{s};
      seen[static_cast<std::size_t>(s)] = 1;
      while (!stack.empty()) {
        Index v = stack.back();
        stack.pop_back();
        for (Index w : neighbors(v))
          if (!seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = 1;
            comp.push_back(w);
            stack.push_back(w);
          }
      }
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
    return out;
  }

private:
  Matrix A_;
  Vector degree_;
  std::vector<std::vector<Index>> adjacency_;
  Index n_users_ = 0;
  Index n_items_ = 0;
  Index n_blocks_ = 0;
};

inline void check_baseline_size(Index nodes) {
  if (nodes > kMaxBaselineNodes)
    throw CapacityError("graph has " + std::to_string(nodes) + " nodes; dense baselines are limited to " +
                        std::to_string(kMaxBaselineNodes));
}

/// `decomposition` may be null, giving the bipartite user-item graph.
inline TripartiteGraph build_graph(const RatingsDataset& data, const Decomposition* decomposition,
                                   EdgeWeighting weighting = EdgeWeighting::binary) {
  const Index n = data.n_users(), m = data.n_items();
  const Index K = decomposition ? decomposition->n_blocks() : 0;
  if (decomposition && decomposition->n_items() != m) throw DimensionError("decomposition does not match dataset");
  check_baseline_size(n + m + K);
  Matrix A = Matrix::Zero(n + m + K, n + m + K);
  for (const Rating& r : data.ratings()) {
    if (r.value == 0.0) continue;
    const double w = weighting == EdgeWeighting::binary ? 1.0 : r.value;
    A(r.user, n + r.item) = w;
    A(n + r.item, r.user) = w;
  }
  if (decomposition)
    for (Index k = 0; k < K; ++k)
      for (Index j : decomposition->blocks()[static_cast<std::size_t>(k)]) {
        A(n + j, n + m + k) = 1.0;
        A(n + m + k, n + j) = 1.0;
      }
  return TripartiteGraph(std::move(A), n, m, K);
}

/// Dense node-by-node score matrix and how its scores should be ranked.
struct SimilarityMatrix {
  Matrix values;
  std::string method;
  Direction direction = Direction::max_similarity;
};

namespace detail {

inline void require_connected(const TripartiteGraph& g, const std::string& what) {
  auto comps = g.components();
  if (comps.size() <= 1) return;
  std::string msg = what + ": graph is disconnected (" + std::to_string(comps.size()) + " components; sizes";
  for (std::size_t c = 0; c < comps.size() && c < 8; ++c) msg += " " + std::to_string(comps[c].size());
  if (comps.size() > 8) msg += " ...";
  msg += "; first isolated node " + std::to_string(comps.back().front()) + ")";
  throw SingularityError(msg);
}

}  // namespace detail

/// L^+ = (L - ee^T/N)^-1 + ee^T/N for a connected graph.
inline SimilarityMatrix laplacian_pinv(const TripartiteGraph& g) {
  check_baseline_size(g.size());
  detail::require_connected(g, "Laplacian pseudoinverse");
  const Index N = g.size();
  const double shift = 1.0 / static_cast<double>(N);
  Matrix shifted = g.laplacian().array() - shift;
  Matrix inv = shifted.partialPivLu().inverse();
  inv.array() += shift;
  Matrix sym = 0.5 * (inv + inv.transpose());
  return {std::move(sym), "l-pinv", Direction::max_similarity};
}

/// Matrix-forest similarity M = (I + L)^-1.
inline SimilarityMatrix mfa_similarity(const TripartiteGraph& g) {
  check_baseline_size(g.size());
  Matrix IL = g.laplacian();
  IL.diagonal().array() += 1.0;
  Matrix inv = IL.llt().solve(Matrix::Identity(g.size(), g.size()));
  Matrix sym = 0.5 * (inv + inv.transpose());
  return {std::move(sym), "mfa", Direction::max_similarity};
}

/// Power-iteration estimate of the spectral radius of a symmetric nonnegative matrix.
inline double spectral_radius(const Matrix& A, double tol = 1e-12, int maxit = 10000) {
  if (A.rows() == 0) return 0.0;
  Vector x = Vector::Ones(A.rows()) / std::sqrt(static_cast<double>(A.rows()));
  double estimate = 0.0;
  for (int it = 0; it < maxit; ++it) {
    // Two steps at a time so bipartite graphs (eigenvalues +-rho) do not oscillate.
    Vector y = A * (A * x);
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    const double next = std::sqrt(nrm);
    x = y / nrm;
    if (std::abs(next - estimate) <= tol * next) return next;
    estimate = next;
  }
  return estimate;
}

/// Katz similarity K = (I - a A)^-1 - I; requires a < 1 / rho(A).
inline SimilarityMatrix katz_similarity(const TripartiteGraph& g, double attenuation) {
  check_baseline_size(g.size());
  if (attenuation < 0.0) throw ParameterError("Katz attenuation must be nonnegative");
  const double rho = spectral_radius(g.adjacency());
  if (attenuation * rho >= 1.0)
    throw ParameterError("Katz series diverges: attenuation " + std::to_string(attenuation) +
                         " >= 1/rho(A) = " + std::to_string(1.0 / rho));
  const Index N = g.size();
  Matrix M = -attenuation * g.adjacency();
  M.diagonal().array() += 1.0;
  Matrix K = M.llt().solve(Matrix::Identity(N, N));
  K.diagonal().array() -= 1.0;
  Matrix sym = 0.5 * (K + K.transpose());
  return {std::move(sym), "katz", Direction::max_similarity};
}

/// Default Katz attenuation: 0.9 / rho(A).
inline double default_katz_attenuation(const TripartiteGraph& g) {
  const double rho = spectral_radius(g.adjacency());
  return rho > 0.0 ? 0.9 / rho : 0.0;
}

/// FP(target | i) for every start node i: expected steps of the random walk p_ij = A_ij / d_i
/// to first reach `target`, by Gauss-Seidel sweeps over the recurrence
/// FP(k|k) = 0, FP(k|i) = 1 + sum_j p_ij FP(k|j).
inline Vector first_passage(const TripartiteGraph& g, Index target, double tol = 1e-8, int maxit = 1000000) {
  const Index N = g.size();
  if (target < 0 || target >= N) throw ParameterError("target node out of range");
  // Every node must reach the target.
  std::vector<char> reach(static_cast<std::size_t>(N), 0);
  std::vector<Index> stack{target};
  reach[static_cast<std::size_t>(target)] = 1;
  while (!stack.empty()) {
    Index v = stack.back();
    stack.pop_back();
    for (Index w : g.neighbors(v))
      if (!reach[static_cast<std::size_t>(w)]) {
        reach[static_cast<std::size_t>(w)] = 1;
        stack.push_back(w);
      }
  }
  for (Index i = 0; i < N; ++i)
    if (!reach[static_cast<std::size_t>(i)])
      throw SingularityError("node " + std::to_string(i) + " never reaches node " + std::to_string(target) +
                             ": infinite first-passage time");

  const Matrix& A = g.adjacency();
  const Vector& d = g.degree();
  Vector fp = Vector::Zero(N);
  for (int it = 0; it < maxit; ++it) {
    double change = 0.0;
    for (Index i = 0; i < N; ++i) {
      if (i == target) continue;
      double acc = 0.0;
      for (Index j : g.neighbors(i)) acc += A(i, j) * fp[j];
      const double next = 1.0 + acc / d[i];
      change = std::max(change, std::abs(next - fp[i]));
      fp[i] = next;
    }
    if (change <= tol) return fp;
  }
  throw ConvergenceError("first-passage iteration did not converge", {});
}

/// CT(i, j) = FP(i|j) + FP(j|i).
inline SimilarityMatrix commute_times(const TripartiteGraph& g, double tol = 1e-8) {
  check_baseline_size(g.size());
  const Index N = g.size();
  Matrix F(N, N);  // F(k, i) = FP(k | i)
  for (Index k = 0; k < N; ++k) F.row(k) = first_passage(g, k, tol).transpose();
  Matrix ct(N, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) ct(i, j) = F(i, j) + F(j, i);
  return {std::move(ct), "ct", Direction::min_distance};
}

/// Closed forms through L^+ (connected graphs):
/// FP(k|i) = (L^+ d)_i - vol l_ik - (L^+ d)_k + vol l_kk,  CT(i,k) = vol (l_ii + l_kk - 2 l_ik).
inline double first_passage_from_pinv(const Matrix& pinv, const Vector& pinv_degree, double volume, Index target,
                                      Index start) {
  return pinv_degree[start] - volume * pinv(start, target) - pinv_degree[target] + volume * pinv(target, target);
}

inline double commute_time_from_pinv(const Matrix& pinv, double volume, Index i, Index j) {
  return volume * (pinv(i, i) + pinv(j, j) - 2.0 * pinv(i, j));
}

/// Ranks the item nodes relative to `user`'s node, leaving out `excluded` items.
inline RankingList rank_from_similarity(const SimilarityMatrix& sim, const TripartiteGraph& g, Index user,
                                        std::span<const Index> excluded = {}) {
  Vector scores(g.n_items());
  for (Index j = 0; j < g.n_items(); ++j) scores[j] = sim.values(g.user_node(user), g.item_node(j));
  return rank_all(scores, excluded, sim.direction);
}

}  // namespace ncdrec
