#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "sparse.hpp"

namespace ncdrec {

/// Factors of the decomposition-derived matrices. W = Z X^T and D = X Y are
/// only ever applied through these factors.
struct NcdFactors {
  SparseMatrix X;  // m x K, row-normalized aggregation matrix
  SparseMatrix Y;  // K x m, row-normalized transpose of the aggregation matrix
  SparseMatrix Z;  // n x K, per-user mean rating inside each block (0 if none rated)
};

inline NcdFactors build_factors(const RatingsDataset& data, const Decomposition& decomposition) {
  if (decomposition.n_items() != data.n_items())
    throw DimensionError("decomposition covers " + std::to_string(decomposition.n_items()) + " items, dataset has " +
                         std::to_string(data.n_items()));
  NcdFactors f;
  const SparseMatrix& A = decomposition.aggregation();
  f.X = row_normalized(A);
  f.Y = row_normalized(SparseMatrix(A.transpose()));

  const Index K = decomposition.n_blocks();
  std::vector<Triplet> sums, counts;
  for (const Rating& r : data.ratings()) {
    if (r.value <= 0.0) continue;
    for (Index k : decomposition.blocks_of(r.item)) {
      sums.emplace_back(r.user, k, r.value);
      counts.emplace_back(r.user, k, 1.0);
    }
  }
  SparseMatrix total = make_sparse(data.n_users(), K, sums);
  SparseMatrix n_rated = make_sparse(data.n_users(), K, counts);
  f.Z = total;
  for (Index u = 0; u < f.Z.outerSize(); ++u) {
    SparseMatrix::InnerIterator c(n_rated, u);
    for (SparseMatrix::InnerIterator it(f.Z, u); it; ++it, ++c) it.valueRef() /= c.value();
  }
  return f;
}

/// Item-to-item co-rating structure: C = R^T R with zeroed diagonal, H its row-normalized form.
struct DirectProximity {
  SparseMatrix C;
  SparseMatrix H;
  /// Items whose C row is empty; their H row is the uniform distribution.
  std::vector<Index> uniform_rows;
};

inline DirectProximity build_direct_proximity(const RatingsDataset& data) {
  const Index m = data.n_items();
  const SparseMatrix& R = data.R();
  SparseMatrix Rt = R.transpose();
  DirectProximity dp;
  dp.C = SparseMatrix(Rt * R);
  dp.C.prune([](Index row, Index col, double value) { return row != col && value != 0.0; });
  dp.C.makeCompressed();

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(dp.C.nonZeros()));
  for (Index i = 0; i < m; ++i) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(dp.C, i); it; ++it) s += it.value();
    if (s > 0.0) {
      for (SparseMatrix::InnerIterator it(dp.C, i); it; ++it) entries.emplace_back(i, it.col(), it.value() / s);
    } else {
      dp.uniform_rows.push_back(i);
      for (Index j = 0; j < m; ++j) entries.emplace_back(i, j, 1.0 / static_cast<double>(m));
    }
  }
  dp.H = make_sparse(m, m, entries);
  return dp;
}

/// Undirected graph on blocks; an edge joins two blocks that share at least one item.
class BlockCouplingGraph {
public:
  explicit BlockCouplingGraph(Index n_vertices = 0) : adjacency_(static_cast<std::size_t>(n_vertices)) {}

  void add_edge(Index a, Index b) {
    if (a == b) return;
    adjacency_.at(static_cast<std::size_t>(a)).push_back(b);
    adjacency_.at(static_cast<std::size_t>(b)).push_back(a);
  }

  void finalize() {
    for (auto& nbrs : adjacency_) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
  }

  Index n_vertices() const noexcept { return static_cast<Index>(adjacency_.size()); }
  const std::vector<Index>& neighbors(Index v) const { return adjacency_.at(static_cast<std::size_t>(v)); }

  bool has_edge(Index a, Index b) const {
    const auto& n = neighbors(a);
    return std::binary_search(n.begin(), n.end(), b);
  }

  /// Edges (a, b) with a < b, lexicographic.
  std::vector<std::pair<Index, Index>> edges() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index a = 0; a < n_vertices(); ++a)
      for (Index b : neighbors(a))
        if (a < b) out.emplace_back(a, b);
    return out;
  }

private:
  std::vector<std::vector<Index>> adjacency_;
};

inline BlockCouplingGraph build_coupling_graph(const Decomposition& decomposition) {
  BlockCouplingGraph g(decomposition.n_blocks());
  for (Index j = 0; j < decomposition.n_items(); ++j) {
    const auto& bs = decomposition.blocks_of(j);
    for (std::size_t a = 0; a < bs.size(); ++a)
      for (std::size_t b = a + 1; b < bs.size(); ++b) g.add_edge(bs[a], bs[b]);
  }
  g.finalize();
  return g;
}

/// Connected components, each sorted ascending, ordered by smallest member.
inline std::vector<std::vector<Index>> connected_components(const BlockCouplingGraph& g) {
  std::vector<std::vector<Index>> components;
  std::vector<char> seen(static_cast<std::size_t>(g.n_vertices()), 0);
  std::vector<Index> stack;
  for (Index start = 0; start < g.n_vertices(); ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    std::vector<Index> comp;
    stack.push_back(start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      Index v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (Index w : g.neighbors(v))
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          stack.push_back(w);
        }
    }
    std::sort(comp.begin(), comp.end());
    components.push_back(std::move(comp));
  }
  return components;
}

inline bool is_connected(const BlockCouplingGraph& g) { return connected_components(g).size() <= 1; }

}  // namespace ncdrec
