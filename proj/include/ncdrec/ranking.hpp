#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "errors.hpp"
#include "sparse.hpp"

namespace ncdrec {

/// Whether larger scores (similarities) or smaller scores (distances) rank first.
enum class Direction { max_similarity, min_distance };

/// Items in recommendation order, most relevant first, with the score each was ranked by.
struct RankingList {
  std::vector<Index> items;
  std::vector<double> scores;

  std::size_t size() const noexcept { return items.size(); }

  /// 1-based position of `item`, or 0 when it is not in the list.
  std::size_t rank_of(Index item) const {
    auto it = std::find(items.begin(), items.end(), item);
    return it == items.end() ? 0 : static_cast<std::size_t>(it - items.begin()) + 1;
  }
};

/// Orders `candidates` by score; equal scores fall back to ascending item index.
inline RankingList rank_items(const Vector& scores, std::span<const Index> candidates,
                              Direction direction = Direction::max_similarity) {
  for (Index j : candidates)
    if (!std::isfinite(scores[j])) throw ParameterError("non-finite score for item " + std::to_string(j));
  std::vector<Index> order(candidates.begin(), candidates.end());
  const bool descending = direction == Direction::max_similarity;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (scores[a] != scores[b]) return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    return a < b;
  });
  RankingList list;
  list.items = std::move(order);
  list.scores.reserve(list.items.size());
  for (Index j : list.items) list.scores.push_back(scores[j]);
  return list;
}

/// Ranks every item except those in `excluded` (any order).
inline RankingList rank_all(const Vector& scores, std::span<const Index> excluded = {},
                            Direction direction = Direction::max_similarity) {
  std::vector<char> skip(static_cast<std::size_t>(scores.size()), 0);
  for (Index j : excluded) skip.at(static_cast<std::size_t>(j)) = 1;
  std::vector<Index> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  for (Index j = 0; j < scores.size(); ++j)
    if (!skip[static_cast<std::size_t>(j)]) candidates.push_back(j);
  return rank_items(scores, candidates, direction);
}

}  // namespace ncdrec
