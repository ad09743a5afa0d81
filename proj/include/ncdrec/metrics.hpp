#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "ranking.hpp"
#include "sparse.hpp"

namespace ncdrec {

// ---------------------------------------------------------------------------
// Top-N accuracy. Each test case has exactly one relevant item.

/// 1 if `test_item` sits within the first N positions, else 0.
inline double recall_at(const RankingList& list, Index test_item, std::size_t N) {
  const std::size_t rank = list.rank_of(test_item);
  if (rank == 0) throw ProtocolError("test item " + std::to_string(test_item) + " is not among the candidates");
  return rank <= N ? 1.0 : 0.0;
}

/// Mean recall at N over cases, given the 1-based rank of each case's test item.
inline double mean_recall_at(std::span<const std::size_t> ranks, std::size_t N) {
  if (ranks.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r : ranks) hits += (r >= 1 && r <= N) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

/// With one relevant item per list, precision at N is recall at N divided by N.
inline double precision_at(double recall, std::size_t N) {
  if (N == 0) throw ParameterError("N must be positive");
  return recall / static_cast<double>(N);
}

/// Relevance of item j is relevance[j].
inline double r_score(const RankingList& list, std::span<const double> relevance, double halflife,
                      double neutral = 0.0) {
  if (!(halflife > 1.0)) throw ParameterError("R-score half-life must exceed 1");
  double total = 0.0;
  for (std::size_t q = 1; q <= list.size(); ++q) {
    const double gain = std::max(relevance[static_cast<std::size_t>(list.items[q - 1])] - neutral, 0.0);
    if (gain > 0.0) total += gain / std::exp2(static_cast<double>(q - 1) / (halflife - 1.0));
  }
  return total;
}

/// DCG@k with gain 2^y - 1 and position discount log2(2 + q), q = 1, 2, ...
inline double dcg_at(std::span<const double> gains_in_order, std::size_t k) {
  double total = 0.0;
  for (std::size_t q = 1; q <= std::min(k, gains_in_order.size()); ++q)
    total += (std::exp2(gains_in_order[q - 1]) - 1.0) / std::log2(2.0 + static_cast<double>(q));
  return total;
}

/// DCG of the list over DCG of the best ordering of the same items; 0 when nothing is relevant.
inline double ndcg_at(const RankingList& list, std::span<const double> relevance, std::size_t k) {
  if (k == 0) throw ParameterError("k must be positive");
  std::vector<double> gains;
  gains.reserve(list.size());
  for (Index j : list.items) gains.push_back(relevance[static_cast<std::size_t>(j)]);
  const double actual = dcg_at(gains, k);
  std::sort(gains.begin(), gains.end(), std::greater<>());
  const double ideal = dcg_at(gains, k);
  return ideal > 0.0 ? actual / ideal : 0.0;
}

/// 1 / position of the first relevant item; 0 if none is relevant.
inline double reciprocal_rank(const RankingList& list, std::span<const double> relevance) {
  for (std::size_t q = 1; q <= list.size(); ++q)
    if (relevance[static_cast<std::size_t>(list.items[q - 1])] > 0.0) return 1.0 / static_cast<double>(q);
  return 0.0;
}

inline double mrr(std::span<const double> reciprocal_ranks) {
  if (reciprocal_ranks.empty()) return 0.0;
  return std::accumulate(reciprocal_ranks.begin(), reciprocal_ranks.end(), 0.0) /
         static_cast<double>(reciprocal_ranks.size());
}

// ---------------------------------------------------------------------------
// Agreement between a reference ranking and a system ranking. Both are given as
// score vectors over the same items (position i in each refers to the same item);
// higher score means more preferred.

struct PairCounts {
  std::int64_t concordant = 0;      // C
  std::int64_t discordant = 0;      // D
  std::int64_t total = 0;           // N
  std::int64_t reference_ties = 0;  // T_r
  std::int64_t system_ties = 0;     // T_pi
  std::int64_t system_only_ties = 0;  // X: reference orders the pair, system ties it
};

namespace detail {

inline std::int64_t tied_pairs(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::int64_t ties = 0;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    const auto g = static_cast<std::int64_t>(j - i);
    ties += g * (g - 1) / 2;
    i = j;
  }
  return ties;
}

/// Number of pairs i < j with v[i] > v[j]; sorts v.
inline std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo,
                                     std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t a = lo, b = mid, out = lo;
  while (a < mid && b < hi) {
    if (v[b] < v[a]) {
      inv += static_cast<std::int64_t>(mid - a);
      scratch[out++] = v[b++];
    } else {
      scratch[out++] = v[a++];
    }
  }
  while (a < mid) scratch[out++] = v[a++];
  while (b < hi) scratch[out++] = v[b++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

/// Average ranks (1-based) with ties sharing their mean rank.
inline std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double mean = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = mean;
    i = j;
  }
  return ranks;
}

}  // namespace detail

/// O(n log n) pair classification (Knight's method).
inline PairCounts pair_counts(std::span<const double> reference, std::span<const double> system) {
  if (reference.size() != system.size()) throw DimensionError("rankings cover different item counts");
  const std::size_t n = reference.size();
  PairCounts pc;
  pc.total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n > 0 ? n - 1 : 0) / 2;
  pc.reference_ties = detail::tied_pairs({reference.begin(), reference.end()});
  pc.system_ties = detail::tied_pairs({system.begin(), system.end()});

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (reference[a] != reference[b]) return reference[a] < reference[b];
    return system[a] < system[b];
  });
  std::int64_t joint_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && reference[order[j]] == reference[order[i]] && system[order[j]] == system[order[i]]) ++j;
    const auto g = static_cast<std::int64_t>(j - i);
    joint_ties += g * (g - 1) / 2;
    i = j;
  }
  std::vector<double> seq(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = system[order[i]];
  pc.discordant = detail::count_inversions(seq, scratch, 0, n);
  pc.concordant = pc.total - pc.reference_ties - pc.system_ties + joint_ties - pc.discordant;
  pc.system_only_ties = pc.total - pc.reference_ties - pc.concordant - pc.discordant;
  return pc;
}

/// (C - D) / sqrt((N - T_r)(N - T_pi)); empty when either ranking is fully tied.
inline std::optional<double> kendall_tau(std::span<const double> reference, std::span<const double> system) {
  const PairCounts pc = pair_counts(reference, system);
  const double a = static_cast<double>(pc.total - pc.reference_ties);
  const double b = static_cast<double>(pc.total - pc.system_ties);
  if (a <= 0.0 || b <= 0.0) return std::nullopt;
  return static_cast<double>(pc.concordant - pc.discordant) / (std::sqrt(a) * std::sqrt(b));
}

/// Pearson correlation of midranks with population moments; empty on zero variance.
inline std::optional<double> spearman_rho(std::span<const double> reference, std::span<const double> system) {
  if (reference.size() != system.size()) throw DimensionError("rankings cover different item counts");
  const std::size_t m = reference.size();
  if (m == 0) return std::nullopt;
  const auto r = detail::midranks(reference), p = detail::midranks(system);
  const double mr = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(m);
  const double mp = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(m);
  double cov = 0.0, vr = 0.0, vp = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    cov += (r[i] - mr) * (p[i] - mp);
    vr += (r[i] - mr) * (r[i] - mr);
    vp += (p[i] - mp) * (p[i] - mp);
  }
  if (vr <= 0.0 || vp <= 0.0) return std::nullopt;
  const double sr = std::sqrt(vr / static_cast<double>(m)), sp = std::sqrt(vp / static_cast<double>(m));
  return cov / static_cast<double>(m) / (sr * sp);
}

/// (D + X/2) / (N - T_r); empty when the reference ties every pair.
inline std::optional<double> ndpm(std::span<const double> reference, std::span<const double> system) {
  const PairCounts pc = pair_counts(reference, system);
  const double denom = static_cast<double>(pc.total - pc.reference_ties);
  if (denom <= 0.0) return std::nullopt;
  return (static_cast<double>(pc.discordant) + 0.5 * static_cast<double>(pc.system_only_ties)) / denom;
}

// ---------------------------------------------------------------------------
// Degree of agreement.

struct DoaCounts {
  double correct = 0.0;  // pairs (test item, unwatched item) with the test item strictly ahead
  double checked = 0.0;
  double value() const { return checked > 0.0 ? correct / checked : 0.0; }
};

/// Pairs every test item with every item outside train and test. `scores` covers all items.
/// Empty when either side of the pairing is empty.
inline std::optional<DoaCounts> doa(const Vector& scores, std::span<const Index> test_items,
                                    std::span<const Index> train_items) {
  std::vector<char> excluded(static_cast<std::size_t>(scores.size()), 0);
  for (Index j : train_items) excluded.at(static_cast<std::size_t>(j)) = 1;
  for (Index j : test_items) {
    if (excluded.at(static_cast<std::size_t>(j)) == 1) throw ProtocolError("test and training sets overlap");
    excluded[static_cast<std::size_t>(j)] = 2;
  }
  std::vector<double> others;
  for (Index j = 0; j < scores.size(); ++j)
    if (!excluded[static_cast<std::size_t>(j)]) others.push_back(scores[j]);
  if (others.empty() || test_items.empty()) return std::nullopt;
  std::sort(others.begin(), others.end());
  DoaCounts c;
  for (Index j : test_items) {
    const auto below = std::lower_bound(others.begin(), others.end(), scores[j]) - others.begin();
    c.correct += static_cast<double>(below);
  }
  c.checked = static_cast<double>(test_items.size()) * static_cast<double>(others.size());
  return c;
}

/// Macro (mean of per-user values) and micro (pooled pairs) aggregation.
class DoaAggregate {
public:
  void add(const DoaCounts& c) {
    sum_values_ += c.value();
    correct_ += c.correct;
    checked_ += c.checked;
    ++users_;
  }
  void merge(const DoaAggregate& other) {
    sum_values_ += other.sum_values_;
    correct_ += other.correct_;
    checked_ += other.checked_;
    users_ += other.users_;
  }
  double macro() const { return users_ ? sum_values_ / static_cast<double>(users_) : 0.0; }
  double micro() const { return checked_ > 0.0 ? correct_ / checked_ : 0.0; }
  std::size_t users() const noexcept { return users_; }

private:
  double sum_values_ = 0.0;
  double correct_ = 0.0;
  double checked_ = 0.0;
  std::size_t users_ = 0;
};

}  // namespace ncdrec
