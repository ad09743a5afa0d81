#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dataset.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "ranking.hpp"
#include "recommenders.hpp"

namespace ncdrec {

struct ProtocolConfig {
  double probe_fraction = 0.014;
  Index candidate_pool = 1000;
  double relevance_threshold = 5.0;
  double head_mass = 0.33;
  Index new_user_count = 100;
  Index min_ratings = 100;
  std::vector<double> keep_fractions{0.04, 0.06, 0.08, 0.10};
  std::uint64_t seed = 7;
  std::size_t max_n = 20;
  unsigned threads = 1;

  void validate() const {
    auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!in_unit(probe_fraction)) throw ParameterError("probe_fraction must lie in (0,1)");
    if (!in_unit(head_mass)) throw ParameterError("head_mass must lie in (0,1)");
    if (candidate_pool < 1) throw ParameterError("candidate_pool must be at least 1");
    if (new_user_count < 1) throw ParameterError("new_user_count must be at least 1");
    if (min_ratings < 1) throw ParameterError("min_ratings must be at least 1");
    if (max_n < 1) throw ParameterError("max_n must be at least 1");
    if (keep_fractions.empty()) throw ParameterError("keep_fractions is empty");
    for (double f : keep_fractions)
      if (!(f > 0.0 && f <= 1.0)) throw ParameterError("keep fractions must lie in (0,1]");
  }
};

namespace detail {

/// Independent stream per (seed, stream, index) so results do not depend on thread count.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Runs body(i) for i in [0, count) over `threads` workers with static striding.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Standard protocol: hide a random probe sample, rank each 5-star probe item
// against candidate_pool items the user never rated.

struct TestCase {
  Index user = 0;
  Index item = 0;
  std::vector<Index> candidates;  // test item first, then the sampled unrated items
  bool truncated = false;         // fewer unrated items than candidate_pool existed
};

struct StandardSplit {
  RatingsDataset train;
  std::vector<Rating> probe;
  std::vector<TestCase> cases;
  std::size_t truncated = 0;
};

inline StandardSplit make_standard_split(const RatingsDataset& full, const ProtocolConfig& config) {
  config.validate();
  const auto& ratings = full.ratings();
  const std::size_t probe_size =
      static_cast<std::size_t>(std::floor(config.probe_fraction * static_cast<double>(ratings.size())));
  if (probe_size == 0) throw ProtocolError("probe set is empty; dataset too small for probe_fraction");

  std::vector<std::size_t> order(ratings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = detail::stream_rng(config.seed, 1, 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(probe_size);
  std::sort(order.begin(), order.end());

  std::vector<bool> keep(ratings.size(), true);
  StandardSplit split;
  for (std::size_t k : order) {
    keep[k] = false;
    split.probe.push_back(ratings[k]);
  }
  split.train = full.subset(keep, Coverage::allow_empty);

  std::vector<char> rated(static_cast<std::size_t>(full.n_items()));
  for (const Rating& r : split.probe) {
    if (r.value < config.relevance_threshold) continue;
    TestCase tc;
    tc.user = r.user;
    tc.item = r.item;
    std::fill(rated.begin(), rated.end(), 0);
    for (Index j : full.rated_items(r.user)) rated[static_cast<std::size_t>(j)] = 1;
    std::vector<Index> unrated;
    for (Index j = 0; j < full.n_items(); ++j)
      if (!rated[static_cast<std::size_t>(j)]) unrated.push_back(j);
    auto case_rng = detail::stream_rng(config.seed, 2, split.cases.size());
    const auto want = static_cast<std::size_t>(config.candidate_pool);
    if (unrated.size() <= want) {
      tc.truncated = unrated.size() < want;
    } else {
      // partial Fisher-Yates: first `want` slots become the sample
      for (std::size_t i = 0; i < want; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, unrated.size() - 1);
        std::swap(unrated[i], unrated[pick(case_rng)]);
      }
      unrated.resize(want);
    }
    split.truncated += tc.truncated ? 1 : 0;
    tc.candidates.reserve(unrated.size() + 1);
    tc.candidates.push_back(tc.item);
    tc.candidates.insert(tc.candidates.end(), unrated.begin(), unrated.end());
    split.cases.push_back(std::move(tc));
  }
  if (split.cases.empty()) throw ProtocolError("no probe rating reaches the relevance threshold");
  return split;
}

struct RankingReport {
  std::size_t cases = 0;
  std::size_t truncated = 0;
  std::vector<std::size_t> ranks;  // 1-based rank of each case's test item
  std::vector<double> recall;      // index N-1
  std::vector<double> precision;
  std::vector<double> ndcg;
  double r5 = 0.0;
  double r10 = 0.0;
  double mrr = 0.0;
};

/// Ranks every case's candidates with an already-fitted method.
inline RankingReport evaluate_cases(const Method& method, std::span<const TestCase> cases,
                                    const ProtocolConfig& config) {
  RankingReport report;
  report.cases = cases.size();
  report.ranks.assign(cases.size(), 0);
  std::vector<double> ndcg_sum(cases.size() * config.max_n, 0.0);
  std::vector<double> r5(cases.size()), r10(cases.size()), rr(cases.size());

  detail::parallel_for(cases.size(), config.threads, [&](std::size_t c) {
    const TestCase& tc = cases[c];
    const Vector s = method.scores(tc.user);
    const RankingList list = rank_items(s, tc.candidates);
    std::vector<double> relevance(static_cast<std::size_t>(s.size()), 0.0);
    relevance[static_cast<std::size_t>(tc.item)] = 1.0;
    report.ranks[c] = list.rank_of(tc.item);
    if (report.ranks[c] == 0) throw ProtocolError("test item missing from its candidate list");
    for (std::size_t n = 1; n <= config.max_n; ++n) ndcg_sum[c * config.max_n + n - 1] = ndcg_at(list, relevance, n);
    r5[c] = r_score(list, relevance, 5.0);
    r10[c] = r_score(list, relevance, 10.0);
    rr[c] = reciprocal_rank(list, relevance);
  });

  for (const TestCase& tc : cases) report.truncated += tc.truncated ? 1 : 0;
  const double denom = cases.empty() ? 1.0 : static_cast<double>(cases.size());
  for (std::size_t n = 1; n <= config.max_n; ++n) {
    const double rec = mean_recall_at(report.ranks, n);
    report.recall.push_back(rec);
    report.precision.push_back(precision_at(rec, n));
    double total = 0.0;
    for (std::size_t c = 0; c < cases.size(); ++c) total += ndcg_sum[c * config.max_n + n - 1];
    report.ndcg.push_back(total / denom);
  }
  report.r5 = std::accumulate(r5.begin(), r5.end(), 0.0) / denom;
  report.r10 = std::accumulate(r10.begin(), r10.end(), 0.0) / denom;
  report.mrr = mrr(rr);
  return report;
}

inline RankingReport protocol_standard(const RatingsDataset& full, const Decomposition& decomposition,
                                       const ProtocolConfig& config, Method& method) {
  const StandardSplit split = make_standard_split(full, config);
  method.fit(split.train, decomposition, {});
  return evaluate_cases(method, split.cases, config);
}

// ---------------------------------------------------------------------------
// Long tail: drop the test cases whose item belongs to the popular head.

struct PopularitySplit {
  std::vector<char> is_head;
  Index head_size = 0;
};

/// Head = most-rated items (ties by ascending index) until their share of all ratings reaches head_mass.
inline PopularitySplit popularity_split(std::span<const Index> counts, double head_mass) {
  if (!(head_mass > 0.0 && head_mass < 1.0)) throw ParameterError("head_mass must lie in (0,1)");
  std::vector<Index> order(counts.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
  });
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), Index{0}));
  const double target = head_mass * total * (1.0 - 1e-12);
  PopularitySplit split;
  split.is_head.assign(counts.size(), 0);
  double cumulative = 0.0;
  for (Index j : order) {
    if (cumulative >= target) break;
    split.is_head[static_cast<std::size_t>(j)] = 1;
    cumulative += static_cast<double>(counts[static_cast<std::size_t>(j)]);
    ++split.head_size;
  }
  return split;
}

inline std::vector<TestCase> tail_cases(const StandardSplit& split, const RatingsDataset& full,
                                        const ProtocolConfig& config) {
  const PopularitySplit pop = popularity_split(full.item_counts(), config.head_mass);
  std::vector<TestCase> tail;
  for (const TestCase& tc : split.cases)
    if (!pop.is_head[static_cast<std::size_t>(tc.item)]) tail.push_back(tc);
  if (tail.empty()) throw ProtocolError("long-tail test set is empty");
  return tail;
}

inline RankingReport protocol_long_tail(const RatingsDataset& full, const Decomposition& decomposition,
                                        const ProtocolConfig& config, Method& method) {
  const StandardSplit split = make_standard_split(full, config);
  const std::vector<TestCase> tail = tail_cases(split, full, config);
  method.fit(split.train, decomposition, {});
  return evaluate_cases(method, tail, config);
}

// ---------------------------------------------------------------------------
// New users: keep a small fraction of some heavy users' ratings and compare the
// resulting rankings with the ones induced by their complete rating sets.

inline std::vector<Index> select_new_users(const RatingsDataset& full, const ProtocolConfig& config) {
  std::vector<Index> eligible;
  for (Index u = 0; u < full.n_users(); ++u)
    if (full.rating_count(u) >= config.min_ratings) eligible.push_back(u);
  if (static_cast<Index>(eligible.size()) < config.new_user_count)
    throw ProtocolError("only " + std::to_string(eligible.size()) + " users have at least " +
                        std::to_string(config.min_ratings) + " ratings; " + std::to_string(config.new_user_count) +
                        " required (short by " +
                        std::to_string(config.new_user_count - static_cast<Index>(eligible.size())) + ")");
  auto rng = detail::stream_rng(config.seed, 3, 0);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(static_cast<std::size_t>(config.new_user_count));
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

/// Keeps round(fraction * count) (at least one) of each selected user's ratings; other users untouched.
inline RatingsDataset sparsify_users(const RatingsDataset& full, std::span<const Index> users, double fraction,
                                     std::uint64_t seed) {
  std::vector<char> selected(static_cast<std::size_t>(full.n_users()), 0);
  for (Index u : users) selected.at(static_cast<std::size_t>(u)) = 1;
  const auto& ratings = full.ratings();
  std::vector<bool> keep(ratings.size(), true);
  // ratings are sorted by (user, item), so each user's ratings are one contiguous run
  std::size_t begin = 0;
  while (begin < ratings.size()) {
    std::size_t end = begin;
    while (end < ratings.size() && ratings[end].user == ratings[begin].user) ++end;
    const Index u = ratings[begin].user;
    if (selected[static_cast<std::size_t>(u)]) {
      const std::size_t count = end - begin;
      const auto kept = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count))), 1, count);
      std::vector<std::size_t> idx(count);
      std::iota(idx.begin(), idx.end(), begin);
      auto rng = detail::stream_rng(seed, 4, static_cast<std::uint64_t>(u));
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::size_t k = kept; k < count; ++k) keep[idx[k]] = false;
    }
    begin = end;
  }
  return full.subset(keep, Coverage::allow_empty);
}

struct NewUserScores {
  double kendall_tau = 0.0;
  double spearman_rho = 0.0;
  double doa_macro = 0.0;
  double doa_micro = 0.0;
  double ndpm = 0.0;
  std::size_t users = 0;
  std::size_t undefined = 0;  // users for whom some pair metric was undefined
};

/// Reference = the user's complete ratings. Pair metrics run over the items the user rated;
/// DOA pairs those items against every item the user never rated.
inline NewUserScores evaluate_new_users(const Method& method, const RatingsDataset& full,
                                        std::span<const Index> users, unsigned threads = 1) {
  struct PerUser {
    std::optional<double> tau, rho, ndpm;
    std::optional<DoaCounts> doa;
  };
  std::vector<PerUser> per(users.size());
  detail::parallel_for(users.size(), threads, [&](std::size_t k) {
    const Index u = users[k];
    const Vector s = method.scores(u);
    std::vector<double> reference, system;
    std::vector<Index> items;
    for (SparseMatrix::InnerIterator it(full.R(), u); it; ++it) {
      items.push_back(it.col());
      reference.push_back(it.value());
      system.push_back(s[it.col()]);
    }
    per[k].tau = kendall_tau(reference, system);
    per[k].rho = spearman_rho(reference, system);
    per[k].ndpm = ndpm(reference, system);
    per[k].doa = doa(s, items, {});
  });

  NewUserScores out;
  double tau = 0, rho = 0, nd = 0;
  std::size_t nt = 0, nr = 0, nn = 0;
  DoaAggregate agg;
  for (const PerUser& p : per) {
    if (p.tau) tau += *p.tau, ++nt;
    if (p.rho) rho += *p.rho, ++nr;
    if (p.ndpm) nd += *p.ndpm, ++nn;
    if (p.doa) agg.add(*p.doa);
    if (!p.tau || !p.rho || !p.ndpm || !p.doa) ++out.undefined;
  }
  out.users = users.size();
  out.kendall_tau = nt ? tau / static_cast<double>(nt) : 0.0;
  out.spearman_rho = nr ? rho / static_cast<double>(nr) : 0.0;
  out.ndpm = nn ? nd / static_cast<double>(nn) : 0.0;
  out.doa_macro = agg.macro();
  out.doa_micro = agg.micro();
  return out;
}

struct NewUserResult {
  double keep_fraction = 0.0;
  std::string method;
  NewUserScores scores;
};

inline std::vector<NewUserResult> protocol_new_users(const RatingsDataset& full, const Decomposition& decomposition,
                                                     const ProtocolConfig& config, std::span<Method* const> methods) {
  config.validate();
  if (methods.empty()) throw ParameterError("no methods to evaluate");
  const std::vector<Index> users = select_new_users(full, config);
  std::vector<NewUserResult> results;
  for (double fraction : config.keep_fractions) {
    const RatingsDataset snapshot = sparsify_users(full, users, fraction, config.seed);
    for (Method* method : methods) {
      method->fit(snapshot, decomposition, users);
      results.push_back({fraction, method->name(), evaluate_new_users(*method, full, users, config.threads)});
    }
  }
  return results;
}

// ---------------------------------------------------------------------------
// Predefined train/test splits (ML100K u1..u5) scored by DOA.

struct DoaSplitResult {
  double macro = 0.0;
  double micro = 0.0;
  std::size_t users = 0;
  std::size_t skipped = 0;  // users whose complement was empty
};

/// `method` must already be fitted on `train`. Both datasets share one id universe.
inline DoaSplitResult evaluate_doa_split(const Method& method, const RatingsDataset& train,
                                         const RatingsDataset& test, unsigned threads = 1) {
  if (train.n_users() != test.n_users() || train.n_items() != test.n_items())
    throw DimensionError("train and test splits use different id universes");
  std::vector<Index> users;
  for (Index u = 0; u < test.n_users(); ++u)
    if (test.rating_count(u) > 0) users.push_back(u);
  std::vector<std::optional<DoaCounts>> per(users.size());
  detail::parallel_for(users.size(), threads, [&](std::size_t k) {
    const Index u = users[k];
    const Vector s = method.scores(u);
    per[k] = doa(s, test.rated_items(u), train.rated_items(u));
  });
  DoaAggregate agg;
  DoaSplitResult out;
  for (const auto& p : per) {
    if (p) agg.add(*p);
    else ++out.skipped;
  }
  out.macro = agg.macro();
  out.micro = agg.micro();
  out.users = agg.users();
  return out;
}

}  // namespace ncdrec
