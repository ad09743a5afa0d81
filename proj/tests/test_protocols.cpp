#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"

using namespace ncdrec;

namespace {

/// Scores the held-out ratings of each user by their full-data value: a ranker that knows the answers.
class OracleMethod final : public Method {
public:
  explicit OracleMethod(const RatingsDataset& full) : full_(&full) {}
  std::string name() const override { return "oracle"; }
  void fit(const RatingsDataset& train, const Decomposition&, std::span<const Index>) override {
    train_ = train.R();
  }
  Vector scores(Index user) const override {
    Vector s = Vector::Zero(full_->n_items());
    for (SparseMatrix::InnerIterator it(full_->R(), user); it; ++it)
      if (train_.coeff(user, it.col()) == 0.0) s[it.col()] = it.value();
    return s;
  }

private:
  const RatingsDataset* full_;
  SparseMatrix train_;
};

/// Scores every item by the user's full rating (unrated = 0).
class FullRatingsMethod final : public Method {
public:
  explicit FullRatingsMethod(const RatingsDataset& full) : full_(&full) {}
  std::string name() const override { return "full"; }
  void fit(const RatingsDataset&, const Decomposition&, std::span<const Index>) override {}
  Vector scores(Index user) const override { return Matrix(full_->R()).row(user).transpose(); }

private:
  const RatingsDataset* full_;
};

RatingsDataset five_star_data(std::uint64_t seed, Index n, Index m, double density) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Rating> r;
  for (Index u = 0; u < n; ++u)
    for (Index j = 0; j < m; ++j)
      if (unit(rng) < density || j == u % m) r.push_back({u, j, unit(rng) < 0.5 ? 5.0 : 3.0});
  return RatingsDataset::from_ratings(n, m, r, Coverage::allow_empty);
}

Decomposition single_block(Index m) {
  std::vector<Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Index{0});
  return Decomposition::from_blocks(m, {all});
}

}  // namespace

TEST(Protocols, ProbeSizeAndDeterminism) {
  const auto data = five_star_data(1, 100, 1200, 0.05);
  ProtocolConfig cfg;
  cfg.seed = 7;
  const auto a = make_standard_split(data, cfg);
  const auto b = make_standard_split(data, cfg);
  EXPECT_EQ(a.probe.size(), static_cast<std::size_t>(std::floor(0.014 * data.size())));
  EXPECT_EQ(a.train.size() + a.probe.size(), data.size());
  ASSERT_EQ(a.cases.size(), b.cases.size());
  for (std::size_t c = 0; c < a.cases.size(); ++c) EXPECT_EQ(a.cases[c].candidates, b.cases[c].candidates);
  for (const auto& tc : a.cases) {
    EXPECT_EQ(tc.candidates.size(), 1001u);
    EXPECT_EQ(tc.candidates.front(), tc.item);
    EXPECT_EQ(data.R().coeff(tc.user, tc.item), 5.0);
    EXPECT_EQ(a.train.R().coeff(tc.user, tc.item), 0.0);
    std::set<Index> uniq(tc.candidates.begin(), tc.candidates.end());
    EXPECT_EQ(uniq.size(), tc.candidates.size());
    for (std::size_t k = 1; k < tc.candidates.size(); ++k) EXPECT_EQ(data.R().coeff(tc.user, tc.candidates[k]), 0.0);
  }
  cfg.seed = 8;
  const auto c = make_standard_split(data, cfg);
  EXPECT_NE(a.probe.front().user * 10000 + a.probe.front().item, c.probe.front().user * 10000 + c.probe.front().item);
}

TEST(Protocols, SmallCatalogIsFlagged) {
  const auto data = five_star_data(2, 50, 300, 0.1);
  ProtocolConfig cfg;
  cfg.probe_fraction = 0.2;
  const auto split = make_standard_split(data, cfg);
  EXPECT_EQ(split.truncated, split.cases.size());
  for (const auto& tc : split.cases) EXPECT_LT(tc.candidates.size(), 1001u);
}

TEST(Protocols, PerfectRanker) {
  const auto data = five_star_data(3, 60, 1100, 0.05);
  ProtocolConfig cfg;
  cfg.probe_fraction = 0.1;
  OracleMethod oracle(data);
  const auto report = protocol_standard(data, single_block(1100), cfg, oracle);
  EXPECT_DOUBLE_EQ(report.recall[0], 1.0);
  EXPECT_DOUBLE_EQ(report.mrr, 1.0);
  EXPECT_DOUBLE_EQ(report.ndcg[0], 1.0);
  EXPECT_DOUBLE_EQ(report.r5, 1.0);
}

TEST(Protocols, RandomRankerRecall) {
  const auto data = five_star_data(4, 200, 1200, 0.04);
  ProtocolConfig cfg;
  cfg.probe_fraction = 0.3;
  cfg.threads = 2;
  const auto split = make_standard_split(data, cfg);
  RandomMethod random(99);
  random.fit(split.train, Decomposition::from_blocks(1, {{0}}), {});
  const auto report = evaluate_cases(random, split.cases, cfg);
  ASSERT_GT(report.cases, 1000u);
  EXPECT_NEAR(report.recall[9], 10.0 / 1001.0, 0.01);
  for (std::size_t n = 1; n < report.recall.size(); ++n) EXPECT_GE(report.recall[n], report.recall[n - 1]);
  // thread count does not change results
  cfg.threads = 1;
  EXPECT_EQ(evaluate_cases(random, split.cases, cfg).ranks, report.ranks);
}

TEST(Protocols, PopularitySplit) {
  const std::vector<Index> uniform(100, 7);
  const auto u = popularity_split(uniform, 0.33);
  EXPECT_EQ(u.head_size, 33);
  for (Index j = 0; j < 100; ++j) EXPECT_EQ(u.is_head[static_cast<std::size_t>(j)], j < 33);

  const std::vector<Index> skewed{10, 50, 20, 20};
  const auto s = popularity_split(skewed, 0.33);
  EXPECT_EQ(s.head_size, 1);
  EXPECT_TRUE(s.is_head[1]);

  // Zipf counts against a sort-and-scan oracle
  std::vector<Index> zipf(200);
  for (Index j = 0; j < 200; ++j) zipf[static_cast<std::size_t>(j)] = 1000 / (1 + (j * 37) % 200);
  const auto z = popularity_split(zipf, 0.33);
  std::vector<Index> order(200);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return zipf[a] > zipf[b]; });
  const double total = std::accumulate(zipf.begin(), zipf.end(), 0.0);
  double cum = 0;
  std::vector<char> head(200, 0);
  for (Index j : order) {
    if (cum / total >= 0.33) break;
    head[static_cast<std::size_t>(j)] = 1;
    cum += zipf[static_cast<std::size_t>(j)];
  }
  EXPECT_EQ(z.is_head, head);
}

TEST(Protocols, LongTailDropsHeadItems) {
  const auto data = five_star_data(5, 80, 1100, 0.05);
  ProtocolConfig cfg;
  cfg.probe_fraction = 0.1;
  const auto split = make_standard_split(data, cfg);
  const auto tail = tail_cases(split, data, cfg);
  const auto pop = popularity_split(data.item_counts(), cfg.head_mass);
  EXPECT_LT(tail.size(), split.cases.size());
  for (const auto& tc : tail) EXPECT_FALSE(pop.is_head[static_cast<std::size_t>(tc.item)]);
}

TEST(Protocols, SparsifyKeepsFraction) {
  const auto data = five_star_data(6, 30, 200, 0.5);
  const std::vector<Index> users{2, 5};
  const auto snap = sparsify_users(data, users, 0.04, 1);
  for (Index u : users)
    EXPECT_EQ(snap.rating_count(u), std::max<Index>(1, std::llround(0.04 * data.rating_count(u))));
  EXPECT_EQ(snap.rating_count(0), data.rating_count(0));
  // kept ratings are a subset of the originals
  for (const auto& r : snap.ratings()) EXPECT_EQ(data.R().coeff(r.user, r.item), r.value);
  // 100 ratings -> 4
  std::vector<Rating> hundred;
  for (Index j = 0; j < 100; ++j) hundred.push_back({0, j, 1.0 + j % 5});
  const auto one = RatingsDataset::from_ratings(1, 100, hundred);
  EXPECT_EQ(sparsify_users(one, std::vector<Index>{0}, 0.04, 3).rating_count(0), 4);
}

TEST(Protocols, NewUsersWithFullKnowledge) {
  const auto data = five_star_data(7, 150, 300, 0.4);
  ProtocolConfig cfg;
  cfg.keep_fractions = {1.0};
  const auto users = select_new_users(data, cfg);
  EXPECT_EQ(users.size(), 100u);
  EXPECT_EQ(select_new_users(data, cfg), users);
  FullRatingsMethod full(data);
  Method* methods[] = {&full};
  const auto results = protocol_new_users(data, Decomposition::from_blocks(1, {{0}}), cfg, methods);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_DOUBLE_EQ(results[0].scores.kendall_tau, 1.0);
  EXPECT_DOUBLE_EQ(results[0].scores.spearman_rho, 1.0);
  EXPECT_DOUBLE_EQ(results[0].scores.ndpm, 0.0);
  EXPECT_DOUBLE_EQ(results[0].scores.doa_macro, 1.0);
  EXPECT_DOUBLE_EQ(results[0].scores.doa_micro, 1.0);
}

TEST(Protocols, TooFewHeavyUsers) {
  const auto data = five_star_data(8, 20, 50, 0.2);
  ProtocolConfig cfg;
  try {
    select_new_users(data, cfg);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("short by"), std::string::npos);
  }
}

TEST(Protocols, DoaSplit) {
  const auto full = five_star_data(9, 20, 40, 0.3);
  std::vector<bool> keep(full.size());
  for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = k % 5 != 0;
  const auto train = full.subset(keep);
  std::vector<bool> rest(full.size());
  for (std::size_t k = 0; k < rest.size(); ++k) rest[k] = !keep[k];
  const auto test = full.subset(rest);
  OracleMethod oracle(full);
  oracle.fit(train, Decomposition::from_blocks(1, {{0}}), {});
  const auto r = evaluate_doa_split(oracle, train, test);
  EXPECT_GT(r.users, 0u);
  EXPECT_DOUBLE_EQ(r.macro, 1.0);
  EXPECT_DOUBLE_EQ(r.micro, 1.0);
}

TEST(Protocols, MethodsOnExample1) {
  const auto data = fixtures::example1();
  const auto dec = fixtures::example1_genres();
  NcdrecParams p;
  p.engine.f = 2;
  for (const auto& name : known_methods()) {
    auto method = make_method(name, p, GraphParams{}, 1);
    method->fit(data, dec, {});
    const Vector s = method->scores(0);
    EXPECT_EQ(s.size(), 8) << name;
    EXPECT_TRUE(s.allFinite()) << name;
  }
  EXPECT_THROW(make_method("nope", p, GraphParams{}, 1), ParameterError);
}

TEST(Protocols, NcdrecMergesColdRows) {
  const auto data = fixtures::example1();
  NcdrecParams p;
  p.engine.f = 2;
  p.coldstart_max_ratings = 1;
  const auto model = build_ncdrec_model(data, fixtures::example1_genres(), p);
  const Matrix pi = model.merged();
  EXPECT_EQ(pi.rows(), 10);
  EXPECT_EQ(pi.cols(), 8);
  for (Index u = 0; u < 10; ++u) {
    const bool cold = data.rating_count(u) <= 1;
    EXPECT_EQ(std::find(model.cold_users.begin(), model.cold_users.end(), u) != model.cold_users.end(), cold);
    if (cold) {
      EXPECT_NEAR(pi.row(u).sum(), 1.0, 1e-10);
      EXPECT_GT(pi.row(u).minCoeff(), 0.0);
    }
    EXPECT_LE((pi.row(u).transpose() - model.scores(u)).norm(), 1e-12);
  }
}
