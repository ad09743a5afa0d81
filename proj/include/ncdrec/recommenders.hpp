#pragma once

#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "baselines.hpp"
#include "coldstart.hpp"
#include "dataset.hpp"
#include "decomposition.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "ncd_matrices.hpp"

namespace ncdrec {

/// A recommender that can be trained on a ratings snapshot and then score every item for a user.
class Method {
public:
  virtual ~Method() = default;
  virtual std::string name() const = 0;
  /// `new_users` are routed through the method's cold-start path, if it has one.
  virtual void fit(const RatingsDataset& train, const Decomposition& decomposition,
                   std::span<const Index> new_users) = 0;
  /// Scores over all items; larger is better. Must be safe to call concurrently after fit().
  virtual Vector scores(Index user) const = 0;
};

struct NcdrecParams {
  EngineConfig engine;
  ColdStartConfig coldstart;
  /// Users with at most this many ratings get their row from the cold-start chain.
  Index coldstart_max_ratings = 10;
};

/// Everything the full model produces: SVD factors for established users and
/// stationary distributions replacing the rows of new users.
struct NcdrecModel {
  NcdFactors factors;
  SvdFactors svd;
  SvdDiagnostics diagnostics;
  std::vector<Index> cold_users;
  Matrix cold_rows;  // |cold_users| x m
  int coldstart_iterations = 0;
  CoverageReport coverage;

  Vector scores(Index user) const {
    auto it = cold_index_.find(user);
    if (it != cold_index_.end()) return cold_rows.row(it->second).transpose();
    return main_scores(svd, user);
  }

  /// Dense n x m recommendation matrix with the new-user rows replaced.
  Matrix merged() const {
    Matrix pi = svd.U * svd.sigma.asDiagonal() * svd.V.transpose();
    for (std::size_t r = 0; r < cold_users.size(); ++r) pi.row(cold_users[r]) = cold_rows.row(static_cast<Index>(r));
    return pi;
  }

  void index_cold_users() {
    cold_index_.clear();
    for (std::size_t r = 0; r < cold_users.size(); ++r) cold_index_.emplace(cold_users[r], static_cast<Index>(r));
  }

private:
  std::unordered_map<Index, Index> cold_index_;
};

/// Builds the model: cold-start rows for new users, restarted Lanczos SVD of G = R + eps Z X^T for everyone.
inline NcdrecModel build_ncdrec_model(const RatingsDataset& train, const Decomposition& decomposition,
                                      const NcdrecParams& params, std::span<const Index> forced_new_users = {}) {
  params.coldstart.validate();
  params.engine.validate(train.n_users(), train.n_items());
  NcdrecModel model;
  model.factors = build_factors(train, decomposition);
  model.coverage = verify_coverage(decomposition);

  std::vector<char> cold(static_cast<std::size_t>(train.n_users()), 0);
  for (Index u = 0; u < train.n_users(); ++u) {
    const Index c = train.rating_count(u);
    if (c > 0 && c <= params.coldstart_max_ratings) cold[static_cast<std::size_t>(u)] = 1;
  }
  for (Index u : forced_new_users)
    if (train.rating_count(u) > 0) cold.at(static_cast<std::size_t>(u)) = 1;
  for (Index u = 0; u < train.n_users(); ++u)
    if (cold[static_cast<std::size_t>(u)]) model.cold_users.push_back(u);

  if (!model.cold_users.empty()) {
    const DirectProximity direct = build_direct_proximity(train);
    const SparseMatrix omega = preference_matrix(train, model.cold_users);
    ColdStartBatch batch = coldstart_stationary(params.coldstart, direct, model.factors, omega);
    model.cold_rows = std::move(batch.Pi);
    model.coldstart_iterations = batch.iterations;
  } else {
    model.cold_rows = Matrix(0, train.n_items());
  }
  model.index_cold_users();

  const NcdOperator op(train.R(), model.factors, params.engine.epsilon);
  model.svd = restarted_svd(params.engine, op, &model.diagnostics);
  return model;
}

class NcdrecMethod final : public Method {
public:
  explicit NcdrecMethod(NcdrecParams params) : params_(std::move(params)) {}
  std::string name() const override { return "ncdrec"; }
  void fit(const RatingsDataset& train, const Decomposition& decomposition,
           std::span<const Index> new_users) override {
    model_ = build_ncdrec_model(train, decomposition, params_, new_users);
  }
  Vector scores(Index user) const override { return model_.scores(user); }
  const NcdrecModel& model() const noexcept { return model_; }

private:
  NcdrecParams params_;
  NcdrecModel model_;
};

enum class GraphKind { l_pinv, mfa, katz, fp, ct };

struct GraphParams {
  EdgeWeighting weighting = EdgeWeighting::binary;
  /// 0 selects 0.9 / rho(A).
  double katz_attenuation = 0.0;
};

/// Graph baselines over the user-item-block graph. Only the user x item block of the
/// similarity matrix is kept; FP and CT use the L^+ closed forms so a single inversion
/// serves every user.
class GraphMethod final : public Method {
public:
  GraphMethod(GraphKind kind, GraphParams params) : kind_(kind), params_(params) {}

  std::string name() const override {
    switch (kind_) {
      case GraphKind::l_pinv: return "l-pinv";
      case GraphKind::mfa: return "mfa";
      case GraphKind::katz: return "katz";
      case GraphKind::fp: return "fp";
      case GraphKind::ct: return "ct";
    }
    return "graph";
  }

  void fit(const RatingsDataset& train, const Decomposition& decomposition, std::span<const Index>) override {
    const TripartiteGraph g = build_graph(train, &decomposition, params_.weighting);
    const Index n = g.n_users(), m = g.n_items();
    block_.resize(n, m);
    if (kind_ == GraphKind::mfa || kind_ == GraphKind::katz) {
      const double att = params_.katz_attenuation > 0.0 ? params_.katz_attenuation : default_katz_attenuation(g);
      const SimilarityMatrix sim = kind_ == GraphKind::mfa ? mfa_similarity(g) : katz_similarity(g, att);
      block_ = sim.values.block(0, n, n, m);
      return;
    }
    const SimilarityMatrix pinv = laplacian_pinv(g);
    const Matrix& L = pinv.values;
    if (kind_ == GraphKind::l_pinv) {
      block_ = L.block(0, n, n, m);
      return;
    }
    const double vol = g.volume();
    const Vector Ld = L * g.degree();
    for (Index u = 0; u < n; ++u)
      for (Index j = 0; j < m; ++j) {
        const Index un = g.user_node(u), jn = g.item_node(j);
        const double d = kind_ == GraphKind::fp ? first_passage_from_pinv(L, Ld, vol, jn, un)
                                                : commute_time_from_pinv(L, vol, un, jn);
        block_(u, j) = -d;  // distances: smaller is better
      }
  }

  Vector scores(Index user) const override { return block_.row(user).transpose(); }

private:
  GraphKind kind_;
  GraphParams params_;
  Matrix block_;
};

/// Uniformly random scores, reproducible per (seed, user).
class RandomMethod final : public Method {
public:
  explicit RandomMethod(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  void fit(const RatingsDataset& train, const Decomposition&, std::span<const Index>) override {
    n_items_ = train.n_items();
  }
  Vector scores(Index user) const override {
    std::seed_seq seq{seed_, static_cast<std::uint64_t>(user), std::uint64_t{0x5eed}};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector s(n_items_);
    for (Index j = 0; j < n_items_; ++j) s[j] = unif(rng);
    return s;
  }

private:
  std::uint64_t seed_;
  Index n_items_ = 0;
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names = {"ncdrec", "l-pinv", "mfa", "katz", "fp", "ct", "random"};
  return names;
}

inline std::unique_ptr<Method> make_method(const std::string& name, const NcdrecParams& ncd,
                                           const GraphParams& graph, std::uint64_t seed) {
  if (name == "ncdrec") return std::make_unique<NcdrecMethod>(ncd);
  if (name == "l-pinv") return std::make_unique<GraphMethod>(GraphKind::l_pinv, graph);
  if (name == "mfa") return std::make_unique<GraphMethod>(GraphKind::mfa, graph);
  if (name == "katz") return std::make_unique<GraphMethod>(GraphKind::katz, graph);
  if (name == "fp") return std::make_unique<GraphMethod>(GraphKind::fp, graph);
  if (name == "ct") return std::make_unique<GraphMethod>(GraphKind::ct, graph);
  if (name == "random") return std::make_unique<RandomMethod>(seed);
  throw ParameterError("unknown method '" + name + "'");
}

}  // namespace ncdrec
