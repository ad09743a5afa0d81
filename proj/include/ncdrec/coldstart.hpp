#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "ncd_matrices.hpp"
#include "sparse.hpp"

namespace ncdrec {

struct ColdStartConfig {
  double alpha = 0.01;  // weight of the H/D walk; 1 - alpha restarts to the preference vector
  double beta = 0.75;   // share of H inside the walk
  double tol = 1e-8;    // max row L1 change between successive iterates
  int maxit = 200;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("beta must lie in (0, 1)");
    if (!(tol > 0.0)) throw ParameterError("cold-start tol must be positive");
    if (maxit < 1) throw ParameterError("maxit must be at least 1");
  }
};

/// Preference vectors of a batch of users and their stationary distributions, one row per user.
struct ColdStartBatch {
  SparseMatrix Omega;
  Matrix Pi;
  std::vector<double> residuals;  // last L1 change per row
  int iterations = 0;
};

/// Stacks the preference vectors of `users` into a sparse |users| x m matrix.
inline SparseMatrix preference_matrix(const RatingsDataset& data, const std::vector<Index>& users) {
  std::vector<Triplet> entries;
  for (std::size_t r = 0; r < users.size(); ++r) {
    const Index u = users[r];
    double total = 0.0;
    for (SparseMatrix::InnerIterator it(data.R(), u); it; ++it) total += it.value();
    if (total <= 0.0)
      throw ModelAssumptionError("user " + std::to_string(data.users().raw(u)) + " has no positive rating");
    for (SparseMatrix::InnerIterator it(data.R(), u); it; ++it)
      entries.emplace_back(static_cast<Index>(r), it.col(), it.value() / total);
  }
  return make_sparse(static_cast<Index>(users.size()), data.n_items(), entries);
}

/// Observer called with (iteration, iterate) after every power step.
using IterateObserver = std::function<void(int, const Matrix&)>;

/// Batch power method for the rows of pi = pi S with
/// S = (1 - alpha) e omega^T + alpha (beta H + (1 - beta) X Y), never forming S.
/// Each row starts from its own preference vector.
inline ColdStartBatch coldstart_stationary(const ColdStartConfig& config, const SparseMatrix& H,
                                           const NcdFactors& factors, const SparseMatrix& Omega,
                                           const IterateObserver& observer = {}) {
  config.validate();
  const Index m = H.rows();
  if (H.cols() != m || factors.X.rows() != m || factors.Y.cols() != m || Omega.cols() != m)
    throw DimensionError("H, X, Y and Omega disagree on the number of items");
  const Vector sums = row_sums(Omega);
  for (Index r = 0; r < Omega.rows(); ++r)
    if (std::abs(sums[r] - 1.0) > 1e-12) throw ParameterError("Omega row " + std::to_string(r) + " does not sum to 1");
  for (Index r = 0; r < Omega.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(Omega, r); it; ++it)
      if (it.value() < 0.0) throw ParameterError("Omega has a negative entry");

  ColdStartBatch batch;
  batch.Omega = Omega;
  const Matrix restart = (1.0 - config.alpha) * Matrix(Omega);
  Matrix pi = Matrix(Omega);
  const double walk_h = config.alpha * config.beta;
  const double walk_d = config.alpha * (1.0 - config.beta);
  batch.residuals.assign(static_cast<std::size_t>(Omega.rows()), 1.0);

  double r = Omega.rows() > 0 ? 1.0 : 0.0;
  int k = 0;
  while (r > config.tol) {
    if (k >= config.maxit)
      throw ConvergenceError("cold-start power method exceeded " + std::to_string(config.maxit) + " iterations",
                             batch.residuals);
    ++k;
    Matrix next = walk_h * (pi * H);
    Matrix phi = pi * factors.X;
    next.noalias() += walk_d * (phi * factors.Y);
    next += restart;
    r = 0.0;
    for (Index row = 0; row < next.rows(); ++row) {
      const double change = (next.row(row) - pi.row(row)).lpNorm<1>();
      batch.residuals[static_cast<std::size_t>(row)] = change;
      r = std::max(r, change);
    }
    pi = std::move(next);
    if (observer) observer(k, pi);
  }
  batch.Pi = std::move(pi);
  batch.iterations = k;
  return batch;
}

inline ColdStartBatch coldstart_stationary(const ColdStartConfig& config, const DirectProximity& direct,
                                           const NcdFactors& factors, const SparseMatrix& Omega,
                                           const IterateObserver& observer = {}) {
  return coldstart_stationary(config, direct.H, factors, Omega, observer);
}

struct StationaryResult {
  Vector pi;
  int iterations = 0;
  double residual = 0.0;
};

/// Plain power iteration x <- x T for a dense row-stochastic T, L1 stopping rule.
inline StationaryResult stationary_by_power_iteration(const Matrix& transition, Vector start, double tol,
                                                      int maxit) {
  if (transition.rows() != transition.cols() || start.size() != transition.rows())
    throw DimensionError("power iteration needs a square transition matrix and matching start vector");
  StationaryResult out;
  out.pi = std::move(start);
  out.residual = 1.0;
  while (out.residual > tol) {
    if (out.iterations >= maxit)
      throw ConvergenceError("power iteration exceeded " + std::to_string(maxit) + " iterations", {out.residual});
    Vector next = transition.transpose() * out.pi;
    out.residual = (next - out.pi).lpNorm<1>();
    out.pi = std::move(next);
    ++out.iterations;
  }
  return out;
}

/// Whether the coupling graph guarantees full item coverage for cold-start users.
struct CoverageReport {
  bool connected = false;
  std::vector<std::vector<Index>> components;
  std::vector<std::vector<std::string>> component_labels;

  std::string describe() const {
    std::ostringstream os;
    if (connected) {
      os << "block coupling graph connected (" << (components.empty() ? 0 : components.front().size())
         << " blocks): every cold-start ranking covers the full item space\n";
      return os.str();
    }
    os << "block coupling graph has " << components.size()
       << " components: full item coverage is NOT guaranteed\n";
    for (std::size_t c = 0; c < components.size(); ++c) {
      os << "  component " << c + 1 << ":";
      for (const auto& label : component_labels[c]) os << ' ' << label;
      os << '\n';
    }
    return os.str();
  }
};

inline CoverageReport verify_coverage(const Decomposition& decomposition) {
  CoverageReport report;
  report.components = connected_components(build_coupling_graph(decomposition));
  report.connected = report.components.size() <= 1;
  for (const auto& comp : report.components) {
    std::vector<std::string> labels;
    for (Index k : comp) labels.push_back(decomposition.labels()[static_cast<std::size_t>(k)]);
    report.component_labels.push_back(std::move(labels));
  }
  return report;
}

}  // namespace ncdrec
