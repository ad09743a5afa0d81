#pragma once

#include <algorithm>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <ncdrec/ncdrec.hpp>

namespace fixtures {

using ncdrec::Index;
using ncdrec::Matrix;
using ncdrec::Vector;

// The 10-user, 8-movie, 3-genre toy system. Users and items are 0-based here (u1 -> 0).
inline ncdrec::RatingsDataset example1() {
  const int raw[][3] = {{4, 1, 1},  {7, 1, 4},  {8, 1, 5},  {10, 1, 5}, {5, 2, 5},  {1, 3, 4},
                        {2, 3, 5},  {8, 3, 2},  {9, 3, 2},  {10, 3, 5}, {3, 4, 2},  {4, 4, 5},
                        {5, 4, 4},  {9, 4, 1},  {1, 5, 1},  {5, 5, 5},  {6, 5, 5},  {7, 5, 3},
                        {3, 6, 3},  {10, 6, 5}, {3, 7, 1},  {3, 8, 5},  {6, 8, 5},  {8, 8, 5}};
  std::vector<ncdrec::Rating> ratings;
  for (const auto& r : raw) ratings.push_back({r[0] - 1, r[1] - 1, static_cast<double>(r[2])});
  return ncdrec::RatingsDataset::from_ratings(10, 8, ratings);
}

// D1 = {v1, v2, v4}, D2 = {v3, v4, v5, v8}, D3 = {v2, v5, v6, v7, v8}
inline ncdrec::Decomposition example1_genres() {
  return ncdrec::Decomposition::from_blocks(8, {{0, 1, 3}, {2, 3, 4, 7}, {1, 4, 5, 6, 7}}, {"D1", "D2", "D3"});
}

/// Random ratings: every user gets at least one rating, values in 1..5.
inline ncdrec::RatingsDataset random_ratings(std::mt19937_64& rng, Index n, Index m, double density) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> stars(1, 5);
  std::uniform_int_distribution<Index> any_item(0, m - 1);
  std::vector<ncdrec::Rating> ratings;
  for (Index u = 0; u < n; ++u) {
    const Index forced = any_item(rng);
    for (Index j = 0; j < m; ++j)
      if (j == forced || unit(rng) < density) ratings.push_back({u, j, static_cast<double>(stars(rng))});
  }
  return ncdrec::RatingsDataset::from_ratings(n, m, ratings, ncdrec::Coverage::allow_empty);
}

/// Random cover of m items by K blocks. When `connected`, consecutive blocks share an
/// item so the coupling graph contains a path through all blocks.
inline ncdrec::Decomposition random_decomposition(std::mt19937_64& rng, Index m, Index K, bool connected,
                                                  double extra = 0.15) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> any_block(0, K - 1);
  std::vector<std::vector<Index>> blocks(static_cast<std::size_t>(K));
  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  // every block owns at least one item, every item lands in some block
  for (Index j = 0; j < m; ++j) {
    const Index k = j < K ? j : any_block(rng);
    blocks[static_cast<std::size_t>(k)].push_back(perm[static_cast<std::size_t>(j)]);
  }
  if (connected) {
    for (Index k = 0; k + 1 < K; ++k) blocks[static_cast<std::size_t>(k)].push_back(blocks[static_cast<std::size_t>(k + 1)].front());
    for (Index j = 0; j < m; ++j)
      if (unit(rng) < extra) blocks[static_cast<std::size_t>(any_block(rng))].push_back(j);
  }
  return ncdrec::Decomposition::from_blocks(m, std::move(blocks));
}

inline Vector random_unit_vector(std::mt19937_64& rng, Index size) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = g(rng);
  return v / v.norm();
}

/// Dense G = R + eps Z X^T.
inline Matrix dense_G(const ncdrec::RatingsDataset& data, const ncdrec::NcdFactors& f, double eps) {
  return Matrix(data.R()) + eps * Matrix(f.Z) * Matrix(f.X).transpose();
}

/// Dense S = (1 - a) e w^T + a (b H + (1 - b) X Y).
inline Matrix dense_S(const ncdrec::SparseMatrix& H, const ncdrec::NcdFactors& f, const Vector& omega, double alpha,
                      double beta) {
  const Index m = H.rows();
  Matrix S = alpha * (beta * Matrix(H) + (1.0 - beta) * Matrix(f.X) * Matrix(f.Y));
  S += (1.0 - alpha) * Vector::Ones(m) * omega.transpose();
  return S;
}

/// Left eigenvector of a row-stochastic T for the eigenvalue closest to 1, scaled to sum 1.
inline Vector dominant_left_eigenvector(const Matrix& T) {
  Eigen::EigenSolver<Matrix> es(T.transpose());
  Index best = 0;
  double gap = 1e300;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double d = std::abs(es.eigenvalues()[i] - std::complex<double>(1.0, 0.0));
    if (d < gap) gap = d, best = i;
  }
  Vector v = es.eigenvectors().col(best).real();
  return v / v.sum();
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() / ("ncdrec-" + tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream(p) << content;
    return p.string();
  }
};

}  // namespace fixtures
