#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace ncdrec;

namespace {

// D_ij straight from the definition: average over the blocks of i of the uniform
// distribution on that block.
double d_entry(const Decomposition& d, Index i, Index j) {
  double total = 0.0;
  const auto& bs = d.blocks_of(i);
  for (Index k : bs) {
    const auto& block = d.blocks()[static_cast<std::size_t>(k)];
    if (std::find(block.begin(), block.end(), j) != block.end()) total += 1.0 / static_cast<double>(block.size());
  }
  return total / static_cast<double>(bs.size());
}

}  // namespace

TEST(NcdMatrices, Example1ZAndX) {
  const auto f = build_factors(fixtures::example1(), fixtures::example1_genres());
  const double Z[10][3] = {{0, 2.5, 1}, {0, 5, 0}, {2, 3.5, 3}, {3, 5, 0}, {4.5, 4.5, 5},
                           {0, 5, 5},   {4, 3, 3}, {5, 3.5, 5}, {1, 1.5, 0}, {5, 5, 5}};
  const double X[8][3] = {{1, 0, 0},     {0.5, 0, 0.5}, {0, 1, 0}, {0.5, 0.5, 0},
                          {0, 0.5, 0.5}, {0, 0, 1},     {0, 0, 1}, {0, 0.5, 0.5}};
  for (int u = 0; u < 10; ++u)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(f.Z.coeff(u, k), Z[u][k]) << u << "," << k;
  for (int j = 0; j < 8; ++j)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(f.X.coeff(j, k), X[j][k]) << j << "," << k;
}

TEST(NcdMatrices, Example1ProximityEntries) {
  const auto dec = fixtures::example1_genres();
  EXPECT_DOUBLE_EQ(d_entry(dec, 3, 1), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(d_entry(dec, 7, 4), 9.0 / 40.0);
  const auto f = build_factors(fixtures::example1(), dec);
  const Matrix D = Matrix(f.X) * Matrix(f.Y);
  EXPECT_NEAR(D(3, 1), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(D(7, 4), 9.0 / 40.0, 1e-15);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) EXPECT_NEAR(D(i, j), d_entry(dec, i, j), 1e-15);
}

TEST(NcdMatrices, RowsAreStochastic) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto data = fixtures::random_ratings(rng, 30, 40, 0.1);
    const auto dec = fixtures::random_decomposition(rng, 40, 6, trial % 2 == 0);
    const auto f = build_factors(data, dec);
    const auto dp = build_direct_proximity(data);
    for (const SparseMatrix* M : {&f.X, &f.Y, &dp.H}) {
      const Vector s = row_sums(*M);
      for (Index i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], 1.0, 1e-10);
    }
  }
}

TEST(NcdMatrices, DirectProximityMatchesDenseProduct) {
  const auto data = fixtures::example1();
  const auto dp = build_direct_proximity(data);
  Matrix C = Matrix(data.R()).transpose() * Matrix(data.R());
  C.diagonal().setZero();
  EXPECT_LE((Matrix(dp.C) - C).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(dp.uniform_rows.empty());
}

TEST(NcdMatrices, UniformFallbackForIsolatedItem) {
  // item 2 is only rated by a user who rated nothing else
  const auto data = RatingsDataset::from_ratings(2, 3, {{0, 0, 1}, {0, 1, 2}, {1, 2, 3}});
  const auto dp = build_direct_proximity(data);
  ASSERT_EQ(dp.uniform_rows, (std::vector<Index>{2}));
  for (Index j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(dp.H.coeff(2, j), 1.0 / 3.0);
}

TEST(NcdMatrices, CouplingGraphOfExample1IsTriangle) {
  const auto g = build_coupling_graph(fixtures::example1_genres());
  using E = std::pair<Index, Index>;
  EXPECT_EQ(g.edges(), (std::vector<E>{{0, 1}, {0, 2}, {1, 2}}));
  EXPECT_TRUE(is_connected(g));
}

TEST(NcdMatrices, DisconnectedComponents) {
  const auto d = Decomposition::from_blocks(5, {{0, 1}, {1, 2}, {3}, {4, 3}});
  const auto comps = connected_components(build_coupling_graph(d));
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0], (std::vector<Index>{0, 1}));
  EXPECT_EQ(comps[1], (std::vector<Index>{2, 3}));
}

TEST(NcdMatrices, DimensionMismatch) {
  EXPECT_THROW(build_factors(fixtures::example1(), Decomposition::from_blocks(3, {{0, 1, 2}})), DimensionError);
}
