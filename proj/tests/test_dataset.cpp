#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace ncdrec;

TEST(Dataset, Example1Shape) {
  const auto d = fixtures::example1();
  EXPECT_EQ(d.n_users(), 10);
  EXPECT_EQ(d.n_items(), 8);
  EXPECT_EQ(d.size(), 24u);
  EXPECT_EQ(d.R().coeff(2, 7), 5.0);
  EXPECT_EQ(d.rating_count(2), 4);
  EXPECT_EQ(d.item_counts()[0], 4);
}

TEST(Dataset, PreferenceVectorOfU3) {
  const auto pv = preference_vector(fixtures::example1(), 2);
  const double expected[] = {0, 0, 0, 2.0 / 11, 0, 3.0 / 11, 1.0 / 11, 5.0 / 11};
  for (int j = 0; j < 8; ++j) EXPECT_DOUBLE_EQ(pv.entries[j], expected[j]);
  EXPECT_NEAR(pv.entries.sum(), 1.0, 1e-15);
}

TEST(Dataset, RejectsDuplicatesAndNegatives) {
  EXPECT_THROW(RatingsDataset::from_ratings(2, 2, {{0, 0, 1}, {0, 0, 2}, {1, 1, 1}}), ModelAssumptionError);
  EXPECT_THROW(RatingsDataset::from_ratings(2, 2, {{0, 0, -1}, {1, 1, 1}}), ModelAssumptionError);
  EXPECT_THROW(RatingsDataset::from_ratings(2, 2, {{0, 0, 1}}), ModelAssumptionError);  // user 1 empty
  EXPECT_NO_THROW(RatingsDataset::from_ratings(2, 2, {{0, 0, 1}}, Coverage::allow_empty));
}

TEST(Dataset, LoadsMovieLens100kFormat) {
  fixtures::TempDir dir("ds");
  const auto path = dir.file("u.data", "196\t242\t3\t881250949\n186\t302\t3\t891717742\n196\t302\t5\t1\n");
  const auto d = load_ratings(path, RatingsFormat::movielens_100k);
  EXPECT_EQ(d.n_users(), 2);
  EXPECT_EQ(d.n_items(), 2);
  EXPECT_EQ(d.users().raw(0), 186);
  EXPECT_EQ(d.items().find(302), 1);
  EXPECT_EQ(d.R().coeff(1, 1), 5.0);
}

TEST(Dataset, LoadsMovieLens1mFormat) {
  fixtures::TempDir dir("ds");
  const auto path = dir.file("ratings.dat", "1::1193::5::978300760\n2::1193::4::978298413\n");
  const auto d = load_ratings(path, RatingsFormat::movielens_1m);
  EXPECT_EQ(d.n_users(), 2);
  EXPECT_EQ(d.n_items(), 1);
}

TEST(Dataset, ParseErrorsCarryLineNumbers) {
  fixtures::TempDir dir("ds");
  const auto bad = dir.file("bad", "1 2 3 4\n1 x 3 4\n");
  try {
    read_rating_records(bad, RatingsFormat::movielens_100k);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  const auto dup = dir.file("dup", "1 2 3 4\n5 6 1 0\n1 2 4 4\n");
  try {
    read_rating_records(dup, RatingsFormat::movielens_100k);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(read_rating_records(dir.file("empty", ""), RatingsFormat::movielens_100k), ParseError);
}

TEST(Dataset, SubsetKeepsUniverse) {
  const auto d = fixtures::example1();
  std::vector<bool> keep(d.size(), false);
  keep[0] = true;
  const auto s = d.subset(keep);
  EXPECT_EQ(s.n_users(), 10);
  EXPECT_EQ(s.n_items(), 8);
  EXPECT_EQ(s.size(), 1u);
}

TEST(Dataset, LoadIntoExistingUniverse) {
  fixtures::TempDir dir("ds");
  const auto full = load_ratings(dir.file("all", "1 10 3 0\n2 20 4 0\n3 30 5 0\n"), RatingsFormat::movielens_100k);
  const auto part = load_ratings_in(dir.file("part", "3 30 5 0\n"), RatingsFormat::movielens_100k, full);
  EXPECT_EQ(part.n_users(), 3);
  EXPECT_EQ(part.R().coeff(2, 2), 5.0);
  EXPECT_THROW(load_ratings_in(dir.file("bad", "4 30 5 0\n"), RatingsFormat::movielens_100k, full), ReferenceError);
}
