#include <algorithm>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ddslp/nn.hpp"

using namespace ddslp;

namespace {

RowMatrix random_points(int n, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RowMatrix p(n, cols);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < cols; ++c) p(i, c) = u(rng);
  return p;
}

// plain scan, independent of the index implementation
int scan_nearest(const RowMatrix& p, const Eigen::VectorXd& q) {
  int best = -1;
  double bd = 0.0;
  for (int i = 0; i < p.rows(); ++i) {
    const double d = (p.row(i).transpose() - q).squaredNorm();
    if (best < 0 || d < bd) {
      best = i;
      bd = d;
    }
  }
  return best;
}

}  // namespace

TEST(NnBrute, MatchesScan) {
  const RowMatrix p = random_points(500, 4, 1);
  const NnIndex index(p, {});
  const RowMatrix q = random_points(100, 4, 2);
  for (int i = 0; i < q.rows(); ++i) EXPECT_EQ(index.query(q.row(i).transpose()), scan_nearest(p, q.row(i).transpose()));
}

TEST(NnBrute, TiesGoToSmallestIndex) {
  RowMatrix p(4, 2);
  p << 1, 0, -1, 0, 0, 1, 0, -1;
  const NnIndex index(p, {});
  EXPECT_EQ(index.query(Eigen::Vector2d(0, 0)), 0);
  RowMatrix dup(3, 2);
  dup << 5, 5, 2, 2, 2, 2;
  EXPECT_EQ(NnIndex(dup, {}).query(Eigen::Vector2d(2, 2)), 1);
}

TEST(NnBrute, CoordScaleChangesMetric) {
  RowMatrix p(2, 2);
  p << 1.0, 0.0, 0.0, 1.5;
  NnOptions opt;
  EXPECT_EQ(NnIndex(p, opt).query(Eigen::Vector2d(0, 0)), 0);
  opt.coord_scale = Eigen::Vector2d(2.0, 1.0);
  EXPECT_EQ(NnIndex(p, opt).query(Eigen::Vector2d(0, 0)), 1);
}

TEST(NnBrute, KnnSortedByDistance) {
  const RowMatrix p = random_points(200, 3, 5);
  const NnIndex index(p, {});
  const Eigen::Vector3d q(0.1, -0.2, 0.3);
  const auto k = index.knn(q, 7);
  ASSERT_EQ(k.size(), 7u);
  for (std::size_t i = 1; i < k.size(); ++i)
    EXPECT_LE((p.row(k[i - 1]).transpose() - q).squaredNorm(), (p.row(k[i]).transpose() - q).squaredNorm());
  EXPECT_EQ(k.front(), scan_nearest(p, q));
  EXPECT_EQ(index.knn(q, 1000).size(), 200u);
}

TEST(NnBrute, Errors) {
  EXPECT_THROW(NnIndex(RowMatrix(0, 2), {}), EmptyInputError);
  const NnIndex index(random_points(10, 2, 1), {});
  EXPECT_THROW((void)index.query(Eigen::Vector3d::Zero()), DimensionError);
  EXPECT_THROW((void)index.knn(Eigen::Vector2d::Zero(), 0), InvalidArgument);
  NnOptions bad;
  bad.coord_scale = Eigen::Vector3d::Ones();
  EXPECT_THROW(NnIndex(random_points(10, 2, 1), bad), DimensionError);
  NnOptions forest;
  forest.mode = NnMode::KdForest;
  forest.num_trees = 0;
  EXPECT_THROW(NnIndex(random_points(10, 2, 1), forest), InvalidArgument);
}

TEST(NnForest, StoredPointsFindThemselves) {
  const RowMatrix p = random_points(2000, 12, 7);
  NnOptions opt;
  opt.mode = NnMode::KdForest;
  const NnIndex index(p, opt);
  for (int i = 0; i < p.rows(); i += 37) EXPECT_EQ(index.query(p.row(i).transpose()), i);
}

TEST(NnForest, RecallAgainstBruteForce) {
  const RowMatrix p = random_points(20000, 12, 11);
  NnOptions opt;
  opt.mode = NnMode::KdForest;
  opt.seed = 3;
  const NnIndex forest(p, opt);
  const NnIndex brute(p, {});
  const RowMatrix q = random_points(300, 12, 12);
  int hits = 0;
  for (int i = 0; i < q.rows(); ++i) hits += forest.query(q.row(i).transpose()) == brute.query(q.row(i).transpose());
  EXPECT_GE(hits, 0.9 * q.rows());
}

TEST(NnForest, SmallSetsAreExact) {
  // fewer points than one leaf bucket per tree: every query scans them all
  const RowMatrix p = random_points(6, 2, 9);
  NnOptions opt;
  opt.mode = NnMode::KdForest;
  const NnIndex index(p, opt);
  const RowMatrix q = random_points(50, 2, 10);
  for (int i = 0; i < q.rows(); ++i) EXPECT_EQ(index.query(q.row(i).transpose()), scan_nearest(p, q.row(i).transpose()));
}

TEST(NnForest, DeterministicForSeed) {
  const RowMatrix p = random_points(5000, 6, 4);
  NnOptions opt;
  opt.mode = NnMode::KdForest;
  opt.max_checks = 8;
  opt.seed = 42;
  const NnIndex a(p, opt), b(p, opt);
  const RowMatrix q = random_points(100, 6, 8);
  for (int i = 0; i < q.rows(); ++i) EXPECT_EQ(a.query(q.row(i).transpose()), b.query(q.row(i).transpose()));
}

TEST(NnForest, KnnDistinctRows) {
  const RowMatrix p = random_points(3000, 6, 21);
  NnOptions opt;
  opt.mode = NnMode::KdForest;
  const NnIndex index(p, opt);
  auto k = index.knn(Eigen::VectorXd::Zero(6), 10);
  ASSERT_EQ(k.size(), 10u);
  std::sort(k.begin(), k.end());
  EXPECT_EQ(std::adjacent_find(k.begin(), k.end()), k.end());
}
