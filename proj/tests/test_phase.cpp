#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ddslp/phase.hpp"

using namespace ddslp;

namespace {

PhasePoint p6(std::initializer_list<double> e, std::initializer_list<double> s) {
  Eigen::VectorXd ev(6), sv(6);
  int i = 0;
  for (double v : e) ev[i++] = v;
  i = 0;
  for (double v : s) sv[i++] = v;
  return {ev, sv};
}

}  // namespace

TEST(SortKey1d, Examples) {
  EXPECT_DOUBLE_EQ(sort_key_1d(PhasePoint::scalar(0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(sort_key_1d(PhasePoint::scalar(-3, 4)), -5.0);
  EXPECT_NEAR(sort_key_1d(PhasePoint::scalar(1, 1)), 1.41421356237, 1e-10);
  // sign(0) = +1
  EXPECT_DOUBLE_EQ(sort_key_1d(PhasePoint::scalar(0, -2)), 2.0);
}

TEST(SortKey1d, RejectsWrongDimension) {
  EXPECT_THROW((void)sort_key_1d(p6({0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0})), DimensionError);
}

TEST(SortKey1d, OddUnderSignFlip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 200; ++t) {
    const double e = u(rng), s = u(rng);
    if (e == 0.0) continue;
    EXPECT_DOUBLE_EQ(sort_key_1d(-e, -s), -sort_key_1d(e, s));
  }
}

TEST(SortKey6d, Examples) {
  EXPECT_DOUBLE_EQ(sort_key_6d(p6({0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0})), 0.0);
  EXPECT_NEAR(sort_key_6d(p6({0.1, 0.1, 0.1, 0.1, 0.1, 0.1}, {0, 0, 0, 0, 0, 0})), 0.6, 1e-15);
  EXPECT_NEAR(sort_key_6d(p6({0.1, -0.1, 0.05, 0, 0, 0}, {0, 0, 0, 0, 0, 0})), 0.05, 1e-15);
  EXPECT_THROW((void)sort_key_6d(PhasePoint::scalar(1, 1)), DimensionError);
}

TEST(DataSet, RejectsMismatchedPoints) {
  DataSet ds(1);
  EXPECT_THROW(ds.add(p6({0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0})), DimensionError);
  EXPECT_THROW(ds.add(std::nan(""), 1.0), InvalidArgument);
  EXPECT_THROW(DataSet(3), DimensionError);
}

TEST(SortCanonical, OrdersByKey) {
  DataSet ds(1);
  ds.add(3, 0);
  ds.add(1, 0);
  ds.add(2, 0);
  const auto s = sort_canonical(ds);
  EXPECT_EQ(s.strain(0)[0], 1);
  EXPECT_EQ(s.strain(1)[0], 2);
  EXPECT_EQ(s.strain(2)[0], 3);
  EXPECT_EQ(s.original_index(0), 1);
  EXPECT_TRUE(std::is_sorted(s.sort_keys().begin(), s.sort_keys().end()));
}

TEST(SortCanonical, IdempotentAndStable) {
  DataSet ds(1);
  ds.add(0, 1);   // key 1
  ds.add(1, 0);   // key 1, tie
  ds.add(-1, 0);  // key -1
  const auto s = sort_canonical(ds);
  EXPECT_EQ(s.original_index(0), 2);
  EXPECT_EQ(s.original_index(1), 0);
  EXPECT_EQ(s.original_index(2), 1);
  const auto s2 = sort_canonical(s);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(s2.point(i).coords(), s.point(i).coords());
}

TEST(SortCanonical, EmptyThrows) { EXPECT_THROW((void)sort_canonical(DataSet(1)), EmptyInputError); }

TEST(SortCanonical, IsAPermutation6d) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  DataSet ds(6);
  for (int i = 0; i < 300; ++i) {
    Eigen::VectorXd e(6), s(6);
    for (int c = 0; c < 6; ++c) {
      e[c] = g(rng);
      s[c] = g(rng);
    }
    ds.add(PhasePoint(e, s));
  }
  const auto sorted = sort_canonical(ds);
  ASSERT_EQ(sorted.size(), ds.size());
  std::vector<char> seen(300, 0);
  for (int i = 0; i < sorted.size(); ++i) {
    const int o = sorted.original_index(i);
    EXPECT_FALSE(seen[static_cast<std::size_t>(o)]);
    seen[static_cast<std::size_t>(o)] = 1;
    EXPECT_EQ(sorted.point(i).coords(), ds.point(o).coords());
    if (i > 0) EXPECT_LE(sorted.sort_keys()[static_cast<std::size_t>(i - 1)], sorted.sort_keys()[static_cast<std::size_t>(i)]);
  }
}

TEST(EstimateScaling, ConstantRatio) {
  std::vector<PhasePoint> pts;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int j = 0; j < 9; ++j) {
    Eigen::VectorXd e(6);
    for (int c = 0; c < 6; ++c) e[c] = u(rng);
    pts.emplace_back(e, 2.0 * e);
  }
  const auto s = estimate_scaling(pts);
  for (int c = 0; c < 6; ++c) EXPECT_NEAR(s.diag[c], 2.0, 1e-12);
}

TEST(EstimateScaling, SinglePointAndExplicitMedian) {
  std::vector<PhasePoint> one{p6({1, 1, 1, 1, 1, 1}, {3, 3, 3, 3, 3, 3})};
  const auto s1 = estimate_scaling(one);
  for (int c = 0; c < 6; ++c) EXPECT_DOUBLE_EQ(s1.diag[c], 3.0);

  std::vector<PhasePoint> three{p6({1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1}), p6({1, 1, 1, 1, 1, 1}, {2, 1, 1, 1, 1, 1}),
                                p6({1, 1, 1, 1, 1, 1}, {100, 1, 1, 1, 1, 1})};
  EXPECT_DOUBLE_EQ(estimate_scaling(three).diag[0], 2.0);
}

TEST(EstimateScaling, DegenerateComponentFallsBackToOne) {
  std::vector<PhasePoint> pts{p6({0, 1, 1, 1, 1, 1}, {5, 4, 4, 4, 4, 4}), p6({1e-13, 1, 1, 1, 1, 1}, {5, 4, 4, 4, 4, 4})};
  const auto s = estimate_scaling(pts);
  EXPECT_DOUBLE_EQ(s.diag[0], 1.0);
  EXPECT_DOUBLE_EQ(s.diag[1], 4.0);
  EXPECT_TRUE(s.valid());
  EXPECT_THROW((void)estimate_scaling(std::span<const PhasePoint>{}), EmptyInputError);
}

TEST(EstimateScaling, SmallStrainsLeftOut) {
  // 0.001 is under a tenth of the largest strain 0.05, so its ratio 300 is skipped
  std::vector<PhasePoint> pts{p6({0.05, 1, 1, 1, 1, 1}, {0.07, 1, 1, 1, 1, 1}),
                              p6({-0.05, 1, 1, 1, 1, 1}, {-0.065, 1, 1, 1, 1, 1}),
                              p6({0.001, 1, 1, 1, 1, 1}, {0.3, 1, 1, 1, 1, 1}),
                              p6({0.04, 1, 1, 1, 1, 1}, {0.06, 1, 1, 1, 1, 1})};
  EXPECT_NEAR(estimate_scaling(pts).diag[0], 1.4, 1e-12);
  pts[2] = p6({0.01, 1, 1, 1, 1, 1}, {1.5, 1, 1, 1, 1, 1});
  EXPECT_NEAR(estimate_scaling(pts).diag[0], 1.45, 1e-12);
}

TEST(EstimateScaling, PermutationInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<PhasePoint> pts;
  for (int j = 0; j < 10; ++j) {
    Eigen::VectorXd e(6), s(6);
    for (int c = 0; c < 6; ++c) {
      e[c] = u(rng);
      s[c] = u(rng);
    }
    pts.emplace_back(e, s);
  }
  const auto a = estimate_scaling(pts);
  std::shuffle(pts.begin(), pts.end(), rng);
  const auto b = estimate_scaling(pts);
  EXPECT_EQ(a.diag, b.diag);
}

TEST(IsotropicStiffness, UniaxialStressGivesPoissonContraction) {
  const auto c = isotropic_stiffness(1.0, 0.3);
  Eigen::Matrix<double, 6, 1> sigma = Eigen::Matrix<double, 6, 1>::Zero();
  sigma[0] = 1.0;
  const Eigen::Matrix<double, 6, 1> eps = c.ldlt().solve(sigma);
  EXPECT_NEAR(eps[0], 1.0, 1e-12);
  EXPECT_NEAR(eps[1], -0.3, 1e-12);
  EXPECT_NEAR(eps[2], -0.3, 1e-12);
  // engineering shear: tau = G * gamma, G = E / (2 (1 + nu))
  EXPECT_NEAR(c(3, 3), 1.0 / 2.6, 1e-12);
}
