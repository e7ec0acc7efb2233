#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ddslp/truss.hpp"

using namespace ddslp;

namespace {

// Dense direct-stiffness assembly straight from the geometry, E = 1.
Eigen::VectorXd dense_linear_solve(const TrussModel& t) {
  const int ng = t.num_global_dofs();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ng, ng);
  for (const Bar& b : t.bars) {
    const Eigen::VectorXd d = (t.nodes[static_cast<std::size_t>(b.b)] - t.nodes[static_cast<std::size_t>(b.a)]).head(t.dim);
    const double l = d.norm();
    const Eigen::MatrixXd kk = b.area / l * (d / l) * (d / l).transpose();
    for (int i = 0; i < t.dim; ++i)
      for (int j = 0; j < t.dim; ++j) {
        k(b.a * t.dim + i, b.a * t.dim + j) += kk(i, j);
        k(b.b * t.dim + i, b.b * t.dim + j) += kk(i, j);
        k(b.a * t.dim + i, b.b * t.dim + j) -= kk(i, j);
        k(b.b * t.dim + i, b.a * t.dim + j) -= kk(i, j);
      }
  }
  const auto free = t.free_dofs();
  const int n = static_cast<int>(free.size());
  Eigen::MatrixXd kf(n, n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) kf(i, j) = k(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
    const auto it = t.loads.find(free[static_cast<std::size_t>(i)]);
    if (it != t.loads.end()) f[i] = it->second;
  }
  return kf.fullPivLu().solve(f);
}

TrussModel symmetric_two_bar(double load) {
  TrussModel t;
  t.dim = 2;
  t.nodes = {{0, 0, 0}, {-1, 1, 0}, {1, 1, 0}};
  t.bars = {{1, 0, 1.0}, {0, 2, 1.0}};
  t.fixed_dofs = {2, 3, 4, 5};
  t.loads = {{1, -load}};
  return t;
}

}  // namespace

TEST(TrussOperators, SingleHorizontalBar) {
  TrussModel t;
  t.dim = 2;
  t.nodes = {{0, 0, 0}, {2, 0, 0}};
  t.bars = {{0, 1, 1.0}};
  t.fixed_dofs = {0, 1, 3};
  t.loads = {{2, 1.0}};
  const auto ops = build_operators(t);
  ASSERT_EQ(ops.num_dofs, 1);
  Eigen::VectorXd u(1);
  u << 0.7;
  EXPECT_NEAR(ops.strain(u)[0], 0.35, 1e-15);
  EXPECT_NEAR(ops.weight[0], 2.0, 1e-15);
}

TEST(TrussOperators, ZeroLengthBarThrows) {
  TrussModel t;
  t.dim = 2;
  t.nodes = {{1, 1, 0}, {1, 1, 0}};
  t.bars = {{0, 1, 1.0}};
  t.fixed_dofs = {0, 1};
  EXPECT_THROW((void)build_operators(t), GeometryError);
  t.bars = {{0, 5, 1.0}};
  EXPECT_THROW((void)build_operators(t), GeometryError);
}

TEST(TrussOperators, WorkConjugacy) {
  const auto t = space_truss();
  const auto ops = build_operators(t);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd u(ops.num_dofs), s(ops.num_members);
    for (auto& v : u) v = g(rng);
    for (auto& v : s) v = g(rng);
    const Eigen::VectorXd eps = ops.strain(u);
    double lhs = 0.0;
    for (int e = 0; e < ops.num_members; ++e) lhs += t.bars[static_cast<std::size_t>(e)].area * t.length(e) * s[e] * eps[e];
    const double rhs = ops.internal_force(s).dot(u);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST(TrussOperators, ThreeBarMatchesDenseElasticSolve) {
  const auto t = three_bar_truss();
  const auto ops = build_operators(t);
  EXPECT_NEAR(t.length(0), 1.0, 1e-15);
  EXPECT_NEAR(t.length(1), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(t.length(2), 1.0, 1e-15);
  const auto ref = reference_solve(ops, ScalarLaw::linear(1.0));
  const Eigen::VectorXd oracle = dense_linear_solve(t);
  EXPECT_NEAR((ref.u - oracle).norm(), 0.0, 1e-12);
  EXPECT_NEAR(ref.u[0], 0.5, 1e-12);
  EXPECT_NEAR(ref.u[1], -0.5, 1e-12);
  EXPECT_NEAR(ops.load.norm(), std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(TrussOperators, SpaceTrussIsStableAndMatchesDense) {
  const auto t = space_truss();
  EXPECT_GE(t.bars.size(), 50u);
  const auto ops = build_operators(t);
  const auto ref = reference_solve(ops, ScalarLaw::linear(1.0));
  EXPECT_LE((ref.u - dense_linear_solve(t)).norm(), 1e-10 * ref.u.norm());
}

TEST(ReferenceSolve, LinearLawIsOneStep) {
  const auto ops = build_operators(space_truss());
  const auto ref = reference_solve(ops, ScalarLaw::linear(2.5));
  const auto lin = linear_solve(ops, Eigen::MatrixXd::Constant(1, 1, 2.5));
  EXPECT_LE((ref.u - lin.u).norm(), 1e-12 * lin.u.norm());
  EXPECT_LE(ref.iterations, 1);
}

TEST(ReferenceSolve, ZeroLoad) {
  auto t = three_bar_truss();
  t.loads.clear();
  const auto ref = reference_solve(build_operators(t), ScalarLaw::cube_root());
  EXPECT_EQ(ref.u.norm(), 0.0);
  EXPECT_EQ(ref.strain.norm(), 0.0);
  EXPECT_EQ(ref.stress.norm(), 0.0);
}

TEST(ReferenceSolve, CubeRootSymmetricTwoBar) {
  const double load = 0.6;
  const auto ops = build_operators(symmetric_two_bar(load));
  const auto ref = reference_solve(ops, ScalarLaw::cube_root());
  EXPECT_NEAR(ref.strain[0], ref.strain[1], 1e-10);
  EXPECT_NEAR(ref.u[0], 0.0, 1e-10);
  // Statics: each bar carries load / sqrt(2), so eps = sigma^3.
  const double sigma = load / std::sqrt(2.0);
  EXPECT_NEAR(ref.stress[0], sigma, 1e-9);
  EXPECT_NEAR(ref.strain[0], sigma * sigma * sigma, 1e-9);
  EXPECT_LE(ref.residual, 1e-10 * (1.0 + load));
}

TEST(ReferenceSolve, CubeRootSpaceTrussResidual) {
  const auto ops = build_operators(space_truss());
  const auto ref = reference_solve(ops, ScalarLaw::cube_root());
  const Eigen::VectorXd r = ops.internal_force(ref.stress) - ops.load;
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-10 * (1.0 + ops.load.cwiseAbs().maxCoeff()));
  EXPECT_LT(ref.iterations, 200);
}

TEST(ReferenceSolve, NonConvergenceCarriesHistory) {
  const auto ops = build_operators(space_truss());
  NewtonOptions opt;
  opt.max_iterations = 1;
  try {
    (void)reference_solve(ops, ScalarLaw::cube_root(), opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GE(e.history().size(), 2u);
  }
}

TEST(ReferenceSolve, MechanismIsSingular) {
  auto t = three_bar_truss();
  t.bars.resize(1);
  EXPECT_THROW((void)reference_solve(build_operators(t), ScalarLaw::linear(1.0)), SingularSystemError);
}

TEST(TrussJson, RoundTrip) {
  const auto t = space_truss(3, 0.1);
  const auto back = truss_from_json(nlohmann::json::parse(to_json(t).dump()));
  EXPECT_EQ(back.dim, t.dim);
  EXPECT_EQ(back.bars.size(), t.bars.size());
  EXPECT_EQ(back.fixed_dofs, t.fixed_dofs);
  EXPECT_EQ(back.loads, t.loads);
  const auto a = build_operators(t), b = build_operators(back);
  EXPECT_EQ(Eigen::MatrixXd(a.B), Eigen::MatrixXd(b.B));
  EXPECT_THROW((void)truss_from_json(nlohmann::json::parse(R"({"nodes": [[0,0]]})")), IoError);
}
