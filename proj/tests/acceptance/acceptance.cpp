// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddslp/continuum.hpp"
#include "ddslp/datagen.hpp"
#include "ddslp/ddcm.hpp"
#include "ddslp/lp.hpp"
#include "ddslp/metrics.hpp"
#include "ddslp/nn.hpp"
#include "ddslp/slp.hpp"
#include "ddslp/truss.hpp"
#include "oracles/lp_vertex_enumeration.hpp"

using namespace ddslp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DataSet sorted(const GenSpec& g) { return sort_canonical(generate(g)); }

// ---------------------------------------------------------------------------
// 1. Three-bar bounds on the regularized dataset

// U at the loaded node for per-bar moduli, from the 2x2 stiffness built
// directly from the geometry.
Eigen::Vector2d three_bar_displacement(const std::array<double, 3>& modulus) {
  const Eigen::Vector2d ends[3] = {{-1, 0}, {-1, -1}, {0, -1}};
  Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
  for (int e = 0; e < 3; ++e) {
    const double len = ends[e].norm();
    const Eigen::Vector2d n = ends[e] / len;
    k += modulus[static_cast<std::size_t>(e)] / len * n * n.transpose();
  }
  return k.ldlt().solve(Eigen::Vector2d(0.5, -0.5));
}

Outcome criterion1() {
  GenSpec g;
  g.kind = GenKind::Regularized1d;
  g.levels = 2;
  g.nd = 101;
  SlpConfig cfg;
  cfg.tol = 0.001;
  const auto b = bounds(build_operators(three_bar_truss()), sorted(g), cfg, 0);

  double omin = 1e300, omax = -1e300;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j)
      for (int k = 0; k <= 20; ++k) {
        const double u = three_bar_displacement({0.8 + 0.02 * i, 0.8 + 0.02 * j, 0.8 + 0.02 * k})[0];
        omin = std::min(omin, u);
        omax = std::max(omax, u);
      }
  const bool ok = std::abs(b.lower - 0.4167) <= 5e-3 && std::abs(b.upper - 0.6250) <= 5e-3 &&
                  std::abs(b.lower - omin) <= 1e-2 && std::abs(b.upper - omax) <= 1e-2;
  return {ok, fmt("lower %.4f upper %.4f, oracle [%.4f, %.4f]", b.lower, b.upper, omin, omax)};
}

// ---------------------------------------------------------------------------
// 2. Bound histories on a noisy three-bar dataset

// U_1 over feasible iterates whose predecessor was also feasible.
std::vector<double> case1_values(const SolveReport& r) {
  std::vector<double> v;
  for (std::size_t k = 1; k < r.history.size(); ++k)
    if (r.history[k].feasible && r.history[k - 1].feasible) v.push_back(r.history[k].u[0]);
  return v;
}

Outcome criterion2() {
  GenSpec g;
  g.kind = GenKind::LinearNoisy;
  g.nd = 201;
  g.seed = 1;
  const auto b = bounds(build_operators(three_bar_truss()), sorted(g), {}, 0);
  const auto up = case1_values(b.upper_report), lo = case1_values(b.lower_report);
  const bool up_mono = std::is_sorted(up.rbegin(), up.rend());
  const bool lo_mono = std::is_sorted(lo.begin(), lo.end());
  const auto& u0 = b.upper_report.history.front();
  const auto& l0 = b.lower_report.history.front();
  const bool first_ok = u0.feasible && l0.feasible;
  const double gap0 = first_ok ? u0.u[0] - l0.u[0] : NAN;
  const double gap1 = b.upper - b.lower;
  const bool ok = up_mono && lo_mono && first_ok && gap1 <= 0.7 * gap0;
  return {ok, fmt("upper non-increasing %s, lower non-decreasing %s, gap %.4f -> %.4f (%.0f%% smaller)",
                  up_mono ? "yes" : "no", lo_mono ? "yes" : "no", gap0, gap1, 100.0 * (1.0 - gap1 / gap0))};
}

// ---------------------------------------------------------------------------
// 3 and 4. Space truss with exact cube-root data

const int kSizes[4] = {41, 101, 1001, 10001};
constexpr int kBracketDof = 66;

SlpConfig truss_config() {
  SlpConfig c;
  c.nc = 5;
  c.rho = 2.0;
  c.l1 = 25;
  c.tol = 0.001;
  return c;
}

DataSet exact_cuberoot(int nd) {
  GenSpec g;
  g.kind = GenKind::CubeRootNoisy;
  g.nd = nd;
  g.theta0 = 0.0;
  return sorted(g);
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ops = build_operators(space_truss());
  const auto ref = reference_solve(ops, ScalarLaw::cube_root());
  std::vector<double> ure;
  std::vector<int> iters;
  for (int nd : kSizes) {
    const auto r = slp_solve(ops, exact_cuberoot(nd), truss_config());
    ure.push_back(relative_error(r.u, ref.u, "U_RE"));
    iters.push_back(r.iterations);
  }
  bool dec = true;
  for (std::size_t i = 1; i < ure.size(); ++i) dec = dec && ure[i] < ure[i - 1];
  const double secs = seconds_since(t0);
  const bool ok = ops.num_members >= 50 && dec && ure.back() < 0.02 && iters.back() <= 2 * iters.front() && secs < 60;
  return {ok, fmt("%d bars, U_RE %.4f %.4f %.5f %.5f, iterations %d -> %d, %.1f s", ops.num_members, ure[0], ure[1],
                  ure[2], ure[3], iters.front(), iters.back(), secs)};
}

Outcome criterion4() {
  const auto ops = build_operators(space_truss());
  const double uref = reference_solve(ops, ScalarLaw::cube_root()).u[kBracketDof];
  bool bracket = true;
  std::vector<double> gaps;
  std::string rows;
  for (int nd : kSizes) {
    const auto b = bounds(ops, exact_cuberoot(nd), truss_config(), kBracketDof);
    bracket = bracket && b.lower <= uref && uref <= b.upper;
    gaps.push_back(b.upper - b.lower);
    rows += fmt(" [%.4f, %.4f]", b.lower, b.upper);
  }
  const bool ok = bracket && gaps.back() < 0.1 * gaps.front();
  return {ok, fmt("dof %d ref %.4f:%s, gap ratio %.4f", kBracketDof, uref, rows.c_str(), gaps.back() / gaps.front())};
}

// ---------------------------------------------------------------------------
// 5 and 6. Replicated noisy truss runs

constexpr int kReplicates = 30;
constexpr std::uint64_t kBaseSeed = 2024;

SlpConfig noisy_config() {
  SlpConfig c;
  c.nc = 5;
  c.l1 = 25;
  c.rho = 1.1;
  c.tol = 0.01;
  return c;
}

GenSpec noisy_spec(double theta0, int rep) {
  GenSpec g;
  g.kind = GenKind::CubeRootNoisy;
  g.nd = 121;
  g.theta0 = theta0;
  g.seed = derive_seed(kBaseSeed, static_cast<std::uint64_t>(rep));
  return g;
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ops = build_operators(space_truss());
  const auto ref = reference_solve(ops, ScalarLaw::cube_root());
  const double thetas[3] = {0.02, 0.04, 0.08};
  double mu[3], ms[3];
  for (int t = 0; t < 3; ++t) {
    std::vector<double> u(kReplicates), s(kReplicates);
    parallel_for(kReplicates, 0, [&](int rep) {
      const auto r = slp_solve(ops, sorted(noisy_spec(thetas[t], rep)), noisy_config());
      const auto e = compute_errors(r.u, r.strain, r.stress, ref.u, ref.strain, ref.stress, ops.num_members);
      u[static_cast<std::size_t>(rep)] = e.u_re;
      s[static_cast<std::size_t>(rep)] = e.sigma_rms;
    });
    mu[t] = mean(u);
    ms[t] = mean(s);
  }
  const double secs = seconds_since(t0);
  const bool ok = mu[0] < mu[1] && mu[1] < mu[2] && ms[0] < ms[1] && ms[1] < ms[2] && secs < 300;
  return {ok, fmt("mean U_RE %.4f %.4f %.4f, mean sigma_RMS %.4f %.4f %.4f, %.1f s", mu[0], mu[1], mu[2], ms[0], ms[1],
                  ms[2], secs)};
}

constexpr int kNegativeDof = 65;

Outcome criterion6() {
  const auto ops = build_operators(space_truss());
  std::vector<double> dup[2], dlo[2];
  for (auto& v : dup) v.resize(kReplicates);
  for (auto& v : dlo) v.resize(kReplicates);
  const double factors[2] = {1.2, 0.8};
  parallel_for(kReplicates, 0, [&](int rep) {
    const GenSpec g = noisy_spec(0.04, rep);
    const DataSet clean = generate(g);
    const auto b0 = bounds(ops, clean, noisy_config(), kNegativeDof);
    for (int f = 0; f < 2; ++f) {
      const DataSet dirty = inject_outliers(clean, 16, factors[f], derive_seed(kBaseSeed, static_cast<std::uint64_t>(rep), 1));
      const auto b1 = bounds(ops, dirty, noisy_config(), kNegativeDof);
      dup[f][static_cast<std::size_t>(rep)] = b1.upper - b0.upper;
      dlo[f][static_cast<std::size_t>(rep)] = b1.lower - b0.lower;
    }
  });
  const double up12 = std::abs(mean(dup[0])), lo12 = std::abs(mean(dlo[0]));
  const double up08 = std::abs(mean(dup[1])), lo08 = std::abs(mean(dlo[1]));
  const bool ok = up12 > lo12 && lo08 > up08;
  return {ok, fmt("dof %d: x1.2 |shift| upper %.4f lower %.4f; x0.8 |shift| upper %.4f lower %.4f", kNegativeDof, up12,
                  lo12, up08, lo08)};
}

// ---------------------------------------------------------------------------
// 7. LP solver against vertex enumeration

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  int failures = 0, feasible = 0;
  for (int t = 0; t < 500; ++t) {
    const LpProblem p = oracle::random_small_lp(rng);
    const auto s = lp_solve(p);
    const auto v = oracle::enumerate_vertices(p);
    feasible += v.feasible;
    const bool status_ok = v.feasible ? s.status == LpStatus::Optimal : s.status == LpStatus::Infeasible;
    if (!status_ok || (v.feasible && std::abs(s.objective - v.objective) > 1e-8 * std::max(1.0, std::abs(v.objective))))
      ++failures;
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 10, fmt("%d failures in 500 LPs (%d feasible), %.2f s", failures, feasible, secs)};
}

// ---------------------------------------------------------------------------
// 8. Simplex vertices

Outcome criterion8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1), pos(0.01, 5.0);
  double worst_edge = 0.0, worst_centre = 0.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd e(6), s(6), d(6);
    for (int i = 0; i < 6; ++i) {
      e[i] = u(rng);
      s[i] = u(rng);
      d[i] = pos(rng);
    }
    const double edge = pos(rng);
    const auto v = simplex_vertices({e, s}, edge, {d});
    Eigen::VectorXd c = Eigen::VectorXd::Zero(6);
    for (int a = 0; a < 7; ++a) {
      c += v[static_cast<std::size_t>(a)].strain / 7.0;
      for (int b = a + 1; b < 7; ++b) {
        const double dist = (v[static_cast<std::size_t>(a)].strain - v[static_cast<std::size_t>(b)].strain).norm();
        worst_edge = std::max(worst_edge, std::abs(dist - edge) / edge);
      }
    }
    worst_centre = std::max(worst_centre, (c - e).norm() / std::max(1.0, e.norm()));
  }
  return {worst_edge <= 1e-12 && worst_centre <= 1e-12,
          fmt("max relative edge error %.2e, max centroid error %.2e", worst_edge, worst_centre)};
}

// ---------------------------------------------------------------------------
// 9 and 10. Cantilever

struct ContinuumCase {
  Cantilever cant;
  MemberOperators ops;
  DataSet ds;
  ElasticState ref;
  int tip = -1;
};

// noise_is_std: read the Gaussian parameter as a standard deviation
ContinuumCase make_continuum_case(bool noise_is_std) {
  ContinuumCase x;
  x.cant = cantilever(4, 2, 2, 0.25);
  x.ops = build_gauss_operators(x.cant.mesh);
  GenSpec g;
  g.kind = GenKind::Gauss6d;
  g.per_axis = 5;
  g.variance = 0.005;
  g.variance_is_std = noise_is_std;
  g.seed = 1;
  x.ds = sorted(g);
  x.ref = reference_solve_elastic(x.cant.mesh, 1.0, 0.3);
  for (int i = 0; i < x.ops.num_dofs; ++i)
    if (x.ops.free_to_global[static_cast<std::size_t>(i)] == x.cant.tip_dof) x.tip = i;
  return x;
}

const ContinuumCase& continuum_case() {
  static const ContinuumCase c = make_continuum_case(false);
  return c;
}

const ContinuumCase& continuum_case_std() {
  static const ContinuumCase c = make_continuum_case(true);
  return c;
}

SlpConfig continuum_config() {
  SlpConfig cfg = SlpConfig::continuum();
  cfg.jobs = 0;
  cfg.max_iter = 15;
  return cfg;
}

ErrorReport continuum_errors(const ContinuumCase& c, const SolveReport& r) {
  return compute_errors(r.u, r.strain, r.stress, c.ref.u, c.ref.strain, c.ref.stress, c.ops.num_members);
}

Outcome criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& c = continuum_case();
  const auto b = bounds(c.ops, c.ds, continuum_config(), c.tip);
  const SolveReport* runs[3] = {&b.lower_report, &b.comparable_report, &b.upper_report};
  bool conv = true;
  std::string its;
  for (const auto* r : runs) {
    conv = conv && r->converged && r->iterations <= 15;
    its += fmt(" %d%s", r->iterations, r->converged ? "" : "(not converged)");
  }
  const auto e = continuum_errors(c, b.comparable_report);
  const double secs = seconds_since(t0);
  const bool ok = conv && e.u_re < 0.03 && e.sigma_rms < 0.03 && b.lower <= b.upper && secs < 300;

  // not part of the verdict: the same run with the noise parameter read as a std
  const auto& cs = continuum_case_std();
  const auto rs = slp_solve(cs.ops, cs.ds, continuum_config());
  const auto es = continuum_errors(cs, rs);
  return {ok, fmt("iterations (lower, comparable, upper)%s; U_RE %.4f sigma_RMS %.4f; tip [%.5f, %.5f] ref %.5f; %.1f s"
                  " | with std 0.005 instead: %s after %d, U_RE %.4f sigma_RMS %.4f",
                  its.c_str(), e.u_re, e.sigma_rms, b.lower, b.upper, c.ref.u[c.tip], secs, rs.stop_reason.c_str(),
                  rs.iterations, es.u_re, es.sigma_rms)};
}

Outcome criterion10() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  RowMatrix pts(100000, 12);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
  NnOptions opt;
  opt.mode = NnMode::KdForest;
  opt.num_trees = 20;
  opt.max_checks = 256;
  opt.seed = 3;
  const NnIndex forest(pts, opt);
  const NnIndex brute(pts, {});
  const int queries = 1000;
  int hits = 0;
  for (int q = 0; q < queries; ++q) {
    Eigen::VectorXd x(12);
    for (int i = 0; i < 12; ++i) x[i] = u(rng);
    hits += forest.query(x) == brute.query(x);
  }
  const double recall = static_cast<double>(hits) / queries;

  // a run that converges, so the two searches are compared on a settled answer
  const auto& c = continuum_case_std();
  SlpConfig cfg = continuum_config();
  const auto exact = slp_solve(c.ops, c.ds, cfg);
  cfg.nn.mode = NnMode::KdForest;
  const auto ann = slp_solve(c.ops, c.ds, cfg);
  const double e0 = continuum_errors(c, exact).u_re, e1 = continuum_errors(c, ann).u_re;
  const bool ok = recall >= 0.95 && std::abs(e1 - e0) <= 0.005;
  return {ok, fmt("recall@1 %.3f; U_RE brute %.4f (%s), kd forest %.4f (%s)", recall, e0, exact.stop_reason.c_str(), e1,
                  ann.stop_reason.c_str())};
}

// ---------------------------------------------------------------------------
// 11. Classic solver

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[k - 1] * (1 + 1e-12) + 1e-15) return false;
  return true;
}

Outcome criterion11() {
  const auto ops = build_operators(three_bar_truss());
  DataSet dense(1);
  for (int j = 0; j <= 20000; ++j) {
    const double e = -1.0 + 2.0 * j / 20000;
    dense.add(e, e);
  }
  const auto el = linear_solve(ops, Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto r = ddcm_solve(ops, dense);
  const double ure = relative_error(r.u, el.u, "U_RE");
  bool mono = non_increasing(r.objective_history);
  int instances = 1;
  const auto truss = build_operators(space_truss(3));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenSpec g;
    g.kind = GenKind::CubeRootNoisy;
    g.nd = 301;
    g.seed = seed;
    mono = mono && non_increasing(ddcm_solve(truss, generate(g)).objective_history);
    GenSpec l;
    l.seed = seed;
    mono = mono && non_increasing(ddcm_solve(ops, generate(l)).objective_history);
    instances += 2;
  }
  const auto& c = continuum_case();
  mono = mono && non_increasing(ddcm_solve(c.ops, c.ds).objective_history);
  ++instances;
  return {ure < 1e-3 && mono, fmt("U_RE %.2e on dense linear data; objective non-increasing on %d of %d instances: %s",
                                  ure, instances, instances, mono ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"three-bar bounds match the modulus envelope", criterion1},
      {"noisy three-bar bound histories", criterion2},
      {"data convergence on the space truss", criterion3},
      {"bounds bracket the reference on exact data", criterion4},
      {"error grows with noise level", criterion5},
      {"outlier direction", criterion6},
      {"LP solver vs vertex enumeration", criterion7},
      {"regular simplex geometry", criterion8},
      {"continuum cantilever", criterion9},
      {"approximate nearest neighbours", criterion10},
      {"classic solver sanity", criterion11},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
