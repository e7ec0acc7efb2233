#pragma once
// Sequential linear programming over local convex hulls of data.
//
// Each iteration solves, in the variables (U free, lambda_e in [lo, hi]^Nc),
//
//   min  objective(U)
//   s.t. B_e U = sum_j lambda_ej eps_je                       (d rows / member)
//        sum_e w_e B_e^T (sum_j lambda_ej sig_je) = p          (n rows)
//        sum_j lambda_ej = 1                                   (1 row / member)
//
// then moves every member's hull toward its new state: a window of Nc rows
// of the sorted dataset for bars, the data nearest to the vertices of a
// regular 6-simplex for Gauss points. An infeasible LP is replaced by the
// projection of the hull centres and the hulls grow instead of shrinking.
//
// Data indices are 0-based rows of the sorted dataset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "ddslp/ddcm.hpp"
#include "ddslp/error.hpp"
#include "ddslp/io.hpp"
#include "ddslp/lp.hpp"
#include "ddslp/model.hpp"
#include "ddslp/nn.hpp"
#include "ddslp/parallel.hpp"
#include "ddslp/phase.hpp"

namespace ddslp {

enum class ObjectiveKind { Compliance, PlusDof, MinusDof };

/// Compliance minimises p.U; PlusDof(i) minimises U_i (lower bound);
/// MinusDof(i) minimises -U_i (upper bound). i indexes the free dofs.
struct Objective {
  ObjectiveKind kind = ObjectiveKind::Compliance;
  int dof = 0;

  static Objective compliance() { return {}; }
  static Objective plus(int i) { return {ObjectiveKind::PlusDof, i}; }
  static Objective minus(int i) { return {ObjectiveKind::MinusDof, i}; }

  [[nodiscard]] std::string str() const {
    switch (kind) {
      case ObjectiveKind::Compliance: return "compliance";
      case ObjectiveKind::PlusDof: return "plus:" + std::to_string(dof);
      case ObjectiveKind::MinusDof: return "minus:" + std::to_string(dof);
    }
    return "?";
  }

  static Objective parse(const std::string& s) {
    if (s == "compliance") return compliance();
    const auto colon = s.find(':');
    if (colon != std::string::npos) {
      const std::string head = s.substr(0, colon);
      int i = 0;
      try {
        std::size_t used = 0;
        i = std::stoi(s.substr(colon + 1), &used);
        if (used != s.size() - colon - 1) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw InvalidArgument("objective '" + s + "': bad dof index");
      }
      if (head == "plus") return plus(i);
      if (head == "minus") return minus(i);
    }
    throw InvalidArgument("objective '" + s + "': expected compliance, plus:<dof> or minus:<dof>");
  }
};

struct SlpConfig {
  int nc = 5;
  /// First hull size: a row stride for bars, a simplex edge for Gauss points.
  /// Unset: floor((N_d - 1) / N_c) for bars, 1 for Gauss points.
  std::optional<double> l1;
  double rho = 1.5;
  double l_min = 0.2;  ///< Gauss points only
  double tol = 0.01;
  double lambda_lo = 0.0;
  double lambda_hi = 1.0;
  bool relax_lambda = true;  ///< Gauss points only
  int max_iter = 100;
  Objective objective;
  bool warm_start = true;
  std::uint64_t seed = 0;
  NnOptions nn;
  int jobs = 1;

  /// Settings used for the continuum examples.
  static SlpConfig continuum() {
    SlpConfig c;
    c.nc = 7;
    c.l1 = 1.0;
    c.rho = 1.5;
    c.l_min = 0.2;
    c.tol = 0.005;
    c.lambda_lo = -0.5;
    c.lambda_hi = 1.5;
    return c;
  }

  void validate(int dim) const {
    if (dim == 1 && nc < 3) throw InvalidArgument("SlpConfig: bars need N_c >= 3");
    if (dim == 6 && nc < 7) throw InvalidArgument("SlpConfig: Gauss points need N_c >= 7");
    if (!(rho > 1.0)) throw InvalidArgument("SlpConfig: rho must exceed 1");
    if (!(tol > 0.0)) throw InvalidArgument("SlpConfig: Tol must be positive");
    if (!(lambda_lo < lambda_hi)) throw InvalidArgument("SlpConfig: lambda bounds are empty");
    if (!(l_min >= 0.0)) throw InvalidArgument("SlpConfig: L_min must be non-negative");
    if (l1 && !(*l1 > 0.0)) throw InvalidArgument("SlpConfig: L1 must be positive");
    if (dim == 1 && l1 && *l1 < 1.0) throw InvalidArgument("SlpConfig: bar hull size L1 must be at least 1");
    if (max_iter < 1) throw InvalidArgument("SlpConfig: max_iter must be positive");
  }
};

[[nodiscard]] inline nlohmann::json to_json(const SlpConfig& c) {
  nlohmann::json j{{"nc", c.nc},
                   {"rho", c.rho},
                   {"l_min", c.l_min},
                   {"tol", c.tol},
                   {"lambda_lo", c.lambda_lo},
                   {"lambda_hi", c.lambda_hi},
                   {"relax_lambda", c.relax_lambda},
                   {"max_iter", c.max_iter},
                   {"objective", c.objective.str()},
                   {"warm_start", c.warm_start},
                   {"seed", c.seed},
                   {"nn", {{"mode", c.nn.mode == NnMode::BruteForce ? "brute" : "kdforest"},
                           {"trees", c.nn.num_trees},
                           {"max_checks", c.nn.max_checks},
                           {"leaf_size", c.nn.leaf_size}}}};
  j["l1"] = c.l1 ? nlohmann::json(*c.l1) : nlohmann::json("auto");
  return j;
}

using LocalSets = std::vector<std::vector<int>>;

// ---------------------------------------------------------------------------
// Hull initialisation and updates

/// Stride of the first hulls, floor((N_d - 1) / N_c).
[[nodiscard]] inline int initial_stride(int nd, int nc) { return (nd - 1) / nc; }

[[nodiscard]] inline double initial_hull_size(const SlpConfig& cfg, int dim, int nd) {
  if (cfg.l1) return dim == 1 ? std::floor(*cfg.l1) : *cfg.l1;
  return dim == 1 ? std::max(1, initial_stride(nd, cfg.nc)) : 1.0;
}

/// Every member starts from rows {0, s, ..., (Nc-1) s} with s = initial_stride.
[[nodiscard]] inline LocalSets init_local_sets(const DataSet& ds, const SlpConfig& cfg, int m) {
  const int nd = ds.size();
  const int s = initial_stride(nd, cfg.nc);
  if (s < 1 || nd < 1 + (cfg.nc - 1) * s)
    throw SizingError("init_local_sets: N_c = " + std::to_string(cfg.nc) + " needs at least " + std::to_string(cfg.nc + 1) +
                      " data points, got " + std::to_string(nd));
  std::vector<int> rows(static_cast<std::size_t>(cfg.nc));
  for (int j = 0; j < cfg.nc; ++j) rows[static_cast<std::size_t>(j)] = j * s;
  return LocalSets(static_cast<std::size_t>(m), rows);
}

/// Largest stride whose window still fits in the dataset.
[[nodiscard]] inline int max_stride(int nd, int nc) { return std::max(1, (nd - 1) / (nc - 1)); }

/// Rows id + (j - t) L for j = 0..Nc-1, t = floor(Nc/2), shifted to fit in [0, nd).
[[nodiscard]] inline std::vector<int> window_1d(int id, int stride, int nc, int nd) {
  stride = std::clamp(stride, 1, max_stride(nd, nc));
  const int t = nc / 2;
  int first = id - t * stride;
  const int last = first + (nc - 1) * stride;
  if (first < 0) first = 0;
  else if (last > nd - 1) first -= last - (nd - 1);
  first = std::max(first, 0);
  std::vector<int> w(static_cast<std::size_t>(nc));
  for (int j = 0; j < nc; ++j) w[static_cast<std::size_t>(j)] = std::min(first + j * stride, nd - 1);
  return w;
}

/// Case 1 (feasible): max(1, floor(L / rho)). Case 2: L + 1. Capped so the
/// window fits.
[[nodiscard]] inline int next_stride_1d(int stride, bool feasible, double rho, int nd, int nc) {
  const int next = feasible ? std::max(1, static_cast<int>(std::floor(stride / rho))) : stride + 1;
  return std::min(next, max_stride(nd, nc));
}

struct HullUpdate {
  LocalSets local;
  double hull_size = 0.0;
};

/// Windows around the data row nearest to each member state.
[[nodiscard]] inline HullUpdate update_window_1d(const DataSet& ds, const NnIndex& index, const Eigen::VectorXd& strain,
                                                 const Eigen::VectorXd& stress, double hull_size, bool feasible,
                                                 const SlpConfig& cfg) {
  const int m = static_cast<int>(strain.size());
  HullUpdate out;
  const int next = next_stride_1d(static_cast<int>(hull_size), feasible, cfg.rho, ds.size(), cfg.nc);
  out.hull_size = next;
  out.local.resize(static_cast<std::size_t>(m));
  parallel_for(m, cfg.jobs, [&](int e) {
    const Eigen::Vector2d q(strain[e], stress[e]);
    out.local[static_cast<std::size_t>(e)] = window_1d(index.query(q), next, cfg.nc, ds.size());
  });
  return out;
}

/// The seven vertices of a regular simplex with edge L in strain space
/// centred on the current strain; stress offsets are scaled by D.
[[nodiscard]] inline std::array<PhasePoint, 7> simplex_vertices(const PhasePoint& current, double edge,
                                                                const ScalingMatrix& scale) {
  if (current.dim() != kVoigtSize) throw DimensionError("simplex_vertices: needs a 6-D state");
  if (!(edge > 0.0)) throw InvalidArgument("simplex_vertices: edge length must be positive");
  if (scale.diag.size() != kVoigtSize || !scale.valid()) throw InvalidArgument("simplex_vertices: bad scaling");
  const double root7 = std::sqrt(7.0);
  const double p = edge * (5.0 + root7) / (6.0 * std::sqrt(2.0));
  const double q = edge * (root7 - 1.0) / (6.0 * std::sqrt(2.0));
  const double gamma = (5.0 * q + p) / 7.0;
  std::array<PhasePoint, 7> v;
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(6, gamma);
  v[0] = PhasePoint(current.strain - g, current.stress - scale.diag.cwiseProduct(g));
  for (int i = 0; i < 6; ++i) {
    Eigen::VectorXd step = Eigen::VectorXd::Constant(6, q);
    step[i] = p;
    v[static_cast<std::size_t>(i + 1)] = PhasePoint(v[0].strain + step, v[0].stress + scale.diag.cwiseProduct(step));
  }
  return v;
}

/// Feasible: max(L1 / rho^k, L_min). Infeasible: 1.1 L.
[[nodiscard]] inline double next_edge_6d(double l1, double current, int k, bool feasible, double rho, double l_min) {
  if (!feasible) return 1.1 * current;
  return std::max(l1 / std::pow(rho, k), l_min);
}

/// Snaps the simplex vertices around each member state to their nearest data.
/// With Nc > 7 the remaining slots take the nearest data to the state itself.
[[nodiscard]] inline LocalSets update_simplex_6d(const DataSet& ds, const NnIndex& index, const Eigen::VectorXd& strain,
                                                 const Eigen::VectorXd& stress, const LocalSets& current, double edge,
                                                 const SlpConfig& cfg) {
  const int m = static_cast<int>(current.size());
  LocalSets out(static_cast<std::size_t>(m));
  parallel_for(m, cfg.jobs, [&](int e) {
    const auto& rows = current[static_cast<std::size_t>(e)];
    const ScalingMatrix scale = estimate_scaling(ds, rows);
    const PhasePoint state(strain.segment(6 * e, 6), stress.segment(6 * e, 6));
    const auto verts = simplex_vertices(state, edge, scale);
    auto& next = out[static_cast<std::size_t>(e)];
    next.reserve(static_cast<std::size_t>(cfg.nc));
    for (const auto& v : verts) next.push_back(index.query(v.coords()));
    if (cfg.nc > 7) {
      const auto extra = index.knn(state.coords(), cfg.nc - 7);
      for (int r : extra) next.push_back(r);
      while (static_cast<int>(next.size()) < cfg.nc) next.push_back(next.back());
    }
  });
  return out;
}

struct LambdaBounds {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const LambdaBounds&) const = default;
};

/// Infeasible: widen by 1 on each side. Feasible: move halfway back to the
/// nominal bounds, snapping once within 0.05.
[[nodiscard]] inline LambdaBounds relax_lambda_bounds(LambdaBounds cur, bool feasible, LambdaBounds nominal) {
  if (!feasible) return {cur.lo - 1.0, cur.hi + 1.0};
  auto back = [](double x, double target) {
    const double y = x + 0.5 * (target - x);
    return std::abs(y - target) <= 0.05 + 1e-12 ? target : y;
  };
  return {back(cur.lo, nominal.lo), back(cur.hi, nominal.hi)};
}

// ---------------------------------------------------------------------------
// LP assembly

[[nodiscard]] inline Eigen::VectorXd objective_vector(const MemberOperators& ops, const Objective& obj) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(ops.num_dofs);
  switch (obj.kind) {
    case ObjectiveKind::Compliance: c = ops.load; break;
    case ObjectiveKind::PlusDof:
    case ObjectiveKind::MinusDof:
      if (obj.dof < 0 || obj.dof >= ops.num_dofs)
        throw InvalidArgument("objective dof " + std::to_string(obj.dof) + " is not a free dof (0.." +
                              std::to_string(ops.num_dofs - 1) + ")");
      c[obj.dof] = obj.kind == ObjectiveKind::PlusDof ? 1.0 : -1.0;
      break;
  }
  return c;
}

/// Variables [U | lambda_00 .. lambda_0(Nc-1) | lambda_10 ...].
[[nodiscard]] inline LpProblem assemble_lp(const MemberOperators& ops, const DataSet& ds, const LocalSets& local,
                                           LambdaBounds bounds, const Objective& obj) {
  ops.validate();
  const int m = ops.num_members, d = ops.dim, n = ops.num_dofs;
  if (ds.dim() != d) throw DimensionError("assemble_lp: dataset dimension does not match the model");
  if (static_cast<int>(local.size()) != m) throw DimensionError("assemble_lp: one local set per member required");
  const int nc = m > 0 ? static_cast<int>(local[0].size()) : 0;
  for (const auto& rows : local) {
    if (static_cast<int>(rows.size()) != nc) throw DimensionError("assemble_lp: local sets differ in size");
    for (int r : rows)
      if (r < 0 || r >= ds.size()) throw InvalidArgument("assemble_lp: local index out of range");
  }
  const int nv = n + m * nc;
  const int rows_compat = m * d, rows_eq = n, nrows = rows_compat + rows_eq + m;

  LpProblem p;
  p.cost = Eigen::VectorXd::Zero(nv);
  p.cost.head(n) = objective_vector(ops, obj);
  p.lower.resize(nv);
  p.upper.resize(nv);
  p.lower.head(n).setConstant(-kInf);
  p.upper.head(n).setConstant(kInf);
  p.lower.tail(m * nc).setConstant(bounds.lo);
  p.upper.tail(m * nc).setConstant(bounds.hi);
  p.rhs = Eigen::VectorXd::Zero(nrows);
  p.rhs.segment(rows_compat, rows_eq) = ops.load;
  p.rhs.tail(m).setOnes();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ops.B.nonZeros() + static_cast<Eigen::Index>(m) * nc * (2 * d + 1) +
                                        static_cast<Eigen::Index>(m) * nc * 24));
  for (int r = 0; r < rows_compat; ++r)
    for (RowSparse::InnerIterator it(ops.B, r); it; ++it) trip.emplace_back(r, static_cast<int>(it.col()), it.value());
  Eigen::VectorXd sig(d);
  for (int e = 0; e < m; ++e) {
    for (int j = 0; j < nc; ++j) {
      const int col = n + e * nc + j;
      const int row = local[static_cast<std::size_t>(e)][static_cast<std::size_t>(j)];
      for (int a = 0; a < d; ++a) {
        const double v = ds.strain(row)[a];
        if (v != 0.0) trip.emplace_back(e * d + a, col, -v);
      }
      // equilibrium column: w_e B_e^T sig_j
      sig = ds.stress(row).transpose() * ops.weight[e];
      for (int a = 0; a < d; ++a) {
        if (sig[a] == 0.0) continue;
        for (RowSparse::InnerIterator it(ops.B, e * d + a); it; ++it)
          trip.emplace_back(rows_compat + static_cast<int>(it.col()), col, it.value() * sig[a]);
      }
      trip.emplace_back(rows_compat + rows_eq + e, col, 1.0);
    }
  }
  p.A.resize(nrows, nv);
  p.A.setFromTriplets(trip.begin(), trip.end());
  p.A.makeCompressed();
  return p;
}

/// Member states sum_j lambda_ej (eps_j, sig_j).
inline void combine_local(const DataSet& ds, const LocalSets& local, const Eigen::VectorXd& lambda,
                          Eigen::VectorXd& strain, Eigen::VectorXd& stress) {
  const int m = static_cast<int>(local.size()), d = ds.dim();
  const int nc = m > 0 ? static_cast<int>(local[0].size()) : 0;
  strain = Eigen::VectorXd::Zero(m * d);
  stress = Eigen::VectorXd::Zero(m * d);
  for (int e = 0; e < m; ++e)
    for (int j = 0; j < nc; ++j) {
      const int row = local[static_cast<std::size_t>(e)][static_cast<std::size_t>(j)];
      const double l = lambda[e * nc + j];
      strain.segment(e * d, d) += l * ds.strain(row).transpose();
      stress.segment(e * d, d) += l * ds.stress(row).transpose();
    }
}

/// Geometric centres of the local sets.
inline void hull_centres(const DataSet& ds, const LocalSets& local, Eigen::VectorXd& strain, Eigen::VectorXd& stress) {
  const int nc = local.empty() ? 0 : static_cast<int>(local[0].size());
  combine_local(ds, local, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(local.size()) * nc, 1.0 / nc), strain, stress);
}

// ---------------------------------------------------------------------------
// Driver

struct IterationRecord {
  int k = 0;
  double objective = 0.0;
  double hull_size = 0.0;
  bool feasible = false;
  double rel_change = std::numeric_limits<double>::quiet_NaN();  ///< NaN at k = 1
  LambdaBounds lambda;
  int lp_iterations = 0;
  std::string lp_status;
  double lp_time = 0.0;
  Eigen::VectorXd u;
};

struct SolveReport {
  SlpConfig config;
  bool converged = false;
  /// "converged", "cycle" (hull sequence repeated) or "max_iter"
  std::string stop_reason = "max_iter";
  bool final_feasible = false;
  int iterations = 0;
  double objective = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd strain;
  Eigen::VectorXd stress;
  Eigen::VectorXd lambda;  ///< empty when the final iterate came from the fallback
  LocalSets local;         ///< hulls of the final iterate
  LambdaBounds lambda_bounds;
  std::vector<IterationRecord> history;
  double wall_time = 0.0;
  double lp_time = 0.0;

  /// U at the objective dof (or dof 0 for compliance runs).
  [[nodiscard]] double dof_value(int dof) const { return u[dof]; }
};

struct HullSolve {
  LpSolution lp;
  Eigen::VectorXd u, lambda, strain, stress;
};

/// One LP on given hulls.
[[nodiscard]] inline HullSolve solve_on_hulls(const MemberOperators& ops, const DataSet& ds, const LocalSets& local,
                                              LambdaBounds bounds, const Objective& obj, const LpOptions& lp_opt = {}) {
  HullSolve h;
  h.lp = lp_solve(assemble_lp(ops, ds, local, bounds, obj), lp_opt);
  if (h.lp.optimal()) {
    h.u = h.lp.x.head(ops.num_dofs);
    h.lambda = h.lp.x.tail(h.lp.x.size() - ops.num_dofs);
    combine_local(ds, local, h.lambda, h.strain, h.stress);
  }
  return h;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline DataSet ensure_sorted(const DataSet& ds) { return ds.is_sorted() ? ds : sort_canonical(ds); }

}  // namespace detail

/// Solves on a dataset that is already in canonical order.
[[nodiscard]] inline SolveReport slp_solve_sorted(const MemberOperators& ops, const DataSet& ds, const SlpConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ops.validate();
  const int d = ops.dim, m = ops.num_members;
  if (ds.dim() != d) throw DimensionError("slp_solve: dataset dimension does not match the model");
  if (!ds.is_sorted()) throw InvalidArgument("slp_solve_sorted: dataset is not sorted");
  cfg.validate(d);
  (void)objective_vector(ops, cfg.objective);

  SolveReport rep;
  rep.config = cfg;
  LocalSets local = init_local_sets(ds, cfg, m);
  const double l1 = initial_hull_size(cfg, d, ds.size());
  double hull = l1;
  const LambdaBounds nominal{cfg.lambda_lo, cfg.lambda_hi};
  LambdaBounds bounds = nominal;

  NnOptions nopt = cfg.nn;
  if (d == 1) nopt.mode = NnMode::BruteForce;  // exact search in the plane
  nopt.seed = cfg.seed;
  const NnIndex index(ds, nopt);
  std::optional<ScalingMatrix> fallback_scale;

  LpBasis basis;
  Eigen::VectorXd prev_u;
  // The update is deterministic, so a repeated (hulls, L, lambda bounds)
  // start state means the iteration has entered a cycle.
  struct Snapshot {
    LocalSets local;
    double hull;
    LambdaBounds bounds;
    SolveReport result;  // u, strain, stress, lambda and objective only
    bool feasible;
  };
  std::vector<Snapshot> seen;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    auto same = [&](const Snapshot& sn) {
      return sn.hull == hull && sn.bounds.lo == bounds.lo && sn.bounds.hi == bounds.hi && sn.local == local;
    };
    const auto again = std::find_if(seen.begin(), seen.end(), same);
    if (again != seen.end()) {
      // settle on the feasible iterate of the cycle with the best objective
      const Snapshot* pick = nullptr;
      for (auto it = again; it != seen.end(); ++it)
        if (it->feasible && (!pick || it->result.objective < pick->result.objective)) pick = &*it;
      if (pick) {
        rep.u = pick->result.u;
        rep.strain = pick->result.strain;
        rep.stress = pick->result.stress;
        rep.lambda = pick->result.lambda;
        rep.objective = pick->result.objective;
        rep.local = pick->local;
        rep.lambda_bounds = pick->bounds;
        rep.final_feasible = true;
      }
      rep.stop_reason = "cycle";
      break;
    }

    IterationRecord rec;
    rec.k = k;
    rec.hull_size = hull;
    rec.lambda = bounds;

    LpOptions lopt;
    if (cfg.warm_start && !basis.empty()) lopt.warm_start = &basis;
    const auto tl = std::chrono::steady_clock::now();
    HullSolve h = solve_on_hulls(ops, ds, local, bounds, cfg.objective, lopt);
    rec.lp_time = detail::seconds_since(tl);
    rep.lp_time += rec.lp_time;
    rec.lp_iterations = h.lp.iterations;
    rec.lp_status = to_string(h.lp.status);
    rec.feasible = h.lp.optimal();

    Eigen::VectorXd u, strain, stress;
    if (rec.feasible) {
      basis = h.lp.basis;
      u = std::move(h.u);
      strain = std::move(h.strain);
      stress = std::move(h.stress);
      rec.objective = h.lp.objective;
    } else {
      if (!fallback_scale) fallback_scale = estimate_scaling(ds);
      Eigen::VectorXd ec, sc;
      hull_centres(ds, local, ec, sc);
      ProjectedState s = ddcm_project(ops, ec, sc, *fallback_scale);
      u = std::move(s.u);
      strain = std::move(s.strain);
      stress = std::move(s.stress);
      rec.objective = objective_vector(ops, cfg.objective).dot(u);
    }
    rec.u = u;

    // change against the last feasible iterate; only feasible iterates converge
    bool done = false;
    if (prev_u.size() > 0) {
      const double un = u.norm();
      const double diff = (u - prev_u).norm();
      rec.rel_change = un > 0.0 ? diff / un : diff;
      done = rec.feasible && rec.rel_change <= cfg.tol;
    }
    rep.history.push_back(rec);
    rep.iterations = k;
    rep.u = u;
    rep.strain = strain;
    rep.stress = stress;
    rep.lambda = rec.feasible ? h.lambda : Eigen::VectorXd();
    rep.local = local;
    rep.lambda_bounds = bounds;
    rep.objective = rec.objective;
    rep.final_feasible = rec.feasible;
    if (done) {
      rep.converged = true;
      rep.stop_reason = "converged";
      break;
    }
    {
      Snapshot sn{local, hull, bounds, {}, rec.feasible};
      sn.result.u = rep.u;
      sn.result.strain = rep.strain;
      sn.result.stress = rep.stress;
      sn.result.lambda = rep.lambda;
      sn.result.objective = rep.objective;
      seen.push_back(std::move(sn));
    }
    if (k == cfg.max_iter) break;

    if (d == 1) {
      HullUpdate up = update_window_1d(ds, index, strain, stress, hull, rec.feasible, cfg);
      local = std::move(up.local);
      hull = up.hull_size;
    } else {
      hull = next_edge_6d(l1, hull, k, rec.feasible, cfg.rho, cfg.l_min);
      local = update_simplex_6d(ds, index, strain, stress, local, hull, cfg);
      if (cfg.relax_lambda) bounds = relax_lambda_bounds(bounds, rec.feasible, nominal);
    }
    if (rec.feasible) prev_u = std::move(u);
  }
  rep.wall_time = detail::seconds_since(t0);
  return rep;
}

/// Sorts the dataset if needed; hull indices in the report refer to
/// sort_canonical(ds).
[[nodiscard]] inline SolveReport slp_solve(const MemberOperators& ops, const DataSet& ds, const SlpConfig& cfg) {
  if (ds.is_sorted()) return slp_solve_sorted(ops, ds, cfg);
  return slp_solve_sorted(ops, sort_canonical(ds), cfg);
}

struct BoundsResult {
  double lower = 0.0;
  double upper = 0.0;
  double comparable = 0.0;
  SolveReport lower_report, upper_report, comparable_report;
};

/// Runs the three objectives on one free dof.
[[nodiscard]] inline BoundsResult bounds(const MemberOperators& ops, const DataSet& ds, SlpConfig cfg, int dof) {
  if (dof < 0 || dof >= ops.num_dofs) throw InvalidArgument("bounds: dof " + std::to_string(dof) + " is not a free dof");
  const DataSet sorted = detail::ensure_sorted(ds);
  BoundsResult r;
  const Objective objs[3] = {Objective::minus(dof), Objective::plus(dof), Objective::compliance()};
  SolveReport* out[3] = {&r.upper_report, &r.lower_report, &r.comparable_report};
  const int jobs = cfg.jobs;
  cfg.jobs = 1;
  parallel_for(3, jobs, [&](int i) {
    SlpConfig c = cfg;
    c.objective = objs[i];
    *out[i] = slp_solve_sorted(ops, sorted, c);
  });
  r.upper = r.upper_report.u[dof];
  r.lower = r.lower_report.u[dof];
  r.comparable = r.comparable_report.u[dof];
  return r;
}

// ---------------------------------------------------------------------------
// Single global hull (bars only)

/// Convex hull of 2-D points by the monotone chain, counter-clockwise,
/// collinear points dropped. Returns indices into pts.
[[nodiscard]] inline std::vector<int> convex_hull_2d(const std::vector<Eigen::Vector2d>& pts) {
  const int n = static_cast<int>(pts.size());
  if (n == 0) throw EmptyInputError("convex_hull_2d: no points");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const auto& p = pts[static_cast<std::size_t>(a)];
    const auto& q = pts[static_cast<std::size_t>(b)];
    return p.x() < q.x() || (p.x() == q.x() && (p.y() < q.y() || (p.y() == q.y() && a < b)));
  });
  idx.erase(std::unique(idx.begin(), idx.end(),
                        [&](int a, int b) { return pts[static_cast<std::size_t>(a)] == pts[static_cast<std::size_t>(b)]; }),
            idx.end());
  if (idx.size() <= 2) return idx;
  auto cross = [&](int o, int a, int b) {
    const Eigen::Vector2d oa = pts[static_cast<std::size_t>(a)] - pts[static_cast<std::size_t>(o)];
    const Eigen::Vector2d ob = pts[static_cast<std::size_t>(b)] - pts[static_cast<std::size_t>(o)];
    return oa.x() * ob.y() - oa.y() * ob.x();
  };
  std::vector<int> hull(2 * idx.size());
  std::size_t k = 0;
  for (int i : idx) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], i) <= 0.0) --k;
    hull[k++] = i;
  }
  for (std::size_t i = idx.size() - 1, t = k + 1; i-- > 0;) {
    const int p = idx[i];
    while (k >= t && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

/// One LP with every bar confined to the convex hull of the whole dataset.
[[nodiscard]] inline SolveReport global_hull_solve(const MemberOperators& ops, const DataSet& ds, const Objective& obj) {
  const auto t0 = std::chrono::steady_clock::now();
  if (ds.dim() != 1 || ops.dim != 1) throw DimensionError("global_hull_solve: bars only");
  std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(ds.size()));
  for (int i = 0; i < ds.size(); ++i) pts[static_cast<std::size_t>(i)] = {ds.strain(i)[0], ds.stress(i)[0]};
  const std::vector<int> hull = convex_hull_2d(pts);

  SolveReport rep;
  rep.config.objective = obj;
  rep.config.nc = static_cast<int>(hull.size());
  rep.local.assign(static_cast<std::size_t>(ops.num_members), hull);
  rep.lambda_bounds = {0.0, 1.0};
  const auto tl = std::chrono::steady_clock::now();
  HullSolve h = solve_on_hulls(ops, ds, rep.local, rep.lambda_bounds, obj);
  rep.lp_time = detail::seconds_since(tl);
  IterationRecord rec;
  rec.k = 1;
  rec.hull_size = static_cast<double>(hull.size());
  rec.feasible = h.lp.optimal();
  rec.lp_status = to_string(h.lp.status);
  rec.lp_iterations = h.lp.iterations;
  rec.lp_time = rep.lp_time;
  rep.iterations = 1;
  rep.converged = rec.feasible;
  rep.final_feasible = rec.feasible;
  if (rec.feasible) {
    rep.u = h.u;
    rep.lambda = h.lambda;
    rep.strain = h.strain;
    rep.stress = h.stress;
    rep.objective = rec.objective = h.lp.objective;
    rec.u = h.u;
  }
  rep.history.push_back(rec);
  rep.wall_time = detail::seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

[[nodiscard]] inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

/// Machine-readable report; timings sit under "timing" only.
[[nodiscard]] inline nlohmann::json to_json(const SolveReport& r) {
  nlohmann::json j;
  j["config"] = to_json(r.config);
  j["converged"] = r.converged;
  j["stop_reason"] = r.stop_reason;
  j["final_feasible"] = r.final_feasible;
  j["iterations"] = r.iterations;
  j["objective"] = r.objective;
  j["lambda_bounds"] = {r.lambda_bounds.lo, r.lambda_bounds.hi};
  j["history"] = nlohmann::json::array();
  for (const auto& h : r.history) {
    nlohmann::json row{{"k", h.k},
                       {"objective", h.objective},
                       {"hull_size", h.hull_size},
                       {"feasible", h.feasible},
                       {"lambda_lo", h.lambda.lo},
                       {"lambda_hi", h.lambda.hi},
                       {"lp_iterations", h.lp_iterations},
                       {"lp_status", h.lp_status}};
    row["rel_change"] = std::isnan(h.rel_change) ? nlohmann::json(nullptr) : nlohmann::json(h.rel_change);
    j["history"].push_back(row);
  }
  j["u"] = vector_json(r.u);
  j["strain"] = vector_json(r.strain);
  j["stress"] = vector_json(r.stress);
  j["timing"] = {{"wall_s", r.wall_time}, {"lp_s", r.lp_time}};
  return j;
}

inline void write_history_csv(std::ostream& os, const SolveReport& r) {
  os << "k,objective,hull_size,feasible,rel_change,lambda_lo,lambda_hi,lp_iterations,lp_status\n";
  for (const auto& h : r.history)
    os << h.k << ',' << format_double(h.objective) << ',' << format_double(h.hull_size) << ',' << (h.feasible ? 1 : 0)
       << ',' << (std::isnan(h.rel_change) ? std::string() : format_double(h.rel_change)) << ','
       << format_double(h.lambda.lo) << ',' << format_double(h.lambda.hi) << ',' << h.lp_iterations << ','
       << h.lp_status << '\n';
}

}  // namespace ddslp
