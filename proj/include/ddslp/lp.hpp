#pragma once
// Bounded-variable revised simplex for
//
//     min c'x  s.t.  A x = b,  lo <= x <= hi
//
// Free and one-sided variables are handled natively. Phase 1 minimises the
// sum of one artificial per row; artificials that leave the basis are dropped
// and the remaining ones are pinned to [0, 0] for phase 2. The basis is kept
// as a sparse LU factorisation plus a product-form eta file that is folded
// back into a fresh factorisation every `refactor_interval` pivots.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ddslp/error.hpp"

namespace ddslp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct LpProblem {
  Eigen::VectorXd cost;
  SparseMatrix A;  ///< equality rows
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  [[nodiscard]] int num_vars() const { return static_cast<int>(cost.size()); }
  [[nodiscard]] int num_rows() const { return static_cast<int>(rhs.size()); }

  /// Throws DimensionError / InvalidArgument on malformed data.
  void validate() const {
    const auto n = cost.size();
    if (A.cols() != n) throw DimensionError("LpProblem: A has " + std::to_string(A.cols()) + " columns, cost has " + std::to_string(n));
    if (A.rows() != rhs.size()) throw DimensionError("LpProblem: A has " + std::to_string(A.rows()) + " rows, rhs has " + std::to_string(rhs.size()));
    if (lower.size() != n || upper.size() != n) throw DimensionError("LpProblem: bound vectors do not match the variable count");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
        throw InvalidArgument("LpProblem: inconsistent bounds on variable " + std::to_string(j));
      if (!std::isfinite(cost[j])) throw InvalidArgument("LpProblem: non-finite cost on variable " + std::to_string(j));
    }
    if (!rhs.allFinite()) throw InvalidArgument("LpProblem: non-finite right-hand side");
  }

  /// Removes rows that are structurally empty and have a zero right-hand side.
  void drop_empty_rows(double tol = 0.0) {
    std::vector<int> nnz(static_cast<std::size_t>(A.rows()), 0);
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it)
        if (it.value() != 0.0) ++nnz[static_cast<std::size_t>(it.row())];
    std::vector<int> remap(nnz.size(), -1);
    int kept = 0;
    for (std::size_t i = 0; i < nnz.size(); ++i)
      if (nnz[i] > 0 || std::abs(rhs[static_cast<Eigen::Index>(i)]) > tol) remap[i] = kept++;
    if (kept == A.rows()) return;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(A.nonZeros()));
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it)
        if (remap[static_cast<std::size_t>(it.row())] >= 0) trip.emplace_back(remap[static_cast<std::size_t>(it.row())], it.col(), it.value());
    Eigen::VectorXd b(kept);
    for (std::size_t i = 0; i < nnz.size(); ++i)
      if (remap[i] >= 0) b[remap[i]] = rhs[static_cast<Eigen::Index>(i)];
    SparseMatrix a(kept, A.cols());
    a.setFromTriplets(trip.begin(), trip.end());
    A = std::move(a);
    rhs = std::move(b);
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

[[nodiscard]] inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    case LpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

enum class VarState : std::int8_t { Basic, AtLower, AtUpper, FreeZero };

/// A simplex basis that can seed a later solve of a problem with the same shape.
/// head[i] < num_vars is a structural column; head[i] = num_vars + r is the
/// artificial of row r.
struct LpBasis {
  int num_vars = 0;
  int num_rows = 0;
  std::vector<int> head;
  std::vector<VarState> state;  ///< structural variables only

  [[nodiscard]] bool empty() const { return head.empty(); }
};

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  Eigen::VectorXd x;  ///< defined iff Optimal
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  int phase1_iterations = 0;
  bool warm_started = false;
  LpBasis basis;
  std::string message;

  [[nodiscard]] bool optimal() const { return status == LpStatus::Optimal; }
};

struct LpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 100;
  int max_iterations = 0;   ///< 0: 50 * (rows + cols) + 1000
  int bland_threshold = 0;  ///< consecutive degenerate pivots before Bland's rule; 0: 50 * rows
  const LpBasis* warm_start = nullptr;
};

namespace detail {

class RevisedSimplex {
 public:
  RevisedSimplex(const LpProblem& p, const LpOptions& opt)
      : p_(p), opt_(opt), n_(p.num_vars()), m_(p.num_rows()), total_(n_ + m_) {
    lo_.resize(total_);
    hi_.resize(total_);
    x_.setZero(total_);
    cost_.setZero(total_);
    state_.assign(static_cast<std::size_t>(total_), VarState::AtLower);
    pos_.assign(static_cast<std::size_t>(total_), -1);
    art_sign_.assign(static_cast<std::size_t>(m_), 1.0);
    lo_.head(n_) = p.lower;
    hi_.head(n_) = p.upper;
    max_iter_ = opt.max_iterations > 0 ? opt.max_iterations : 50 * (m_ + n_) + 1000;
    bland_after_ = opt.bland_threshold > 0 ? opt.bland_threshold : std::max(50 * m_, 50);
    b_scale_ = 1.0 + (m_ > 0 ? p.rhs.cwiseAbs().maxCoeff() : 0.0);
  }

  LpSolution run() {
    LpSolution sol;
    if (m_ == 0) return solve_without_rows();

    bool warm = opt_.warm_start != nullptr && try_warm_start(*opt_.warm_start);
    sol.warm_started = warm;
    if (!warm) {
      cold_start();
      const auto s1 = iterate(/*phase=*/1);
      sol.phase1_iterations = iterations_;
      if (s1 != LpStatus::Optimal) return fail(s1, "phase 1 did not finish");
      double infeas = 0.0;
      for (int i = 0; i < m_; ++i) infeas += x_[n_ + i];
      if (infeas > opt_.feas_tol * b_scale_) {
        LpSolution out;
        out.status = LpStatus::Infeasible;
        out.iterations = iterations_;
        out.phase1_iterations = iterations_;
        out.message = "phase-1 optimum " + std::to_string(infeas);
        return out;
      }
      enter_phase2();
    }

    for (int attempt = 0; attempt < 3; ++attempt) {
      const auto s2 = iterate(/*phase=*/2);
      if (s2 != LpStatus::Optimal) return fail(s2, "phase 2 did not finish");
      if (!refactor()) return fail(LpStatus::NumericalFailure, "basis singular at final refactorisation");
      recompute_basic_values();
      if (!primal_feasible()) {
        if (attempt == 2) return fail(LpStatus::NumericalFailure, "primal infeasible after refactorisation");
        continue;
      }
      if (price(2).first < 0) break;  // still optimal with the fresh factorisation
      if (attempt == 2) return fail(LpStatus::NumericalFailure, "optimality lost after refactorisation");
    }

    sol.status = LpStatus::Optimal;
    sol.x = x_.head(n_);
    for (int j = 0; j < n_; ++j) sol.x[j] = std::clamp(sol.x[j], lo_[j], hi_[j]);
    sol.objective = p_.cost.dot(sol.x);
    sol.iterations = iterations_;
    sol.basis = export_basis();
    const Eigen::VectorXd resid = p_.A * sol.x - p_.rhs;
    if (resid.size() > 0 && resid.cwiseAbs().maxCoeff() > opt_.feas_tol * b_scale_)
      return fail(LpStatus::NumericalFailure, "equality residual above tolerance");
    return sol;
  }

 private:
  struct Eta {
    int row = 0;
    double pivot = 1.0;
    std::vector<int> idx;
    std::vector<double> val;
  };

  LpSolution solve_without_rows() {
    LpSolution sol;
    sol.x.resize(n_);
    for (int j = 0; j < n_; ++j) {
      const double c = p_.cost[j];
      double v;
      if (c > 0.0) v = lo_[j];
      else if (c < 0.0) v = hi_[j];
      else v = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
      if (!std::isfinite(v)) {
        sol.status = LpStatus::Unbounded;
        sol.message = "variable " + std::to_string(j) + " unbounded with no constraints";
        return sol;
      }
      sol.x[j] = v;
    }
    sol.status = LpStatus::Optimal;
    sol.objective = p_.cost.dot(sol.x);
    sol.basis.num_vars = n_;
    return sol;
  }

  LpSolution fail(LpStatus s, std::string msg) const {
    LpSolution out;
    out.status = s;
    out.iterations = iterations_;
    out.message = std::move(msg);
    return out;
  }

  void place_nonbasic(int j) {
    if (std::isfinite(lo_[j])) {
      state_[static_cast<std::size_t>(j)] = VarState::AtLower;
      x_[j] = lo_[j];
    } else if (std::isfinite(hi_[j])) {
      state_[static_cast<std::size_t>(j)] = VarState::AtUpper;
      x_[j] = hi_[j];
    } else {
      state_[static_cast<std::size_t>(j)] = VarState::FreeZero;
      x_[j] = 0.0;
    }
  }

  void cold_start() {
    for (int j = 0; j < n_; ++j) place_nonbasic(j);
    Eigen::VectorXd r = p_.rhs;
    for (int j = 0; j < n_; ++j) {
      if (x_[j] == 0.0) continue;
      for (SparseMatrix::InnerIterator it(p_.A, j); it; ++it) r[it.row()] -= it.value() * x_[j];
    }
    head_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      const int a = n_ + i;
      art_sign_[static_cast<std::size_t>(i)] = r[i] >= 0.0 ? 1.0 : -1.0;
      lo_[a] = 0.0;
      hi_[a] = kInf;
      x_[a] = std::abs(r[i]);
      state_[static_cast<std::size_t>(a)] = VarState::Basic;
      head_[static_cast<std::size_t>(i)] = a;
      pos_[static_cast<std::size_t>(a)] = i;
    }
    cost_.setZero();
    cost_.tail(m_).setOnes();
    refactor();
  }

  bool try_warm_start(const LpBasis& basis) {
    if (basis.num_vars != n_ || basis.num_rows != m_ || static_cast<int>(basis.head.size()) != m_ ||
        static_cast<int>(basis.state.size()) != n_)
      return false;
    std::vector<char> seen(static_cast<std::size_t>(total_), 0);
    for (int v : basis.head) {
      if (v < 0 || v >= total_ || seen[static_cast<std::size_t>(v)]) return false;
      seen[static_cast<std::size_t>(v)] = 1;
    }
    std::fill(pos_.begin(), pos_.end(), -1);
    for (int i = 0; i < m_; ++i) {
      const int a = n_ + i;
      art_sign_[static_cast<std::size_t>(i)] = 1.0;
      lo_[a] = 0.0;
      hi_[a] = 0.0;
      x_[a] = 0.0;
      state_[static_cast<std::size_t>(a)] = VarState::AtLower;
    }
    for (int j = 0; j < n_; ++j) {
      const VarState s = basis.state[static_cast<std::size_t>(j)];
      if (s == VarState::AtLower && std::isfinite(lo_[j])) {
        x_[j] = lo_[j];
        state_[static_cast<std::size_t>(j)] = s;
      } else if (s == VarState::AtUpper && std::isfinite(hi_[j])) {
        x_[j] = hi_[j];
        state_[static_cast<std::size_t>(j)] = s;
      } else {
        place_nonbasic(j);
      }
    }
    head_ = basis.head;
    for (int i = 0; i < m_; ++i) {
      const int v = head_[static_cast<std::size_t>(i)];
      state_[static_cast<std::size_t>(v)] = VarState::Basic;
      pos_[static_cast<std::size_t>(v)] = i;
    }
    if (!refactor()) return false;
    recompute_basic_values();
    if (!primal_feasible()) return false;
    cost_.setZero();
    cost_.head(n_) = p_.cost;
    return true;
  }

  void enter_phase2() {
    for (int i = 0; i < m_; ++i) {
      const int a = n_ + i;
      hi_[a] = 0.0;
      if (state_[static_cast<std::size_t>(a)] != VarState::Basic) x_[a] = 0.0;
    }
    cost_.setZero();
    cost_.head(n_) = p_.cost;
    degenerate_run_ = 0;
  }

  [[nodiscard]] bool primal_feasible() const {
    const double tol = opt_.feas_tol * b_scale_;
    for (int v : head_) {
      if (x_[v] < lo_[v] - tol || x_[v] > hi_[v] + tol) return false;
    }
    return true;
  }

  // Column of the extended matrix [A | diag(art_sign)] as a dense vector.
  void load_column(int j, Eigen::VectorXd& out) const {
    out.setZero(m_);
    if (j < n_) {
      for (SparseMatrix::InnerIterator it(p_.A, j); it; ++it) out[it.row()] = it.value();
    } else {
      out[j - n_] = art_sign_[static_cast<std::size_t>(j - n_)];
    }
  }

  bool refactor() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m_) * 8);
    for (int k = 0; k < m_; ++k) {
      const int j = head_[static_cast<std::size_t>(k)];
      if (j < n_) {
        for (SparseMatrix::InnerIterator it(p_.A, j); it; ++it)
          if (it.value() != 0.0) trip.emplace_back(it.row(), k, it.value());
      } else {
        trip.emplace_back(j - n_, k, art_sign_[static_cast<std::size_t>(j - n_)]);
      }
    }
    SparseMatrix basis(m_, m_);
    basis.setFromTriplets(trip.begin(), trip.end());
    basis.makeCompressed();
    lu_.compute(basis);
    etas_.clear();
    factor_ok_ = lu_.info() == Eigen::Success;
    return factor_ok_;
  }

  void ftran(Eigen::VectorXd& v) const {
    v = lu_.solve(v).eval();
    for (const Eta& e : etas_) {
      const double zr = v[e.row] / e.pivot;
      if (zr != 0.0)
        for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * zr;
      v[e.row] = zr;
    }
  }

  void btran(Eigen::VectorXd& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->row];
      for (std::size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * v[it->idx[k]];
      v[it->row] = s / it->pivot;
    }
    v = lu_.transpose().solve(v).eval();
  }

  void recompute_basic_values() {
    Eigen::VectorXd r = p_.rhs;
    for (int j = 0; j < n_; ++j) {
      if (state_[static_cast<std::size_t>(j)] == VarState::Basic || x_[j] == 0.0) continue;
      for (SparseMatrix::InnerIterator it(p_.A, j); it; ++it) r[it.row()] -= it.value() * x_[j];
    }
    ftran(r);
    for (int k = 0; k < m_; ++k) x_[head_[static_cast<std::size_t>(k)]] = r[k];
  }

  [[nodiscard]] bool can_enter(int j) const {
    if (j >= n_) return false;  // artificials never re-enter
    return state_[static_cast<std::size_t>(j)] != VarState::Basic && lo_[j] < hi_[j];
  }

  // Returns (entering index or -1, direction).
  std::pair<int, int> price(int /*phase*/) {
    Eigen::VectorXd y(m_);
    for (int k = 0; k < m_; ++k) y[k] = cost_[head_[static_cast<std::size_t>(k)]];
    btran(y);
    y_ = y;
    int best = -1;
    int best_dir = 0;
    double best_score = 0.0;
    const double tol = opt_.opt_tol;
    for (int j = 0; j < n_; ++j) {
      if (!can_enter(j)) continue;
      double d = cost_[j];
      for (SparseMatrix::InnerIterator it(p_.A, j); it; ++it) d -= it.value() * y[it.row()];
      int dir = 0;
      switch (state_[static_cast<std::size_t>(j)]) {
        case VarState::AtLower: if (d < -tol) dir = 1; break;
        case VarState::AtUpper: if (d > tol) dir = -1; break;
        case VarState::FreeZero: if (std::abs(d) > tol) dir = d < 0.0 ? 1 : -1; break;
        case VarState::Basic: break;
      }
      if (dir == 0) continue;
      if (bland_) return {j, dir};
      const double score = std::abs(d);
      if (score > best_score) {
        best_score = score;
        best = j;
        best_dir = dir;
      }
    }
    return {best, best_dir};
  }

  LpStatus iterate(int phase) {
    Eigen::VectorXd alpha(m_);
    bland_ = false;
    degenerate_run_ = 0;
    while (true) {
      if (iterations_ >= max_iter_) return LpStatus::IterationLimit;
      if (!factor_ok_) return LpStatus::NumericalFailure;
      const auto [q, dir] = price(phase);
      if (q < 0) return LpStatus::Optimal;

      load_column(q, alpha);
      ftran(alpha);

      // Harris two-pass ratio test on x_B(t) = x_B - dir * t * alpha.
      const double tol = opt_.feas_tol;
      double theta_max = kInf;
      for (int k = 0; k < m_; ++k) {
        const double rate = -dir * alpha[k];
        if (std::abs(alpha[k]) <= opt_.pivot_tol) continue;
        const int v = head_[static_cast<std::size_t>(k)];
        if (rate < 0.0 && std::isfinite(lo_[v])) theta_max = std::min(theta_max, (x_[v] - lo_[v] + tol) / -rate);
        else if (rate > 0.0 && std::isfinite(hi_[v])) theta_max = std::min(theta_max, (hi_[v] - x_[v] + tol) / rate);
      }
      int leave = -1;
      double theta = kInf;
      double best_pivot = 0.0;
      if (std::isfinite(theta_max)) {
        for (int k = 0; k < m_; ++k) {
          const double rate = -dir * alpha[k];
          if (std::abs(alpha[k]) <= opt_.pivot_tol) continue;
          const int v = head_[static_cast<std::size_t>(k)];
          double ratio = kInf;
          if (rate < 0.0 && std::isfinite(lo_[v])) ratio = (x_[v] - lo_[v]) / -rate;
          else if (rate > 0.0 && std::isfinite(hi_[v])) ratio = (hi_[v] - x_[v]) / rate;
          if (ratio > theta_max) continue;
          ratio = std::max(ratio, 0.0);
          if (bland_) {
            if (leave < 0 || ratio < theta - 1e-12 ||
                (ratio <= theta + 1e-12 && v < head_[static_cast<std::size_t>(leave)])) {
              leave = k;
              theta = ratio;
            }
          } else if (std::abs(alpha[k]) > best_pivot) {
            best_pivot = std::abs(alpha[k]);
            leave = k;
            theta = ratio;
          }
        }
      }

      const double span = hi_[q] - lo_[q];
      const bool flip = std::isfinite(span) && span <= theta;
      if (leave < 0 && !flip) return phase == 1 ? LpStatus::NumericalFailure : LpStatus::Unbounded;
      if (flip) theta = span;

      // Update primal values.
      x_[q] += dir * theta;
      if (theta != 0.0)
        for (int k = 0; k < m_; ++k) x_[head_[static_cast<std::size_t>(k)]] -= dir * theta * alpha[k];
      ++iterations_;

      if (theta <= 1e-12) {
        if (++degenerate_run_ >= bland_after_) bland_ = true;
      } else {
        degenerate_run_ = 0;
        bland_ = false;
      }

      if (flip) {
        state_[static_cast<std::size_t>(q)] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }

      const int out = head_[static_cast<std::size_t>(leave)];
      const double rate = -dir * alpha[leave];
      if (rate < 0.0) {
        x_[out] = lo_[out];
        state_[static_cast<std::size_t>(out)] = VarState::AtLower;
      } else {
        x_[out] = hi_[out];
        state_[static_cast<std::size_t>(out)] = VarState::AtUpper;
      }
      if (out >= n_) {  // dropped artificial
        lo_[out] = hi_[out] = x_[out] = 0.0;
        state_[static_cast<std::size_t>(out)] = VarState::AtLower;
      }
      pos_[static_cast<std::size_t>(out)] = -1;
      head_[static_cast<std::size_t>(leave)] = q;
      pos_[static_cast<std::size_t>(q)] = leave;
      state_[static_cast<std::size_t>(q)] = VarState::Basic;

      Eta eta;
      eta.row = leave;
      eta.pivot = alpha[leave];
      for (int k = 0; k < m_; ++k)
        if (k != leave && alpha[k] != 0.0) {
          eta.idx.push_back(k);
          eta.val.push_back(alpha[k]);
        }
      etas_.push_back(std::move(eta));

      if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
        if (!refactor()) return LpStatus::NumericalFailure;
        recompute_basic_values();
      }
    }
  }

  [[nodiscard]] LpBasis export_basis() const {
    LpBasis b;
    b.num_vars = n_;
    b.num_rows = m_;
    b.head = head_;
    b.state.assign(state_.begin(), state_.begin() + n_);
    return b;
  }

  const LpProblem& p_;
  LpOptions opt_;
  int n_, m_, total_;
  Eigen::VectorXd lo_, hi_, x_, cost_, y_;
  std::vector<VarState> state_;
  std::vector<int> head_, pos_;
  std::vector<double> art_sign_;
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  bool factor_ok_ = false;
  bool bland_ = false;
  int degenerate_run_ = 0;
  int iterations_ = 0;
  int max_iter_ = 0;
  int bland_after_ = 0;
  double b_scale_ = 1.0;
};

}  // namespace detail

/// Solves an equality-form LP with per-variable bounds.
[[nodiscard]] inline LpSolution lp_solve(const LpProblem& problem, const LpOptions& options = {}) {
  problem.validate();
  detail::RevisedSimplex simplex(problem, options);
  return simplex.run();
}

/// Writes a plain-text, fixed-column dump: objective, equality rows, bounds.
inline void write_lp_dump(std::ostream& os, const LpProblem& p) {
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << "LPDUMP " << std::setw(10) << p.num_rows() << ' ' << std::setw(10) << p.num_vars() << '\n';
  os << std::scientific << std::setprecision(17);
  os << "OBJECTIVE\n";
  for (int j = 0; j < p.num_vars(); ++j)
    if (p.cost[j] != 0.0) os << "  " << std::setw(10) << j << ' ' << std::setw(25) << p.cost[j] << '\n';
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> ar = p.A;
  for (int i = 0; i < p.num_rows(); ++i) {
    os << "ROW " << std::setw(10) << i << " RHS " << std::setw(25) << p.rhs[i] << '\n';
    for (Eigen::SparseMatrix<double, Eigen::RowMajor, int>::InnerIterator it(ar, i); it; ++it)
      os << "  " << std::setw(10) << it.col() << ' ' << std::setw(25) << it.value() << '\n';
  }
  os << "BOUNDS\n";
  for (int j = 0; j < p.num_vars(); ++j)
    os << "  " << std::setw(10) << j << ' ' << std::setw(25) << p.lower[j] << ' ' << std::setw(25) << p.upper[j] << '\n';
  os << "END\n";
  os.flags(old_flags);
  os.precision(old_prec);
}

[[nodiscard]] inline LpProblem read_lp_dump(std::istream& is) {
  auto parse_double = [](const std::string& tok) {
    if (tok == "inf") return kInf;
    if (tok == "-inf") return -kInf;
    return std::stod(tok);
  };
  std::string tag;
  int m = 0, n = 0;
  if (!(is >> tag >> m >> n) || tag != "LPDUMP") throw IoError("read_lp_dump: missing LPDUMP header");
  LpProblem p;
  p.cost.setZero(n);
  p.rhs.setZero(m);
  p.lower.setZero(n);
  p.upper.setZero(n);
  std::vector<Eigen::Triplet<double>> trip;
  std::string section;
  int row = -1;
  std::string tok;
  while (is >> tok) {
    if (tok == "END") break;
    if (tok == "OBJECTIVE" || tok == "BOUNDS") {
      section = tok;
      continue;
    }
    if (tok == "ROW") {
      std::string rhs_tag, rhs_val;
      is >> row >> rhs_tag >> rhs_val;
      p.rhs[row] = parse_double(rhs_val);
      section = "ROW";
      continue;
    }
    const int j = std::stoi(tok);
    std::string v1;
    is >> v1;
    if (section == "OBJECTIVE") {
      p.cost[j] = parse_double(v1);
    } else if (section == "ROW") {
      trip.emplace_back(row, j, parse_double(v1));
    } else if (section == "BOUNDS") {
      std::string v2;
      is >> v2;
      p.lower[j] = parse_double(v1);
      p.upper[j] = parse_double(v2);
    } else {
      throw IoError("read_lp_dump: entry outside of a section");
    }
  }
  p.A.resize(m, n);
  p.A.setFromTriplets(trip.begin(), trip.end());
  return p;
}

}  // namespace ddslp
