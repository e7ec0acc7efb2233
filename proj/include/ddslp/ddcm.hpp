#pragma once
// Fixed-point distance-minimising data-driven solver.
//
// Member cost, with C = c (bars) or C = diag(D) (Gauss points):
//   F_e = w_e [ 1/2 (eps - eps*)^T C (eps - eps*) + 1/2 (sig - sig*)^T C^-1 (sig - sig*) ]
// The projection onto compatible and equilibrated states for fixed centres
// (eps*, sig*) is
//   K U   = sum_e w_e B_e^T C eps*_e
//   K eta = p - sum_e w_e B_e^T sig*_e
//   eps_e = B_e U,   sig_e = sig*_e + C B_e eta,    K = sum_e w_e B_e^T C B_e.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ddslp/error.hpp"
#include "ddslp/model.hpp"
#include "ddslp/nn.hpp"
#include "ddslp/parallel.hpp"
#include "ddslp/phase.hpp"

namespace ddslp {

/// Projected state; eta is the equilibrium multiplier.
struct ProjectedState {
  Eigen::VectorXd u;
  Eigen::VectorXd eta;
  Eigen::VectorXd strain;
  Eigen::VectorXd stress;
};

namespace detail {

inline Eigen::MatrixXd metric_block(const ScalingMatrix& c, int dim) {
  if (c.diag.size() != dim) throw DimensionError("scaling dimension does not match member dimension");
  if (!c.valid()) throw InvalidArgument("scaling entries must be positive");
  return c.diag.asDiagonal();
}

}  // namespace detail

/// Projection of member centres onto the constraint set. Centres are stacked
/// member-major (length m*d).
[[nodiscard]] inline ProjectedState ddcm_project(const MemberOperators& ops, const Eigen::VectorXd& eps_c,
                                                 const Eigen::VectorXd& sig_c, const ScalingMatrix& c) {
  ops.validate();
  if (eps_c.size() != ops.strain_size() || sig_c.size() != ops.strain_size())
    throw DimensionError("ddcm_project: centre vectors must have length m*d");
  const Eigen::MatrixXd cm = detail::metric_block(c, ops.dim);
  const SpdSolver k(ops.stiffness(cm));
  Eigen::VectorXd ce(eps_c.size());
  for (int e = 0; e < ops.num_members; ++e) ce.segment(e * ops.dim, ops.dim) = cm * eps_c.segment(e * ops.dim, ops.dim);

  ProjectedState s;
  s.u = k.solve(ops.internal_force(ce));
  s.eta = k.solve(ops.load - ops.internal_force(sig_c));
  s.strain = ops.B * s.u;
  const Eigen::VectorXd beta = ops.B * s.eta;
  s.stress = sig_c;
  for (int e = 0; e < ops.num_members; ++e) s.stress.segment(e * ops.dim, ops.dim) += cm * beta.segment(e * ops.dim, ops.dim);
  return s;
}

/// sum_e F_e for a state against per-member data rows.
[[nodiscard]] inline double ddcm_objective(const MemberOperators& ops, const DataSet& ds, const ScalingMatrix& c,
                                           const Eigen::VectorXd& strain, const Eigen::VectorXd& stress,
                                           const std::vector<int>& assignment) {
  const int d = ops.dim;
  double f = 0.0;
  for (int e = 0; e < ops.num_members; ++e) {
    const int j = assignment[static_cast<std::size_t>(e)];
    const Eigen::VectorXd de = strain.segment(e * d, d) - ds.strain(j).transpose();
    const Eigen::VectorXd dsg = stress.segment(e * d, d) - ds.stress(j).transpose();
    f += 0.5 * ops.weight[e] * (de.cwiseAbs2().dot(c.diag) + dsg.cwiseAbs2().dot(c.diag.cwiseInverse()));
  }
  return f;
}

struct DdcmOptions {
  int max_sweeps = 500;
  /// Overrides the metric; by default the median |sig/eps| of the dataset.
  std::optional<ScalingMatrix> scaling;
  /// Search backend for the assignment step.
  NnOptions nn;
  int jobs = 1;
};

struct DdcmResult {
  Eigen::VectorXd u;
  Eigen::VectorXd strain;
  Eigen::VectorXd stress;
  std::vector<int> assignment;  ///< dataset row per member
  std::vector<double> objective_history;
  ScalingMatrix scaling;
  int sweeps = 0;
  bool converged = false;
};

/// Alternates projection and nearest-data assignment until the assignment is
/// stationary. On hitting max_sweeps the lowest-objective state is returned
/// with converged = false.
[[nodiscard]] inline DdcmResult ddcm_solve(const MemberOperators& ops, const DataSet& ds, const DdcmOptions& opt = {},
                                           const std::vector<int>* init = nullptr) {
  ops.validate();
  if (ds.empty()) throw EmptyInputError("ddcm_solve: empty dataset");
  if (ds.dim() != ops.dim) throw DimensionError("ddcm_solve: dataset dimension does not match the model");
  const int m = ops.num_members, d = ops.dim;

  DdcmResult out;
  out.scaling = opt.scaling ? *opt.scaling : estimate_scaling(ds);
  detail::metric_block(out.scaling, d);

  // Nearest-point search in the metric above: scale strain by sqrt(C) and
  // stress by 1/sqrt(C).
  NnOptions nopt = opt.nn;
  nopt.coord_scale.resize(2 * d);
  nopt.coord_scale << out.scaling.diag.cwiseSqrt(), out.scaling.diag.cwiseSqrt().cwiseInverse();
  const NnIndex index(ds, nopt);
  auto nearest = [&](const Eigen::VectorXd& eps, const Eigen::VectorXd& sig) {
    Eigen::VectorXd q(2 * d);
    q << eps, sig;
    return index.query(q);
  };

  std::vector<int> assign(static_cast<std::size_t>(m));
  if (init) {
    if (static_cast<int>(init->size()) != m) throw DimensionError("ddcm_solve: initial assignment length mismatch");
    for (int j : *init)
      if (j < 0 || j >= ds.size()) throw InvalidArgument("ddcm_solve: initial assignment index out of range");
    assign = *init;
  } else {
    std::fill(assign.begin(), assign.end(), nearest(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)));
  }

  Eigen::VectorXd eps_c(m * d), sig_c(m * d);
  double best = std::numeric_limits<double>::infinity();
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    for (int e = 0; e < m; ++e) {
      eps_c.segment(e * d, d) = ds.strain(assign[static_cast<std::size_t>(e)]).transpose();
      sig_c.segment(e * d, d) = ds.stress(assign[static_cast<std::size_t>(e)]).transpose();
    }
    const ProjectedState s = ddcm_project(ops, eps_c, sig_c, out.scaling);
    const double f = ddcm_objective(ops, ds, out.scaling, s.strain, s.stress, assign);
    out.objective_history.push_back(f);
    out.sweeps = sweep;
    if (f < best || out.assignment.empty()) {
      best = f;
      out.u = s.u;
      out.strain = s.strain;
      out.stress = s.stress;
      out.assignment = assign;
    }

    std::vector<int> next(static_cast<std::size_t>(m));
    parallel_for(m, opt.jobs, [&](int e) {
      next[static_cast<std::size_t>(e)] = nearest(s.strain.segment(e * d, d), s.stress.segment(e * d, d));
    });
    // keep the current point when it is as close as the new one
    for (int e = 0; e < m; ++e) {
      auto& nx = next[static_cast<std::size_t>(e)];
      const int cur = assign[static_cast<std::size_t>(e)];
      if (nx == cur) continue;
      auto cost = [&](int j) {
        const Eigen::VectorXd de = s.strain.segment(e * d, d) - ds.strain(j).transpose();
        const Eigen::VectorXd dsg = s.stress.segment(e * d, d) - ds.stress(j).transpose();
        return de.cwiseAbs2().dot(out.scaling.diag) + dsg.cwiseAbs2().dot(out.scaling.diag.cwiseInverse());
      };
      if (!(cost(nx) < cost(cur))) nx = cur;
    }
    if (next == assign) {
      out.converged = true;
      out.u = s.u;
      out.strain = s.strain;
      out.stress = s.stress;
      out.assignment = assign;
      return out;
    }
    assign = std::move(next);
  }
  return out;
}

}  // namespace ddslp
