#pragma once
// Pin-jointed trusses in 2-D or 3-D: geometry, member operators, builtin
// examples and a Newton-Raphson reference solver for scalar material laws.
//
// Global dof of node i, component c is i * dim + c.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ddslp/error.hpp"
#include "ddslp/model.hpp"

namespace ddslp {

struct Bar {
  int a = 0;
  int b = 0;
  double area = 1.0;
};

struct TrussModel {
  int dim = 2;
  std::vector<Eigen::Vector3d> nodes;  ///< z ignored when dim == 2
  std::vector<Bar> bars;
  std::vector<int> fixed_dofs;
  std::map<int, double> loads;  ///< global dof -> nodal force

  [[nodiscard]] int num_global_dofs() const { return static_cast<int>(nodes.size()) * dim; }

  [[nodiscard]] std::vector<int> free_dofs() const {
    std::vector<char> fixed(static_cast<std::size_t>(num_global_dofs()), 0);
    for (int g : fixed_dofs)
      if (g >= 0 && g < num_global_dofs()) fixed[static_cast<std::size_t>(g)] = 1;
    std::vector<int> out;
    for (int g = 0; g < num_global_dofs(); ++g)
      if (!fixed[static_cast<std::size_t>(g)]) out.push_back(g);
    return out;
  }

  /// Position of a global dof among the free dofs, or -1 if fixed.
  [[nodiscard]] int free_index(int global) const {
    const auto f = free_dofs();
    const auto it = std::lower_bound(f.begin(), f.end(), global);
    return it != f.end() && *it == global ? static_cast<int>(it - f.begin()) : -1;
  }

  [[nodiscard]] double length(int e) const {
    const Bar& bar = bars[static_cast<std::size_t>(e)];
    return (nodes[static_cast<std::size_t>(bar.b)] - nodes[static_cast<std::size_t>(bar.a)]).head(dim).norm();
  }

  void validate() const {
    if (dim != 2 && dim != 3) throw GeometryError("truss: dim must be 2 or 3");
    if (bars.empty()) throw GeometryError("truss: no bars");
    const int nn = static_cast<int>(nodes.size());
    for (std::size_t e = 0; e < bars.size(); ++e) {
      const Bar& bar = bars[e];
      if (bar.a < 0 || bar.a >= nn || bar.b < 0 || bar.b >= nn)
        throw GeometryError("truss: bar " + std::to_string(e) + " references a missing node");
      if (!(bar.area > 0.0)) throw GeometryError("truss: bar " + std::to_string(e) + " has non-positive area");
      if (!(length(static_cast<int>(e)) > 0.0)) throw GeometryError("truss: bar " + std::to_string(e) + " has zero length");
    }
    for (int g : fixed_dofs)
      if (g < 0 || g >= num_global_dofs()) throw InvalidArgument("truss: fixed dof " + std::to_string(g) + " out of range");
    for (const auto& [g, v] : loads) {
      if (g < 0 || g >= num_global_dofs()) throw InvalidArgument("truss: load dof " + std::to_string(g) + " out of range");
      if (!std::isfinite(v)) throw InvalidArgument("truss: non-finite load");
    }
  }
};

/// Director-cosine operators restricted to the free dofs; w_e = A_e l_e.
[[nodiscard]] inline MemberOperators build_operators(const TrussModel& t) {
  t.validate();
  const auto free = t.free_dofs();
  std::vector<int> map(static_cast<std::size_t>(t.num_global_dofs()), -1);
  for (std::size_t k = 0; k < free.size(); ++k) map[static_cast<std::size_t>(free[k])] = static_cast<int>(k);

  MemberOperators ops;
  ops.dim = 1;
  ops.num_dofs = static_cast<int>(free.size());
  ops.num_members = static_cast<int>(t.bars.size());
  ops.weight.resize(ops.num_members);
  ops.load.setZero(ops.num_dofs);
  ops.free_to_global = free;
  std::vector<Eigen::Triplet<double>> trip;
  for (int e = 0; e < ops.num_members; ++e) {
    const Bar& bar = t.bars[static_cast<std::size_t>(e)];
    const double l = t.length(e);
    const Eigen::VectorXd dir = (t.nodes[static_cast<std::size_t>(bar.b)] - t.nodes[static_cast<std::size_t>(bar.a)]).head(t.dim) / l;
    for (int c = 0; c < t.dim; ++c) {
      const int ga = map[static_cast<std::size_t>(bar.a * t.dim + c)];
      const int gb = map[static_cast<std::size_t>(bar.b * t.dim + c)];
      if (dir[c] == 0.0) continue;
      if (ga >= 0) trip.emplace_back(e, ga, -dir[c] / l);
      if (gb >= 0) trip.emplace_back(e, gb, dir[c] / l);
    }
    ops.weight[e] = bar.area * l;
  }
  ops.B.resize(ops.num_members, ops.num_dofs);
  ops.B.setFromTriplets(trip.begin(), trip.end());
  for (const auto& [g, v] : t.loads) {
    const int k = map[static_cast<std::size_t>(g)];
    if (k >= 0) ops.load[k] += v;
  }
  return ops;
}

// ---------------------------------------------------------------------------
// Scalar material laws for the reference solver

struct ScalarLaw {
  std::string name;
  std::function<double(double)> stress;
  std::function<double(double)> tangent;

  static ScalarLaw linear(double young) {
    return {"linear", [young](double e) { return young * e; }, [young](double) { return young; }};
  }
  static ScalarLaw cube_root() {
    return {"cuberoot", [](double e) { return std::cbrt(e); },
            [](double e) { return 1.0 / (3.0 * std::cbrt(e) * std::cbrt(e)); }};
  }
};

inline constexpr double kTangentCap = 1e6;
inline constexpr double kSecantStrain = 1e-9;

struct NewtonOptions {
  int max_iterations = 200;
  double rel_tol = 1e-10;  ///< residual <= rel_tol * (1 + |p|_inf)
  int max_halvings = 30;
};

struct ReferenceSolution {
  Eigen::VectorXd u;
  Eigen::VectorXd strain;
  Eigen::VectorXd stress;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
};

namespace detail {

inline double regularized_tangent(const ScalarLaw& law, double e) {
  double kt;
  if (std::abs(e) < kSecantStrain) kt = e != 0.0 ? law.stress(e) / e : kTangentCap;
  else kt = law.tangent(e);
  if (!std::isfinite(kt) || kt > kTangentCap) kt = kTangentCap;
  return kt;
}

}  // namespace detail

/// Newton-Raphson with backtracking on sum_e w_e B_e^T sig(B_e U) = p.
[[nodiscard]] inline ReferenceSolution reference_solve(const MemberOperators& ops, const ScalarLaw& law,
                                                       const NewtonOptions& opt = {}) {
  ops.validate();
  if (ops.dim != 1) throw DimensionError("reference_solve: scalar law needs 1-D members");
  const double tol = opt.rel_tol * (1.0 + (ops.num_dofs > 0 ? ops.load.cwiseAbs().maxCoeff() : 0.0));

  auto stresses = [&](const Eigen::VectorXd& eps) {
    Eigen::VectorXd s(eps.size());
    for (Eigen::Index e = 0; e < eps.size(); ++e) s[e] = law.stress(eps[e]);
    return s;
  };
  auto residual = [&](const Eigen::VectorXd& u) { return Eigen::VectorXd(ops.internal_force(stresses(ops.B * u)) - ops.load); };

  ReferenceSolution out;
  // start from the linear solve with the secant modulus at unit strain
  double e0 = law.stress(1.0);
  if (!std::isfinite(e0) || e0 <= 0.0) e0 = 1.0;
  out.u = SpdSolver(ops.stiffness(Eigen::MatrixXd::Constant(1, 1, e0))).solve(ops.load);
  Eigen::VectorXd r = residual(out.u);
  double rnorm = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
  out.history.push_back(rnorm);
  std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(ops.num_members), Eigen::MatrixXd(1, 1));
  while (rnorm > tol) {
    if (out.iterations >= opt.max_iterations)
      throw ConvergenceError("reference_solve: no convergence after " + std::to_string(opt.max_iterations) +
                                 " iterations, residual " + std::to_string(rnorm),
                             out.history);
    const Eigen::VectorXd eps = ops.B * out.u;
    for (int e = 0; e < ops.num_members; ++e) blocks[static_cast<std::size_t>(e)](0, 0) = detail::regularized_tangent(law, eps[e]);
    const Eigen::VectorXd du = SpdSolver(ops.stiffness(blocks)).solve(-r);
    double step = 1.0;
    Eigen::VectorXd trial = out.u + du;
    Eigen::VectorXd rt = residual(trial);
    double tnorm = rt.cwiseAbs().maxCoeff();
    for (int h = 0; h < opt.max_halvings && !(tnorm < rnorm); ++h) {
      step *= 0.5;
      trial = out.u + step * du;
      rt = residual(trial);
      tnorm = rt.cwiseAbs().maxCoeff();
    }
    out.u = trial;
    r = rt;
    rnorm = tnorm;
    ++out.iterations;
    out.history.push_back(rnorm);
  }
  out.strain = ops.B * out.u;
  out.stress = stresses(out.strain);
  out.residual = rnorm;
  return out;
}

// ---------------------------------------------------------------------------
// Builtin structures

/// Three bars meeting at a loaded node at the origin; the other ends are pinned
/// at (-1, 0), (-1, -1) and (0, -1). Load (0.5, -0.5), |p| = sqrt(2)/2.
[[nodiscard]] inline TrussModel three_bar_truss() {
  TrussModel t;
  t.dim = 2;
  t.nodes = {{0, 0, 0}, {-1, 0, 0}, {-1, -1, 0}, {0, -1, 0}};
  t.bars = {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}};
  t.fixed_dofs = {2, 3, 4, 5, 6, 7};
  t.loads = {{0, 0.5}, {1, -0.5}};
  return t;
}

/// Box-section cantilever lattice along x. Section s has four corners at
/// x = s * bay; section 0 is pinned. Every bay carries four chords and four
/// face diagonals; every free section carries a ring and one cross diagonal.
/// The tip load is eccentric so that bending, torsion and shear load every bar:
/// the total acts in -z split 0.4/0.3/0.2/0.1 over the four tip nodes, with
/// 0.3 of it in +y at tip corner 2 and 0.1 of it in +x at tip corner 0.
[[nodiscard]] inline TrussModel space_truss(int bays = 6, double tip_load = 0.2, double bay = 1.0, double width = 1.0) {
  if (bays < 1) throw InvalidArgument("space_truss: need at least one bay");
  TrussModel t;
  t.dim = 3;
  const double corner[4][2] = {{0, 0}, {width, 0}, {width, width}, {0, width}};
  for (int s = 0; s <= bays; ++s)
    for (const auto& c : corner) t.nodes.emplace_back(s * bay, c[0], c[1]);
  auto id = [](int s, int k) { return 4 * s + (k % 4); };
  for (int s = 0; s < bays; ++s) {
    for (int k = 0; k < 4; ++k) t.bars.push_back({id(s, k), id(s + 1, k), 1.0});
    for (int k = 0; k < 4; ++k) t.bars.push_back({id(s, k), id(s + 1, k + 1), 1.0});
  }
  for (int s = 1; s <= bays; ++s) {
    for (int k = 0; k < 4; ++k) t.bars.push_back({id(s, k), id(s, k + 1), 1.0});
    t.bars.push_back({id(s, s % 2), id(s, s % 2 + 2), 1.0});
  }
  for (int g = 0; g < 12; ++g) t.fixed_dofs.push_back(g);
  const double share[4] = {0.4, 0.3, 0.2, 0.1};
  for (int k = 0; k < 4; ++k) t.loads[id(bays, k) * 3 + 2] = -share[k] * tip_load;
  t.loads[id(bays, 2) * 3 + 1] = 0.3 * tip_load;
  t.loads[id(bays, 0) * 3 + 0] = 0.1 * tip_load;
  return t;
}

// ---------------------------------------------------------------------------
// JSON

[[nodiscard]] inline nlohmann::json to_json(const TrussModel& t) {
  nlohmann::json j;
  j["dim"] = t.dim;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    std::vector<double> c(n.data(), n.data() + t.dim);
    j["nodes"].push_back(c);
  }
  j["bars"] = nlohmann::json::array();
  for (const auto& b : t.bars) j["bars"].push_back({{"a", b.a}, {"b", b.b}, {"area", b.area}});
  j["fixed_dofs"] = t.fixed_dofs;
  j["loads"] = nlohmann::json::object();
  for (const auto& [g, v] : t.loads) j["loads"][std::to_string(g)] = v;
  return j;
}

[[nodiscard]] inline TrussModel truss_from_json(const nlohmann::json& j) {
  try {
    TrussModel t;
    const auto& nodes = j.at("nodes");
    if (nodes.empty()) throw GeometryError("truss json: no nodes");
    t.dim = j.contains("dim") ? j.at("dim").get<int>() : static_cast<int>(nodes.at(0).size());
    for (const auto& n : nodes) {
      if (static_cast<int>(n.size()) != t.dim) throw DimensionError("truss json: node coordinate count differs from dim");
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      for (int c = 0; c < t.dim; ++c) p[c] = n.at(static_cast<std::size_t>(c)).get<double>();
      t.nodes.push_back(p);
    }
    for (const auto& b : j.at("bars")) {
      if (b.is_array()) t.bars.push_back({b.at(0).get<int>(), b.at(1).get<int>(), b.size() > 2 ? b.at(2).get<double>() : 1.0});
      else t.bars.push_back({b.at("a").get<int>(), b.at("b").get<int>(), b.value("area", 1.0)});
    }
    t.fixed_dofs = j.at("fixed_dofs").get<std::vector<int>>();
    if (j.contains("loads")) {
      for (const auto& [k, v] : j.at("loads").items()) t.loads[std::stoi(k)] += v.get<double>();
    }
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("truss json: ") + e.what());
  }
}

}  // namespace ddslp
