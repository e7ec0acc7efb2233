#pragma once
// Trilinear 8-node hexahedra with a 2x2x2 Gauss rule. Each Gauss point is a
// member of the generic operator form with d = 6 (Voigt, engineering shear).
//
// Local node order: (-,-,-) (+,-,-) (+,+,-) (-,+,-) (-,-,+) (+,-,+) (+,+,+) (-,+,+).
// Global dof of node i, component c is 3 i + c.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ddslp/error.hpp"
#include "ddslp/model.hpp"
#include "ddslp/phase.hpp"

namespace ddslp {

struct HexMesh {
  std::vector<Eigen::Vector3d> nodes;
  std::vector<std::array<int, 8>> hexes;
  std::vector<int> fixed_dofs;
  std::map<int, double> loads;

  [[nodiscard]] int num_global_dofs() const { return 3 * static_cast<int>(nodes.size()); }
  [[nodiscard]] int num_gauss_points() const { return 8 * static_cast<int>(hexes.size()); }

  [[nodiscard]] std::vector<int> free_dofs() const {
    std::vector<char> fixed(static_cast<std::size_t>(num_global_dofs()), 0);
    for (int g : fixed_dofs)
      if (g >= 0 && g < num_global_dofs()) fixed[static_cast<std::size_t>(g)] = 1;
    std::vector<int> out;
    for (int g = 0; g < num_global_dofs(); ++g)
      if (!fixed[static_cast<std::size_t>(g)]) out.push_back(g);
    return out;
  }

  [[nodiscard]] int free_index(int global) const {
    const auto f = free_dofs();
    const auto it = std::lower_bound(f.begin(), f.end(), global);
    return it != f.end() && *it == global ? static_cast<int>(it - f.begin()) : -1;
  }

  void validate() const {
    if (hexes.empty()) throw MeshError("mesh: no elements");
    const int nn = static_cast<int>(nodes.size());
    for (std::size_t e = 0; e < hexes.size(); ++e)
      for (int v : hexes[e])
        if (v < 0 || v >= nn) throw MeshError("mesh: element " + std::to_string(e) + " references a missing node");
    for (int g : fixed_dofs)
      if (g < 0 || g >= num_global_dofs()) throw InvalidArgument("mesh: fixed dof " + std::to_string(g) + " out of range");
    for (const auto& [g, v] : loads)
      if (g < 0 || g >= num_global_dofs() || !std::isfinite(v)) throw InvalidArgument("mesh: bad load on dof " + std::to_string(g));
  }
};

namespace detail {

inline constexpr double kHexSign[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                          {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};

/// Shape-function derivatives w.r.t. (xi, eta, zeta), 3 x 8.
inline Eigen::Matrix<double, 3, 8> hex_dshape(double xi, double eta, double zeta) {
  Eigen::Matrix<double, 3, 8> d;
  for (int a = 0; a < 8; ++a) {
    const double sx = kHexSign[a][0], sy = kHexSign[a][1], sz = kHexSign[a][2];
    d(0, a) = 0.125 * sx * (1 + sy * eta) * (1 + sz * zeta);
    d(1, a) = 0.125 * sy * (1 + sx * xi) * (1 + sz * zeta);
    d(2, a) = 0.125 * sz * (1 + sx * xi) * (1 + sy * eta);
  }
  return d;
}

inline Eigen::Matrix<double, 8, 1> hex_shape(double xi, double eta, double zeta) {
  Eigen::Matrix<double, 8, 1> n;
  for (int a = 0; a < 8; ++a)
    n[a] = 0.125 * (1 + kHexSign[a][0] * xi) * (1 + kHexSign[a][1] * eta) * (1 + kHexSign[a][2] * zeta);
  return n;
}

}  // namespace detail

/// One 6 x 24 B matrix and weight per Gauss point, element-major.
struct HexGauss {
  Eigen::Matrix<double, 6, 24> B;
  double weight = 0.0;
  Eigen::Vector3d position;
};

[[nodiscard]] inline std::array<HexGauss, 8> hex_gauss_points(const HexMesh& mesh, int element) {
  const auto& conn = mesh.hexes[static_cast<std::size_t>(element)];
  Eigen::Matrix<double, 8, 3> x;
  for (int a = 0; a < 8; ++a) x.row(a) = mesh.nodes[static_cast<std::size_t>(conn[static_cast<std::size_t>(a)])].transpose();
  const double g = 1.0 / std::sqrt(3.0);
  std::array<HexGauss, 8> out;
  for (int q = 0; q < 8; ++q) {
    const double xi = g * detail::kHexSign[q][0], eta = g * detail::kHexSign[q][1], zeta = g * detail::kHexSign[q][2];
    const Eigen::Matrix<double, 3, 8> dn = detail::hex_dshape(xi, eta, zeta);
    const Eigen::Matrix3d jac = dn * x;  // J_ij = d x_j / d xi_i
    const double det = jac.determinant();
    if (!(det > 0.0))
      throw MeshError("mesh: element " + std::to_string(element) + " has non-positive Jacobian at Gauss point " + std::to_string(q));
    const Eigen::Matrix<double, 3, 8> dx = jac.inverse() * dn;  // d N / d x
    HexGauss& gp = out[static_cast<std::size_t>(q)];
    gp.B.setZero();
    for (int a = 0; a < 8; ++a) {
      const double nx = dx(0, a), ny = dx(1, a), nz = dx(2, a);
      const int c = 3 * a;
      gp.B(0, c) = nx;
      gp.B(1, c + 1) = ny;
      gp.B(2, c + 2) = nz;
      gp.B(3, c + 1) = nz;
      gp.B(3, c + 2) = ny;
      gp.B(4, c) = nz;
      gp.B(4, c + 2) = nx;
      gp.B(5, c) = ny;
      gp.B(5, c + 1) = nx;
    }
    gp.weight = det;
    gp.position = (detail::hex_shape(xi, eta, zeta).transpose() * x).transpose();
  }
  return out;
}

[[nodiscard]] inline MemberOperators build_gauss_operators(const HexMesh& mesh) {
  mesh.validate();
  const auto free = mesh.free_dofs();
  std::vector<int> map(static_cast<std::size_t>(mesh.num_global_dofs()), -1);
  for (std::size_t k = 0; k < free.size(); ++k) map[static_cast<std::size_t>(free[k])] = static_cast<int>(k);

  MemberOperators ops;
  ops.dim = 6;
  ops.num_dofs = static_cast<int>(free.size());
  ops.num_members = mesh.num_gauss_points();
  ops.weight.resize(ops.num_members);
  ops.load.setZero(ops.num_dofs);
  ops.free_to_global = free;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ops.num_members) * 6 * 24);
  for (int e = 0; e < static_cast<int>(mesh.hexes.size()); ++e) {
    const auto gps = hex_gauss_points(mesh, e);
    const auto& conn = mesh.hexes[static_cast<std::size_t>(e)];
    for (int q = 0; q < 8; ++q) {
      const int member = 8 * e + q;
      const HexGauss& gp = gps[static_cast<std::size_t>(q)];
      ops.weight[member] = gp.weight;
      for (int a = 0; a < 8; ++a)
        for (int c = 0; c < 3; ++c) {
          const int col = map[static_cast<std::size_t>(3 * conn[static_cast<std::size_t>(a)] + c)];
          if (col < 0) continue;
          for (int r = 0; r < 6; ++r)
            if (gp.B(r, 3 * a + c) != 0.0) trip.emplace_back(6 * member + r, col, gp.B(r, 3 * a + c));
        }
    }
  }
  ops.B.resize(ops.strain_size(), ops.num_dofs);
  ops.B.setFromTriplets(trip.begin(), trip.end());
  for (const auto& [g, v] : mesh.loads) {
    const int k = map[static_cast<std::size_t>(g)];
    if (k >= 0) ops.load[k] += v;
  }
  return ops;
}

[[nodiscard]] inline ElasticState reference_solve_elastic(const HexMesh& mesh, double young, double poisson) {
  if (!(poisson >= 0.0 && poisson < 0.5)) throw InvalidArgument("reference_solve_elastic: Poisson ratio must lie in [0, 0.5)");
  if (!(young > 0.0)) throw InvalidArgument("reference_solve_elastic: Young's modulus must be positive");
  return linear_solve(build_gauss_operators(mesh), isotropic_stiffness(young, poisson));
}

/// Uniform nx x ny x nz brick mesh of [0,lx] x [0,ly] x [0,lz], nodes numbered x fastest.
[[nodiscard]] inline HexMesh box_mesh(int nx, int ny, int nz, double lx, double ly, double lz) {
  if (nx < 1 || ny < 1 || nz < 1) throw InvalidArgument("box_mesh: element counts must be positive");
  HexMesh m;
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) m.nodes.emplace_back(lx * i / nx, ly * j / ny, lz * k / nz);
  auto id = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        m.hexes.push_back({id(i, j, k), id(i + 1, j, k), id(i + 1, j + 1, k), id(i, j + 1, k), id(i, j, k + 1),
                           id(i + 1, j, k + 1), id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)});
  return m;
}

struct Cantilever {
  HexMesh mesh;
  int tip_node = 0;  ///< end-face node at mid width and mid height (nearest)
  int tip_dof = 0;   ///< global z dof of tip_node
};

/// Beam [0,16] x [0,8] x [0,4] clamped at x = 0. A total load `total_load`
/// in -z is spread over the x = 16 face with consistent (area) nodal weights.
[[nodiscard]] inline Cantilever cantilever(int nx, int ny, int nz, double total_load,
                                           double lx = 16.0, double ly = 8.0, double lz = 4.0) {
  Cantilever c;
  c.mesh = box_mesh(nx, ny, nz, lx, ly, lz);
  auto id = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int d = 0; d < 3; ++d) c.mesh.fixed_dofs.push_back(3 * id(0, j, k) + d);
  std::sort(c.mesh.fixed_dofs.begin(), c.mesh.fixed_dofs.end());
  const double face_area = ly * lz;
  const double dy = ly / ny, dz = lz / nz;
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j) {
      const double wy = (j == 0 || j == ny) ? 0.5 : 1.0;
      const double wz = (k == 0 || k == nz) ? 0.5 : 1.0;
      c.mesh.loads[3 * id(nx, j, k) + 2] = -total_load * wy * wz * dy * dz / face_area;
    }
  c.tip_node = id(nx, ny / 2, nz / 2);
  c.tip_dof = 3 * c.tip_node + 2;
  return c;
}

[[nodiscard]] inline nlohmann::json to_json(const HexMesh& m) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : m.nodes) j["nodes"].push_back({n.x(), n.y(), n.z()});
  j["hexes"] = m.hexes;
  j["fixed_dofs"] = m.fixed_dofs;
  j["loads"] = nlohmann::json::object();
  for (const auto& [g, v] : m.loads) j["loads"][std::to_string(g)] = v;
  return j;
}

[[nodiscard]] inline HexMesh mesh_from_json(const nlohmann::json& j) {
  try {
    HexMesh m;
    for (const auto& n : j.at("nodes")) {
      if (n.size() != 3) throw DimensionError("mesh json: nodes need three coordinates");
      m.nodes.emplace_back(n.at(0).get<double>(), n.at(1).get<double>(), n.at(2).get<double>());
    }
    m.hexes = j.at("hexes").get<std::vector<std::array<int, 8>>>();
    m.fixed_dofs = j.at("fixed_dofs").get<std::vector<int>>();
    if (j.contains("loads"))
      for (const auto& [k, v] : j.at("loads").items()) m.loads[std::stoi(k)] += v.get<double>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("mesh json: ") + e.what());
  }
}

}  // namespace ddslp
