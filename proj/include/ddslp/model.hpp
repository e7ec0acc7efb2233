#pragma once
// Structural models reduced to what the solvers need: per-member strain
// operators over the free dofs, member weights and the load vector.
//
//   compatibility   eps_e = B_e U
//   equilibrium     sum_e w_e B_e^T sig_e = p
//
// A member is a bar (d = 1, w = A l, B = b^T / l) or a Gauss point
// (d = 6, w = gauss weight * det J).

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "ddslp/error.hpp"

namespace ddslp {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using ColSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct MemberOperators {
  int dim = 1;
  int num_dofs = 0;
  int num_members = 0;
  RowSparse B;             ///< (num_members * dim) x num_dofs, member-major rows
  Eigen::VectorXd weight;  ///< per member
  Eigen::VectorXd load;    ///< over free dofs
  std::vector<int> free_to_global;

  [[nodiscard]] int strain_size() const { return num_members * dim; }

  void validate() const {
    if (dim != 1 && dim != 6) throw DimensionError("MemberOperators: dim must be 1 or 6");
    if (B.rows() != strain_size() || B.cols() != num_dofs)
      throw DimensionError("MemberOperators: B is " + std::to_string(B.rows()) + "x" + std::to_string(B.cols()) +
                           ", expected " + std::to_string(strain_size()) + "x" + std::to_string(num_dofs));
    if (weight.size() != num_members) throw DimensionError("MemberOperators: weight size mismatch");
    if (load.size() != num_dofs) throw DimensionError("MemberOperators: load size mismatch");
  }

  [[nodiscard]] Eigen::VectorXd strain(const Eigen::VectorXd& u) const {
    if (u.size() != num_dofs) throw DimensionError("strain: displacement size mismatch");
    return B * u;
  }

  /// sum_e w_e B_e^T sig_e
  [[nodiscard]] Eigen::VectorXd internal_force(const Eigen::VectorXd& sigma) const {
    if (sigma.size() != strain_size()) throw DimensionError("internal_force: stress size mismatch");
    Eigen::VectorXd ws = sigma;
    for (int e = 0; e < num_members; ++e) ws.segment(e * dim, dim) *= weight[e];
    return B.transpose() * ws;
  }

  /// K = sum_e w_e B_e^T C_e B_e with one d x d block per member.
  [[nodiscard]] ColSparse stiffness(const std::vector<Eigen::MatrixXd>& blocks) const {
    if (static_cast<int>(blocks.size()) != num_members) throw DimensionError("stiffness: one block per member required");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(num_members * dim * dim));
    for (int e = 0; e < num_members; ++e) {
      const auto& c = blocks[static_cast<std::size_t>(e)];
      if (c.rows() != dim || c.cols() != dim) throw DimensionError("stiffness: block size mismatch");
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          if (c(a, b) != 0.0) trip.emplace_back(e * dim + a, e * dim + b, weight[e] * c(a, b));
    }
    ColSparse wc(strain_size(), strain_size());
    wc.setFromTriplets(trip.begin(), trip.end());
    const ColSparse bc = B;
    ColSparse k = bc.transpose() * wc * bc;
    k.makeCompressed();
    return k;
  }

  [[nodiscard]] ColSparse stiffness(const Eigen::MatrixXd& c) const {
    return stiffness(std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(num_members), c));
  }
};

/// Symmetric positive definite sparse solve; throws SingularSystemError.
class SpdSolver {
 public:
  explicit SpdSolver(const ColSparse& k) : k_(k) {
    ldlt_.compute(k);
    if (ldlt_.info() != Eigen::Success) throw SingularSystemError("sparse LDLT factorisation failed");
    const Eigen::VectorXd d = ldlt_.vectorD();
    const double dmax = d.size() > 0 ? d.cwiseAbs().maxCoeff() : 1.0;
    if (d.size() > 0 && (d.minCoeff() <= 1e-13 * dmax || !d.allFinite()))
      throw SingularSystemError("stiffness matrix is singular or indefinite (insufficient supports?)");
  }

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = ldlt_.solve(rhs);
    if (!x.allFinite()) throw SingularSystemError("non-finite solution of the stiffness system");
    return x;
  }

  [[nodiscard]] const ColSparse& matrix() const { return k_; }

 private:
  ColSparse k_;
  Eigen::SimplicialLDLT<ColSparse> ldlt_;
};

/// Linear-elastic state: U, member strains and stresses.
struct ElasticState {
  Eigen::VectorXd u;
  Eigen::VectorXd strain;
  Eigen::VectorXd stress;
};

[[nodiscard]] inline ElasticState linear_solve(const MemberOperators& ops, const Eigen::MatrixXd& c) {
  ops.validate();
  SpdSolver solver(ops.stiffness(c));
  ElasticState s;
  s.u = solver.solve(ops.load);
  s.strain = ops.strain(s.u);
  s.stress.resize(s.strain.size());
  for (int e = 0; e < ops.num_members; ++e)
    s.stress.segment(e * ops.dim, ops.dim) = c * s.strain.segment(e * ops.dim, ops.dim);
  return s;
}

}  // namespace ddslp
