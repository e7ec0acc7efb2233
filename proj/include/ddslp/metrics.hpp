#pragma once
// Error measures against a reference state.
//   U_RE    = |U - U_ref|_2 / |U_ref|_2
//   sig_RMS = |sig - sig_ref|_2 / (sqrt(m) |sig_ref|_inf)     (eps_RMS alike)
// For Gauss-point members the vectors are flattened member-major and m is
// the number of Gauss points.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddslp/error.hpp"

namespace ddslp {

struct ErrorReport {
  double u_re = 0.0;
  double sigma_rms = 0.0;
  double eps_rms = 0.0;
  std::optional<double> bound_gap;
  double wall_time = 0.0;
  double lp_time = 0.0;
};

[[nodiscard]] inline double relative_error(const Eigen::VectorXd& x, const Eigen::VectorXd& ref, const char* what) {
  if (x.size() != ref.size()) throw DimensionError(std::string(what) + ": size mismatch");
  const double n = ref.norm();
  if (!(n > 0.0)) throw InvalidArgument(std::string(what) + ": reference norm is zero");
  return (x - ref).norm() / n;
}

[[nodiscard]] inline double rms_error(const Eigen::VectorXd& x, const Eigen::VectorXd& ref, int m, const char* what) {
  if (x.size() != ref.size()) throw DimensionError(std::string(what) + ": size mismatch");
  if (m < 1) throw InvalidArgument(std::string(what) + ": member count must be positive");
  const double inf = ref.size() > 0 ? ref.cwiseAbs().maxCoeff() : 0.0;
  if (!(inf > 0.0)) throw InvalidArgument(std::string(what) + ": reference max-norm is zero");
  return (x - ref).norm() / (std::sqrt(static_cast<double>(m)) * inf);
}

[[nodiscard]] inline ErrorReport compute_errors(const Eigen::VectorXd& u, const Eigen::VectorXd& strain,
                                                const Eigen::VectorXd& stress, const Eigen::VectorXd& u_ref,
                                                const Eigen::VectorXd& strain_ref, const Eigen::VectorXd& stress_ref,
                                                int m) {
  ErrorReport r;
  r.u_re = relative_error(u, u_ref, "U_RE");
  r.sigma_rms = rms_error(stress, stress_ref, m, "sigma_RMS");
  r.eps_rms = rms_error(strain, strain_ref, m, "eps_RMS");
  return r;
}

[[nodiscard]] inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw EmptyInputError("mean: no values");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population variance (divides by n); zero for a single value.
[[nodiscard]] inline double variance(const std::vector<double>& v) {
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size());
}

}  // namespace ddslp
