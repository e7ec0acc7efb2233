#pragma once
// Phase-space points (strain, stress), Voigt conventions and the dataset
// container consumed by every solver.
//
// Voigt order is (11, 22, 33, 23, 13, 12) with engineering shear strains
// (gamma = 2 * eps) in strain vectors and tensor shear components in stress
// vectors, so that stress . strain is the work density.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ddslp/error.hpp"

namespace ddslp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kVoigtSize = 6;

/// One strain-stress pair. Dimension is 1 (bars) or 6 (Voigt continuum).
struct PhasePoint {
  Eigen::VectorXd strain;
  Eigen::VectorXd stress;

  PhasePoint() = default;
  PhasePoint(Eigen::VectorXd e, Eigen::VectorXd s) : strain(std::move(e)), stress(std::move(s)) {}
  static PhasePoint scalar(double e, double s) {
    return {Eigen::VectorXd::Constant(1, e), Eigen::VectorXd::Constant(1, s)};
  }

  [[nodiscard]] int dim() const { return static_cast<int>(strain.size()); }

  [[nodiscard]] bool valid() const {
    return strain.size() == stress.size() && (dim() == 1 || dim() == kVoigtSize) &&
           strain.allFinite() && stress.allFinite();
  }

  /// Concatenated (strain, stress) coordinates, length 2d.
  [[nodiscard]] Eigen::VectorXd coords() const {
    Eigen::VectorXd c(2 * dim());
    c << strain, stress;
    return c;
  }
};

/// Diagonal stress/strain scaling used to shape 6-D simplices.
struct ScalingMatrix {
  Eigen::VectorXd diag;

  static ScalingMatrix identity(int d) { return {Eigen::VectorXd::Ones(d)}; }
  [[nodiscard]] bool valid() const { return diag.size() > 0 && (diag.array() > 0.0).all(); }
};

// sign(0) is +1 so that the ordering is total and reproducible.
[[nodiscard]] inline double sort_key_1d(double strain, double stress) {
  const double sign = strain < 0.0 ? -1.0 : 1.0;
  return sign * std::hypot(strain, stress);
}

[[nodiscard]] inline double sort_key_1d(const PhasePoint& p) {
  if (p.dim() != 1) throw DimensionError("sort_key_1d: expected a 1-D phase point, got d=" + std::to_string(p.dim()));
  return sort_key_1d(p.strain[0], p.stress[0]);
}

/// Sum of the six strain components.
[[nodiscard]] inline double sort_key_6d(const PhasePoint& p) {
  if (p.dim() != kVoigtSize)
    throw DimensionError("sort_key_6d: expected a 6-D phase point, got d=" + std::to_string(p.dim()));
  return p.strain.sum();
}

/// Ordered strain-stress samples, stored row-major as [strain | stress].
class DataSet {
 public:
  DataSet() = default;
  explicit DataSet(int dim, std::string label = {}) : dim_(dim), label_(std::move(label)) {
    if (dim != 1 && dim != kVoigtSize) throw DimensionError("DataSet: dimension must be 1 or 6, got " + std::to_string(dim));
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int size() const { return static_cast<int>(original_index_.size()); }
  [[nodiscard]] bool empty() const { return original_index_.empty(); }
  [[nodiscard]] const std::string& label() const { return label_; }
  void set_label(std::string l) { label_ = std::move(l); }

  /// Generator parameters and seed, written to the JSON sidecar.
  [[nodiscard]] const nlohmann::json& provenance() const { return provenance_; }
  nlohmann::json& provenance() { return provenance_; }

  void reserve(int n) {
    data_.reserve(static_cast<std::size_t>(n) * 2 * dim_);
    original_index_.reserve(n);
  }

  void add(std::span<const double> strain, std::span<const double> stress) {
    if (static_cast<int>(strain.size()) != dim_ || static_cast<int>(stress.size()) != dim_)
      throw DimensionError("DataSet::add: point dimension does not match dataset dimension " + std::to_string(dim_));
    for (double v : strain)
      if (!std::isfinite(v)) throw InvalidArgument("DataSet::add: non-finite strain component");
    for (double v : stress)
      if (!std::isfinite(v)) throw InvalidArgument("DataSet::add: non-finite stress component");
    data_.insert(data_.end(), strain.begin(), strain.end());
    data_.insert(data_.end(), stress.begin(), stress.end());
    original_index_.push_back(size());
    sort_keys_.clear();
  }

  void add(const PhasePoint& p) {
    if (p.dim() != dim_) throw DimensionError("DataSet::add: point dimension does not match dataset dimension");
    add(std::span<const double>(p.strain.data(), p.strain.size()), std::span<const double>(p.stress.data(), p.stress.size()));
  }

  void add(double strain, double stress) { add(PhasePoint::scalar(strain, stress)); }

  [[nodiscard]] Eigen::Map<const RowMatrix> phase() const {
    return {data_.data(), size(), 2 * dim_};
  }
  [[nodiscard]] Eigen::Map<RowMatrix> phase() { return {data_.data(), size(), 2 * dim_}; }

  [[nodiscard]] auto strain(int i) const { return phase().row(i).head(dim_); }
  [[nodiscard]] auto stress(int i) const { return phase().row(i).tail(dim_); }
  [[nodiscard]] auto stress_mut(int i) { return phase().row(i).tail(dim_); }

  [[nodiscard]] PhasePoint point(int i) const {
    return {strain(i).transpose(), stress(i).transpose()};
  }

  /// Index of row i in the dataset as originally constructed (before sorting).
  [[nodiscard]] int original_index(int i) const { return original_index_[static_cast<std::size_t>(i)]; }

  /// Sort keys aligned with rows; empty until sort_canonical has run.
  [[nodiscard]] const std::vector<double>& sort_keys() const { return sort_keys_; }
  [[nodiscard]] bool is_sorted() const { return !sort_keys_.empty() || empty(); }
  /// Call after editing rows through stress_mut.
  void clear_sort_keys() { sort_keys_.clear(); }

  [[nodiscard]] double key(int i) const {
    const auto row = phase().row(i);
    return dim_ == 1 ? sort_key_1d(row[0], row[1]) : row.head(dim_).sum();
  }

 private:
  friend DataSet sort_canonical(const DataSet& ds);

  int dim_ = 1;
  std::string label_;
  std::vector<double> data_;
  std::vector<int> original_index_;
  std::vector<double> sort_keys_;
  nlohmann::json provenance_ = nlohmann::json::object();
};

/// Stable ascending sort by the dimension-appropriate key.
[[nodiscard]] inline DataSet sort_canonical(const DataSet& ds) {
  if (ds.empty()) throw EmptyInputError("sort_canonical: empty dataset");
  const int n = ds.size();
  std::vector<double> keys(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) keys[static_cast<std::size_t>(i)] = ds.key(i);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)]; });

  DataSet out(ds.dim(), ds.label());
  out.provenance_ = ds.provenance_;
  const std::size_t width = 2 * static_cast<std::size_t>(ds.dim());
  out.data_.resize(static_cast<std::size_t>(n) * width);
  out.original_index_.resize(static_cast<std::size_t>(n));
  out.sort_keys_.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    const auto src = static_cast<std::size_t>(perm[static_cast<std::size_t>(r)]);
    std::copy_n(ds.data_.begin() + static_cast<std::ptrdiff_t>(src * width), width,
                out.data_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * width));
    out.original_index_[static_cast<std::size_t>(r)] = ds.original_index_[src];
    out.sort_keys_[static_cast<std::size_t>(r)] = keys[src];
  }
  return out;
}

namespace detail {

inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace detail

inline constexpr double kScalingStrainTol = 1e-12;

/// Points whose strain component is below this fraction of the largest one in
/// the set are left out of that component's median; near-zero strains carrying
/// noise give arbitrarily large ratios.
inline constexpr double kScalingRelativeStrain = 0.1;

/// Per-component median of |stress/strain| over the given points. Components
/// whose strains are all below kScalingStrainTol fall back to 1.
template <typename GetPoint>
[[nodiscard]] ScalingMatrix estimate_scaling(int count, int dim, GetPoint&& get) {
  if (count < 1) throw EmptyInputError("estimate_scaling: no points");
  ScalingMatrix s{Eigen::VectorXd::Ones(dim)};
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < dim; ++c) {
    double largest = 0.0;
    for (int j = 0; j < count; ++j) largest = std::max(largest, std::abs(get(j, c).first));
    const double cut = std::max(kScalingStrainTol, kScalingRelativeStrain * largest);
    ratios.clear();
    for (int j = 0; j < count; ++j) {
      const auto [e, sig] = get(j, c);
      if (std::abs(e) < cut) continue;
      ratios.push_back(std::abs(sig / e));
    }
    if (ratios.empty()) continue;
    const double m = detail::median(ratios);
    if (m > 0.0 && std::isfinite(m)) s.diag[c] = m;
  }
  return s;
}

[[nodiscard]] inline ScalingMatrix estimate_scaling(std::span<const PhasePoint> pts) {
  if (pts.empty()) throw EmptyInputError("estimate_scaling: no points");
  const int d = pts.front().dim();
  for (const auto& p : pts)
    if (p.dim() != d) throw DimensionError("estimate_scaling: mixed point dimensions");
  return estimate_scaling(static_cast<int>(pts.size()), d, [&](int j, int c) {
    return std::pair{pts[static_cast<std::size_t>(j)].strain[c], pts[static_cast<std::size_t>(j)].stress[c]};
  });
}

[[nodiscard]] inline ScalingMatrix estimate_scaling(const DataSet& ds, std::span<const int> rows) {
  return estimate_scaling(static_cast<int>(rows.size()), ds.dim(), [&](int j, int c) {
    const int r = rows[static_cast<std::size_t>(j)];
    return std::pair{ds.strain(r)[c], ds.stress(r)[c]};
  });
}

[[nodiscard]] inline ScalingMatrix estimate_scaling(const DataSet& ds) {
  std::vector<int> all(static_cast<std::size_t>(ds.size()));
  std::iota(all.begin(), all.end(), 0);
  return estimate_scaling(ds, all);
}

/// Isotropic linear-elastic stiffness in Voigt form (engineering shear strains).
[[nodiscard]] inline Eigen::Matrix<double, 6, 6> isotropic_stiffness(double young, double poisson) {
  const double lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  const double mu = young / (2.0 * (1.0 + poisson));
  Eigen::Matrix<double, 6, 6> c = Eigen::Matrix<double, 6, 6>::Zero();
  c.topLeftCorner<3, 3>().setConstant(lam);
  for (int i = 0; i < 3; ++i) c(i, i) = lam + 2.0 * mu;
  for (int i = 3; i < 6; ++i) c(i, i) = mu;
  return c;
}

}  // namespace ddslp
