#pragma once
// Reproducible dataset generators.
//
// Random numbers: std::mt19937_64 (bit-exact across standard libraries)
// seeded with splitmix64(seed). Uniforms take the top 53 bits of one draw;
// Gaussians use the Marsaglia polar method with the spare value cached.
// Per-task seeds come from derive_seed(base, a, b).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddslp/error.hpp"
#include "ddslp/phase.hpp"

namespace ddslp {

[[nodiscard]] inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream (a, b) under a base seed, e.g. (replicate, member).
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(base ^ splitmix64(a + 1)) ^ splitmix64(~b));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double gaussian(double mean = 0.0, double stddev = 1.0) {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return mean + stddev * z;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    return mean + stddev * u * f;
  }

  /// Uniform integer in [0, n), by rejection so that it is unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("Rng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class GenKind { LinearNoisy, CubeRootNoisy, Regularized1d, Gauss6d };

[[nodiscard]] inline const char* to_string(GenKind k) {
  switch (k) {
    case GenKind::LinearNoisy: return "linear";
    case GenKind::CubeRootNoisy: return "cuberoot";
    case GenKind::Regularized1d: return "regularized";
    case GenKind::Gauss6d: return "gauss6d";
  }
  return "?";
}

[[nodiscard]] inline GenKind gen_kind_from_string(const std::string& s) {
  if (s == "linear") return GenKind::LinearNoisy;
  if (s == "cuberoot") return GenKind::CubeRootNoisy;
  if (s == "regularized") return GenKind::Regularized1d;
  if (s == "gauss6d") return GenKind::Gauss6d;
  throw InvalidArgument("unknown dataset kind '" + s + "' (linear, cuberoot, regularized, gauss6d)");
}

struct GenSpec {
  GenKind kind = GenKind::LinearNoisy;
  int nd = 201;        ///< 1-D: number of strain samples
  int per_axis = 5;    ///< gauss6d: strain samples per component
  std::optional<double> strain_lo, strain_hi;  ///< defaults depend on kind
  double young = 1.0;
  double poisson = 0.3;
  double theta_cap = 0.1;  ///< linear: noise half-width cap
  double theta0 = 0.04;    ///< cuberoot: noise half-width
  double variance = 0.005;
  bool variance_is_std = false;  ///< read `variance` as a standard deviation
  double e_lo = 0.8, e_hi = 1.2;  ///< regularized: modulus envelope
  int levels = 3;                 ///< regularized: moduli per strain sample
  std::uint64_t seed = 0;

  [[nodiscard]] double lo() const {
    if (strain_lo) return *strain_lo;
    return kind == GenKind::CubeRootNoisy ? -1.5 : kind == GenKind::Gauss6d ? -0.1 : -1.0;
  }
  [[nodiscard]] double hi() const {
    if (strain_hi) return *strain_hi;
    return kind == GenKind::CubeRootNoisy ? 1.5 : kind == GenKind::Gauss6d ? 0.1 : 1.0;
  }
};

[[nodiscard]] inline nlohmann::json to_json(const GenSpec& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}, {"strain_lo", s.lo()}, {"strain_hi", s.hi()}, {"seed", s.seed}};
  switch (s.kind) {
    case GenKind::LinearNoisy:
      j.update({{"nd", s.nd}, {"young", s.young}, {"theta_cap", s.theta_cap}});
      break;
    case GenKind::CubeRootNoisy:
      j.update({{"nd", s.nd}, {"theta0", s.theta0}});
      break;
    case GenKind::Regularized1d:
      j.update({{"nd", s.nd}, {"e_lo", s.e_lo}, {"e_hi", s.e_hi}, {"levels", s.levels}});
      break;
    case GenKind::Gauss6d:
      j.update({{"per_axis", s.per_axis}, {"young", s.young}, {"poisson", s.poisson}, {"variance", s.variance},
                {"variance_is_std", s.variance_is_std}});
      break;
  }
  return j;
}

namespace detail {

inline double grid(double lo, double hi, int i, int n) { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }

inline void check_1d(const GenSpec& s, const char* who) {
  if (s.nd < 2) throw InvalidArgument(std::string(who) + ": need at least 2 points");
  if (!(s.lo() < s.hi())) throw InvalidArgument(std::string(who) + ": empty strain range");
}

inline DataSet labelled(int dim, const GenSpec& s) {
  DataSet ds(dim, to_string(s.kind));
  ds.provenance() = to_json(s);
  return ds;
}

}  // namespace detail

/// sig = E eps - theta + 2 theta U(0,1), theta = min(|E eps|, cap).
[[nodiscard]] inline DataSet gen_linear_noisy(const GenSpec& s) {
  detail::check_1d(s, "gen_linear_noisy");
  Rng rng(s.seed);
  DataSet ds = detail::labelled(1, s);
  ds.reserve(s.nd);
  for (int j = 0; j < s.nd; ++j) {
    const double e = detail::grid(s.lo(), s.hi(), j, s.nd);
    const double theta = std::min(std::abs(s.young * e), s.theta_cap);
    ds.add(e, s.young * e - theta + 2.0 * theta * rng.uniform());
  }
  return ds;
}

/// sig = cbrt(eps) - theta + 2 theta U(0,1), theta = min(theta0, |cbrt(eps)|).
[[nodiscard]] inline DataSet gen_cuberoot_noisy(const GenSpec& s) {
  detail::check_1d(s, "gen_cuberoot_noisy");
  if (s.theta0 < 0.0) throw InvalidArgument("gen_cuberoot_noisy: theta0 must be non-negative");
  Rng rng(s.seed);
  DataSet ds = detail::labelled(1, s);
  ds.reserve(s.nd);
  for (int j = 0; j < s.nd; ++j) {
    const double e = detail::grid(s.lo(), s.hi(), j, s.nd);
    const double c = std::cbrt(e);
    const double theta = s.theta0 <= std::abs(c) ? s.theta0 : std::abs(c);
    const double u = rng.uniform();
    ds.add(e, theta == 0.0 ? c : c - theta + 2.0 * theta * u);
  }
  return ds;
}

/// Noise-free points sig = E_k eps on `levels` moduli spread evenly over
/// [e_lo, e_hi], for each of nd strain samples.
[[nodiscard]] inline DataSet gen_regularized_1d(const GenSpec& s) {
  detail::check_1d(s, "gen_regularized_1d");
  if (s.levels < 2 || !(s.e_lo > 0.0 && s.e_lo < s.e_hi))
    throw InvalidArgument("gen_regularized_1d: need levels >= 2 and 0 < e_lo < e_hi");
  DataSet ds = detail::labelled(1, s);
  ds.reserve(s.nd * s.levels);
  for (int j = 0; j < s.nd; ++j) {
    const double e = detail::grid(s.lo(), s.hi(), j, s.nd);
    for (int k = 0; k < s.levels; ++k) ds.add(e, detail::grid(s.e_lo, s.e_hi, k, s.levels) * e);
  }
  return ds;
}

/// Tensor grid of Voigt strains, isotropic stresses, Gaussian noise on all
/// twelve coordinates. Component 0 varies slowest.
[[nodiscard]] inline DataSet gen_gauss6d(const GenSpec& s) {
  if (s.per_axis < 2) throw InvalidArgument("gen_gauss6d: per-axis count must be at least 2");
  if (!(s.lo() < s.hi())) throw InvalidArgument("gen_gauss6d: empty strain range");
  if (s.variance < 0.0) throw InvalidArgument("gen_gauss6d: variance must be non-negative");
  const double stddev = s.variance_is_std ? s.variance : std::sqrt(s.variance);
  const Eigen::Matrix<double, 6, 6> c = isotropic_stiffness(s.young, s.poisson);
  const long long total = static_cast<long long>(std::pow(s.per_axis, 6) + 0.5);
  if (total > std::numeric_limits<int>::max()) throw InvalidArgument("gen_gauss6d: grid too large");
  Rng rng(s.seed);
  DataSet ds = detail::labelled(kVoigtSize, s);
  ds.reserve(static_cast<int>(total));
  std::array<int, 6> idx{};
  Eigen::Matrix<double, 6, 1> e, sig;
  for (long long n = 0; n < total; ++n) {
    for (int k = 0; k < 6; ++k) e[k] = detail::grid(s.lo(), s.hi(), idx[static_cast<std::size_t>(k)], s.per_axis);
    sig = c * e;
    if (stddev > 0.0) {
      for (int k = 0; k < 6; ++k) e[k] += rng.gaussian(0.0, stddev);
      for (int k = 0; k < 6; ++k) sig[k] += rng.gaussian(0.0, stddev);
    }
    ds.add(std::span<const double>(e.data(), 6), std::span<const double>(sig.data(), 6));
    for (int k = 5; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < s.per_axis) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return ds;
}

[[nodiscard]] inline DataSet generate(const GenSpec& s) {
  switch (s.kind) {
    case GenKind::LinearNoisy: return gen_linear_noisy(s);
    case GenKind::CubeRootNoisy: return gen_cuberoot_noisy(s);
    case GenKind::Regularized1d: return gen_regularized_1d(s);
    case GenKind::Gauss6d: return gen_gauss6d(s);
  }
  throw InvalidArgument("generate: unknown kind");
}

/// Multiplies the stresses of k distinct random rows by factor.
[[nodiscard]] inline DataSet inject_outliers(const DataSet& ds, int k, double factor, std::uint64_t seed) {
  if (k < 0 || k > ds.size())
    throw InvalidArgument("inject_outliers: cannot pick " + std::to_string(k) + " rows from " + std::to_string(ds.size()));
  DataSet out = ds;
  std::vector<int> rows(static_cast<std::size_t>(ds.size()));
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(ds.size() - i)));
    std::swap(rows[static_cast<std::size_t>(i)], rows[j]);
    out.stress_mut(rows[static_cast<std::size_t>(i)]) *= factor;
  }
  out.clear_sort_keys();
  out.provenance()["outliers"] = {{"count", k}, {"factor", factor}, {"seed", seed}};
  return out;
}

}  // namespace ddslp
