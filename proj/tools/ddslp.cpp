// ddslp command-line front end.
//
// Exit codes: 0 success, 2 usage or invalid input, 3 file I/O, 4 solver did
// not converge (or ended infeasible), 5 internal numerical failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddslp/continuum.hpp"
#include "ddslp/datagen.hpp"
#include "ddslp/ddcm.hpp"
#include "ddslp/io.hpp"
#include "ddslp/metrics.hpp"
#include "ddslp/parallel.hpp"
#include "ddslp/slp.hpp"
#include "ddslp/truss.hpp"
#include "json_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ddslp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitNumerical = 5;

struct Options {
  // output
  std::string out = "ddslp_out";
  std::string format = "json";
  int jobs = 1;
  std::uint64_t seed = 0;

  // data generation
  std::string kind;
  int nd = 201;
  int per_axis = 5;
  std::optional<double> strain_lo, strain_hi;
  double young = 1.0;
  double poisson = 0.3;
  double theta_cap = 0.1;
  double theta0 = 0.04;
  double variance = 0.005;
  bool variance_is_std = false;
  double e_lo = 0.8, e_hi = 1.2;
  int levels = 3;
  int outliers = 0;
  double outlier_factor = 1.2;
  std::string name = "data";

  // model and data input
  std::string model = "three-bar";
  int bays = 6;
  double tip_load = 0.2;
  std::vector<int> mesh{4, 2, 2};
  double load = 0.25;
  std::string data;

  // solver
  int nc = 5;
  std::optional<double> l1;
  double rho = 1.5;
  double l_min = 0.2;
  double tol = 0.01;
  double lambda_lo = 0.0, lambda_hi = 1.0;
  bool no_relax_lambda = false;
  int max_iter = 100;
  std::string objective = "compliance";
  bool no_warm_start = false;
  std::string nn = "brute";
  int trees = 20;
  int checks = 256;
  std::string dof;
  int max_sweeps = 500;

  // reference solution for error metrics
  std::string reference = "none";
  double ref_young = 1.0;
  double ref_poisson = 0.3;

  // sweep grid
  int replicates = 1;
  std::string method = "slp";
  std::vector<double> theta0_list;
  std::vector<int> nd_list;
  std::vector<double> variance_list;
  std::vector<int> outlier_counts;
  std::vector<double> outlier_factors;
};

// ---------------------------------------------------------------------------
// Option registration

void add_output_options(CLI::App* sub, Options& o) {
  sub->fallthrough();
  sub->configurable();
  sub->add_option("--out", o.out, "Output directory")->envname("DDSLP_OUTPUT_DIR");
  sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", o.seed, "Base seed; every stream is derived from it");
}

void add_gen_options(CLI::App* sub, Options& o, bool kind_required) {
  auto* k = sub->add_option("--kind", o.kind, "Dataset kind")
                ->check(CLI::IsMember({"linear", "cuberoot", "regularized", "gauss6d"}));
  if (kind_required) k->required();
  sub->add_option("--nd", o.nd, "Strain samples (1-D kinds)")->check(CLI::PositiveNumber);
  sub->add_option("--per-axis", o.per_axis, "Strain samples per component (gauss6d)")->check(CLI::PositiveNumber);
  sub->add_option("--strain-lo", o.strain_lo, "Lower strain limit (default depends on kind)");
  sub->add_option("--strain-hi", o.strain_hi, "Upper strain limit (default depends on kind)");
  sub->add_option("--young", o.young, "Young's modulus of the underlying law");
  sub->add_option("--poisson", o.poisson, "Poisson ratio (gauss6d)");
  sub->add_option("--theta-cap", o.theta_cap, "Noise half-width cap (linear)");
  sub->add_option("--theta0", o.theta0, "Noise half-width (cuberoot)");
  sub->add_option("--variance", o.variance, "Gaussian noise variance on every coordinate (gauss6d)");
  sub->add_flag("--variance-is-std", o.variance_is_std, "Read --variance as a standard deviation");
  sub->add_option("--e-lo", o.e_lo, "Lower modulus (regularized)");
  sub->add_option("--e-hi", o.e_hi, "Upper modulus (regularized)");
  sub->add_option("--levels", o.levels, "Moduli per strain sample (regularized)")->check(CLI::PositiveNumber);
  sub->add_option("--outliers", o.outliers, "Rows whose stress is scaled by --outlier-factor")->check(CLI::NonNegativeNumber);
  sub->add_option("--outlier-factor", o.outlier_factor, "Stress factor for outlier rows");
}

void add_model_options(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "three-bar, space-truss, cantilever or a model JSON file");
  sub->add_option("--bays", o.bays, "Bays of the space truss")->check(CLI::PositiveNumber);
  sub->add_option("--tip-load", o.tip_load, "Total tip load of the space truss");
  sub->add_option("--mesh", o.mesh, "Cantilever elements nx,ny,nz")->delimiter(',')->expected(3);
  sub->add_option("--load", o.load, "Total cantilever end load");
}

void add_reference_options(CLI::App* sub, Options& o) {
  sub->add_option("--reference", o.reference, "Reference solution for error metrics")
      ->check(CLI::IsMember({"none", "linear", "cuberoot", "elastic"}));
  sub->add_option("--ref-young", o.ref_young, "Young's modulus of the reference");
  sub->add_option("--ref-poisson", o.ref_poisson, "Poisson ratio of the elastic reference");
}

void add_nn_options(CLI::App* sub, Options& o) {
  sub->add_option("--nn", o.nn, "Nearest-neighbour search")->check(CLI::IsMember({"brute", "kd"}));
  sub->add_option("--trees", o.trees, "Trees in the kd forest")->check(CLI::PositiveNumber);
  sub->add_option("--checks", o.checks, "Leaf checks per kd query")->check(CLI::PositiveNumber);
}

void add_slp_options(CLI::App* sub, Options& o) {
  sub->add_option("--nc", o.nc, "Data points per local hull")->check(CLI::PositiveNumber);
  sub->add_option("--l1", o.l1, "First hull size (row stride for bars, simplex edge for Gauss points)");
  sub->add_option("--rho", o.rho, "Hull shrink factor");
  sub->add_option("--l-min", o.l_min, "Smallest simplex edge");
  sub->add_option("--tol", o.tol, "Relative displacement change for convergence");
  sub->add_option("--lambda-lo", o.lambda_lo, "Lower bound of the hull weights");
  sub->add_option("--lambda-hi", o.lambda_hi, "Upper bound of the hull weights");
  sub->add_flag("--no-relax-lambda", o.no_relax_lambda, "Keep the weight bounds fixed");
  sub->add_option("--max-iter", o.max_iter, "Iteration limit")->check(CLI::PositiveNumber);
  sub->add_flag("--no-warm-start", o.no_warm_start, "Solve every LP from scratch");
  add_nn_options(sub, o);
}

// ---------------------------------------------------------------------------
// Building blocks

GenSpec gen_spec(const Options& o) {
  GenSpec g;
  g.kind = gen_kind_from_string(o.kind);
  g.nd = o.nd;
  g.per_axis = o.per_axis;
  g.strain_lo = o.strain_lo;
  g.strain_hi = o.strain_hi;
  g.young = o.young;
  g.poisson = o.poisson;
  g.theta_cap = o.theta_cap;
  g.theta0 = o.theta0;
  g.variance = o.variance;
  g.variance_is_std = o.variance_is_std;
  g.e_lo = o.e_lo;
  g.e_hi = o.e_hi;
  g.levels = o.levels;
  g.seed = o.seed;
  return g;
}

/// Data stream seed derive_seed(seed, replicate); outliers use stream
/// (replicate, 1) and the kd forest stream (replicate, 2).
DataSet make_dataset(GenSpec g, int outliers, double factor, std::uint64_t base, int replicate) {
  g.seed = derive_seed(base, static_cast<std::uint64_t>(replicate));
  DataSet ds = generate(g);
  if (outliers > 0) ds = inject_outliers(ds, outliers, factor, derive_seed(base, static_cast<std::uint64_t>(replicate), 1));
  return ds;
}

SlpConfig slp_config(const Options& o) {
  SlpConfig c;
  c.nc = o.nc;
  c.l1 = o.l1;
  c.rho = o.rho;
  c.l_min = o.l_min;
  c.tol = o.tol;
  c.lambda_lo = o.lambda_lo;
  c.lambda_hi = o.lambda_hi;
  c.relax_lambda = !o.no_relax_lambda;
  c.max_iter = o.max_iter;
  c.objective = Objective::parse(o.objective);
  c.warm_start = !o.no_warm_start;
  c.seed = o.seed;
  c.nn.mode = o.nn == "kd" ? NnMode::KdForest : NnMode::BruteForce;
  c.nn.num_trees = o.trees;
  c.nn.max_checks = o.checks;
  c.jobs = o.jobs;
  return c;
}

struct Model {
  std::string name;
  MemberOperators ops;
  std::optional<TrussModel> truss;
  std::optional<HexMesh> mesh;
  int tip_dof = -1;  ///< free index of the cantilever tip, -1 otherwise
};

int free_index(const MemberOperators& ops, int global) {
  for (int i = 0; i < ops.num_dofs; ++i)
    if (ops.free_to_global[static_cast<std::size_t>(i)] == global) return i;
  return -1;
}

Model load_model(const Options& o) {
  Model m;
  m.name = o.model;
  if (o.model == "three-bar") {
    m.truss = three_bar_truss();
  } else if (o.model == "space-truss") {
    m.truss = space_truss(o.bays, o.tip_load);
  } else if (o.model == "cantilever") {
    if (o.mesh.size() != 3) throw InvalidArgument("--mesh needs three element counts");
    const Cantilever c = cantilever(o.mesh[0], o.mesh[1], o.mesh[2], o.load);
    m.mesh = c.mesh;
    m.ops = build_gauss_operators(*m.mesh);
    m.tip_dof = free_index(m.ops, c.tip_dof);
    return m;
  } else {
    const json j = read_json_file(o.model);
    if (j.contains("hexes")) {
      m.mesh = mesh_from_json(j);
      m.ops = build_gauss_operators(*m.mesh);
      return m;
    }
    m.truss = truss_from_json(j);
  }
  m.ops = build_operators(*m.truss);
  return m;
}

int parse_dof(const std::string& s, const Model& m) {
  if (s == "tip") {
    if (m.tip_dof < 0) throw InvalidArgument("--dof tip is only defined for the cantilever model");
    return m.tip_dof;
  }
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw InvalidArgument("--dof must be a free dof index or 'tip', got '" + s + "'");
  if (v < 0 || v >= m.ops.num_dofs)
    throw InvalidArgument("--dof " + s + " is out of range (0.." + std::to_string(m.ops.num_dofs - 1) + ")");
  return v;
}

std::optional<ElasticState> reference_state(const std::string& kind, const Model& m, double young, double poisson) {
  if (kind == "none") return std::nullopt;
  if (kind == "elastic") {
    if (!m.mesh) throw InvalidArgument("--reference elastic needs a continuum model");
    return reference_solve_elastic(*m.mesh, young, poisson);
  }
  if (!m.truss) throw InvalidArgument("--reference " + kind + " needs a truss model");
  const auto r = reference_solve(m.ops, kind == "linear" ? ScalarLaw::linear(young) : ScalarLaw::cube_root());
  return ElasticState{r.u, r.strain, r.stress};
}

json metrics_json(const ErrorReport& e) {
  return {{"u_re", e.u_re}, {"sigma_rms", e.sigma_rms}, {"eps_rms", e.eps_rms}};
}

fs::path prepare_out(const Options& o) {
  const fs::path out(o.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());
  return out;
}

void write_manifest(const CLI::App* sub, const fs::path& out) {
  const fs::path p = out / "manifest.json";
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  os << cli::JsonConfig().to_config(sub, true, false, "") << '\n';
}

std::ofstream open_csv(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  return os;
}

void write_vector_csv(const fs::path& p, const char* header, const Eigen::VectorXd& v) {
  auto os = open_csv(p);
  os << "index," << header << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << i << ',' << format_double(v[i]) << '\n';
}

void write_members_csv(const fs::path& p, const Eigen::VectorXd& strain, const Eigen::VectorXd& stress, int dim) {
  auto os = open_csv(p);
  os << "member,component,strain,stress\n";
  for (Eigen::Index i = 0; i < strain.size(); ++i)
    os << i / dim << ',' << i % dim << ',' << format_double(strain[i]) << ',' << format_double(stress[i]) << '\n';
}

/// Infeasible at the end, or stopped by the iteration limit.
bool failed(const SolveReport& r) { return !r.final_feasible || r.stop_reason == "max_iter"; }

void print_report_line(const std::string& what, const SolveReport& r) {
  std::cout << what << ": " << r.stop_reason << " after " << r.iterations << " iterations"
            << (r.final_feasible ? "" : " (final iterate infeasible)") << '\n';
}

// ---------------------------------------------------------------------------
// Commands

int cmd_gen(const Options& o, const CLI::App* sub) {
  const fs::path out = prepare_out(o);
  GenSpec g = gen_spec(o);
  DataSet ds = generate(g);
  if (o.outliers > 0) ds = inject_outliers(ds, o.outliers, o.outlier_factor, derive_seed(o.seed, 0, 1));
  const fs::path csv = out / (o.name + ".csv");
  write_dataset_csv(csv, ds);
  write_manifest(sub, out);
  std::cout << "N_d = " << ds.size() << '\n' << csv.string() << '\n' << sidecar_path(csv).string() << '\n';
  return kExitOk;
}

DataSet load_data(const Options& o) {
  if (o.data.empty()) throw InvalidArgument("--data is required");
  return read_dataset_csv(o.data);
}

int cmd_solve(const Options& o, const CLI::App* sub) {
  const SlpConfig cfg = slp_config(o);
  const Model model = load_model(o);
  const auto ref = reference_state(o.reference, model, o.ref_young, o.ref_poisson);
  const DataSet ds = load_data(o);
  const fs::path out = prepare_out(o);
  const SolveReport r = slp_solve(model.ops, ds, cfg);

  std::optional<ErrorReport> err;
  if (ref && r.u.size() > 0)
    err = compute_errors(r.u, r.strain, r.stress, ref->u, ref->strain, ref->stress, model.ops.num_members);
  if (o.format == "json") {
    json j = to_json(r);
    j["model"] = model.name;
    j["data"] = o.data;
    if (err) j["metrics"] = metrics_json(*err);
    write_json_file(out / "report.json", j);
  } else {
    auto os = open_csv(out / "history.csv");
    write_history_csv(os, r);
    write_vector_csv(out / "displacement.csv", "u", r.u);
    write_members_csv(out / "members.csv", r.strain, r.stress, model.ops.dim);
    if (err) {
      auto ms = open_csv(out / "metrics.csv");
      ms << "u_re,sigma_rms,eps_rms\n"
         << format_double(err->u_re) << ',' << format_double(err->sigma_rms) << ',' << format_double(err->eps_rms) << '\n';
    }
  }
  write_manifest(sub, out);
  print_report_line("solve", r);
  if (err) std::cout << "U_RE = " << err->u_re << ", sigma_RMS = " << err->sigma_rms << '\n';
  return failed(r) ? kExitNoConvergence : kExitOk;
}

int cmd_bounds(const Options& o, const CLI::App* sub) {
  SlpConfig cfg = slp_config(o);
  const Model model = load_model(o);
  const DataSet ds = load_data(o);
  const fs::path out = prepare_out(o);
  const bool single = o.dof.empty();
  if (single && cfg.objective.kind != ObjectiveKind::Compliance)
    throw InvalidArgument("bounds without --dof runs the compliance objective only");

  std::vector<std::pair<std::string, SolveReport>> runs;
  json j;
  j["model"] = model.name;
  j["data"] = o.data;
  if (single) {
    cfg.objective = Objective::compliance();
    runs.emplace_back("comparable", slp_solve(model.ops, ds, cfg));
  } else {
    const int dof = parse_dof(o.dof, model);
    const BoundsResult b = bounds(model.ops, ds, cfg, dof);
    j["dof"] = dof;
    j["lower"] = b.lower;
    j["comparable"] = b.comparable;
    j["upper"] = b.upper;
    runs.emplace_back("lower", b.lower_report);
    runs.emplace_back("comparable", b.comparable_report);
    runs.emplace_back("upper", b.upper_report);
  }

  json flags = json::array();
  double wall = 0.0, lp = 0.0;
  for (const auto& [what, r] : runs) {
    if (!r.final_feasible) flags.push_back(what + ": final iterate infeasible");
    else if (r.stop_reason == "max_iter") flags.push_back(what + ": iteration limit reached");
    wall += r.wall_time;
    lp += r.lp_time;
  }
  j["flags"] = flags;

  if (o.format == "json") {
    for (const auto& [what, r] : runs) j["reports"][what] = to_json(r);
    j["timing"] = {{"total_s", wall}, {"lp_s", lp}};
    write_json_file(out / "report.json", j);
  } else {
    auto os = open_csv(out / "bounds.csv");
    os << "objective,dof,value,stop_reason,final_feasible,iterations\n";
    for (const auto& [what, r] : runs) {
      const int dof = j.contains("dof") ? j["dof"].get<int>() : -1;
      os << what << ',' << dof << ',' << (dof >= 0 ? format_double(r.u[dof]) : format_double(r.objective)) << ','
         << r.stop_reason << ',' << (r.final_feasible ? 1 : 0) << ',' << r.iterations << '\n';
      auto hs = open_csv(out / ("history_" + what + ".csv"));
      write_history_csv(hs, r);
    }
  }
  write_manifest(sub, out);
  for (const auto& [what, r] : runs) print_report_line(what, r);
  if (!single)
    std::cout << "dof " << j["dof"] << ": lower " << j["lower"] << ", comparable " << j["comparable"] << ", upper "
              << j["upper"] << '\n';
  return flags.empty() ? kExitOk : kExitNoConvergence;
}

int cmd_baseline(const Options& o, const CLI::App* sub) {
  const Model model = load_model(o);
  const DataSet ds = load_data(o);
  const auto ref = reference_state(o.reference, model, o.ref_young, o.ref_poisson);
  const fs::path out = prepare_out(o);
  DdcmOptions opt;
  opt.max_sweeps = o.max_sweeps;
  opt.nn.mode = o.nn == "kd" ? NnMode::KdForest : NnMode::BruteForce;
  opt.nn.num_trees = o.trees;
  opt.nn.max_checks = o.checks;
  opt.nn.seed = o.seed;
  opt.jobs = o.jobs;
  const auto t0 = std::chrono::steady_clock::now();
  const DdcmResult r = ddcm_solve(model.ops, ds, opt);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::optional<ErrorReport> err;
  if (ref) err = compute_errors(r.u, r.strain, r.stress, ref->u, ref->strain, ref->stress, model.ops.num_members);
  if (o.format == "json") {
    json j{{"model", model.name},
           {"data", o.data},
           {"converged", r.converged},
           {"sweeps", r.sweeps},
           {"objective_history", r.objective_history},
           {"assignment", r.assignment},
           {"scaling", vector_json(r.scaling.diag)},
           {"u", vector_json(r.u)},
           {"strain", vector_json(r.strain)},
           {"stress", vector_json(r.stress)},
           {"timing", {{"wall_s", wall}}}};
    if (err) j["metrics"] = metrics_json(*err);
    write_json_file(out / "report.json", j);
  } else {
    auto os = open_csv(out / "history.csv");
    os << "sweep,objective\n";
    for (std::size_t k = 0; k < r.objective_history.size(); ++k)
      os << k + 1 << ',' << format_double(r.objective_history[k]) << '\n';
    write_vector_csv(out / "displacement.csv", "u", r.u);
    write_members_csv(out / "members.csv", r.strain, r.stress, model.ops.dim);
  }
  write_manifest(sub, out);
  std::cout << "baseline: " << (r.converged ? "converged" : "sweep limit reached") << " after " << r.sweeps
            << " sweeps\n";
  if (err) std::cout << "U_RE = " << err->u_re << ", sigma_RMS = " << err->sigma_rms << '\n';
  return r.converged ? kExitOk : kExitNoConvergence;
}

int cmd_globalhull(const Options& o, const CLI::App* sub) {
  const Model model = load_model(o);
  const DataSet ds = load_data(o);
  const fs::path out = prepare_out(o);
  std::vector<std::pair<std::string, SolveReport>> runs;
  json j{{"model", model.name}, {"data", o.data}};
  if (o.dof.empty()) {
    runs.emplace_back(o.objective, global_hull_solve(model.ops, ds, Objective::parse(o.objective)));
  } else {
    const int dof = parse_dof(o.dof, model);
    runs.emplace_back("lower", global_hull_solve(model.ops, ds, Objective::plus(dof)));
    runs.emplace_back("upper", global_hull_solve(model.ops, ds, Objective::minus(dof)));
    j["dof"] = dof;
    if (runs[0].second.final_feasible) j["lower"] = runs[0].second.u[dof];
    if (runs[1].second.final_feasible) j["upper"] = runs[1].second.u[dof];
  }
  bool ok = true;
  for (const auto& [what, r] : runs) ok = ok && r.final_feasible;
  if (o.format == "json") {
    for (const auto& [what, r] : runs) j["reports"][what] = to_json(r);
    write_json_file(out / "report.json", j);
  } else {
    auto os = open_csv(out / "globalhull.csv");
    os << "objective,feasible,objective_value\n";
    for (const auto& [what, r] : runs)
      os << what << ',' << (r.final_feasible ? 1 : 0) << ',' << format_double(r.objective) << '\n';
  }
  write_manifest(sub, out);
  for (const auto& [what, r] : runs)
    std::cout << what << ": " << (r.final_feasible ? "feasible" : "infeasible") << ", objective " << r.objective << '\n';
  return ok ? kExitOk : kExitNoConvergence;
}

// ---------------------------------------------------------------------------
// Sweep

struct Cell {
  double theta0 = 0.0;
  int nd = 0;
  double variance = 0.0;
  int outliers = 0;
  double factor = 1.0;
};

struct ReplicateRow {
  std::string status = "ok";
  int iterations = 0;
  std::optional<ErrorReport> err;
  std::optional<double> lower, comparable, upper;
  std::uint64_t seed = 0;
};

template <typename T>
std::vector<T> or_single(const std::vector<T>& list, T value) {
  return list.empty() ? std::vector<T>{value} : list;
}

std::string opt_num(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

int cmd_sweep(const Options& o, const CLI::App* sub) {
  const Model model = load_model(o);
  const GenSpec base = gen_spec(o);
  const SlpConfig cfg = slp_config(o);
  if (o.replicates < 1) throw InvalidArgument("--replicates must be positive");
  std::string ref_kind = o.reference;
  if (ref_kind == "none") {
    if (base.kind == GenKind::LinearNoisy) ref_kind = "linear";
    else if (base.kind == GenKind::CubeRootNoisy) ref_kind = "cuberoot";
    else if (base.kind == GenKind::Gauss6d) ref_kind = "elastic";
  }
  const bool ref_young_given = sub->count("--ref-young") > 0;
  const auto ref = reference_state(ref_kind, model, ref_young_given ? o.ref_young : o.young,
                                   sub->count("--ref-poisson") > 0 ? o.ref_poisson : o.poisson);
  const std::optional<int> dof = o.dof.empty() ? std::nullopt : std::optional<int>(parse_dof(o.dof, model));
  const fs::path out = prepare_out(o);

  std::vector<Cell> cells;
  for (double th : or_single(o.theta0_list, o.theta0))
    for (int nd : or_single(o.nd_list, o.nd))
      for (double var : or_single(o.variance_list, o.variance))
        for (int k : or_single(o.outlier_counts, o.outliers))
          for (double f : or_single(o.outlier_factors, o.outlier_factor)) cells.push_back({th, nd, var, k, f});

  const int reps = o.replicates;
  const int total = static_cast<int>(cells.size()) * reps;
  std::vector<ReplicateRow> rows(static_cast<std::size_t>(total));
  parallel_for(total, o.jobs, [&](int t) {
    const Cell& c = cells[static_cast<std::size_t>(t / reps)];
    const int rep = t % reps;
    ReplicateRow& row = rows[static_cast<std::size_t>(t)];
    row.seed = derive_seed(o.seed, static_cast<std::uint64_t>(rep));
    try {
      GenSpec g = base;
      g.theta0 = c.theta0;
      g.nd = c.nd;
      g.variance = c.variance;
      const DataSet ds = make_dataset(g, c.outliers, c.factor, o.seed, rep);
      SlpConfig rc = cfg;
      rc.jobs = 1;
      rc.seed = derive_seed(o.seed, static_cast<std::uint64_t>(rep), 2);
      Eigen::VectorXd u, strain, stress;
      if (o.method == "ddcm") {
        DdcmOptions opt;
        opt.max_sweeps = o.max_sweeps;
        opt.nn = rc.nn;
        opt.nn.seed = rc.seed;
        const DdcmResult r = ddcm_solve(model.ops, ds, opt);
        row.iterations = r.sweeps;
        if (!r.converged) row.status = "sweep_limit";
        u = r.u;
        strain = r.strain;
        stress = r.stress;
      } else {
        SolveReport main;
        if (dof) {
          const BoundsResult b = bounds(model.ops, ds, rc, *dof);
          row.lower = b.lower;
          row.comparable = b.comparable;
          row.upper = b.upper;
          main = b.comparable_report;
          for (const SolveReport* r : {&b.lower_report, &b.upper_report})
            if (failed(*r) && row.status == "ok") row.status = r->final_feasible ? "max_iter" : "infeasible";
        } else {
          main = slp_solve(model.ops, ds, rc);
        }
        row.iterations = main.iterations;
        if (failed(main)) row.status = main.final_feasible ? "max_iter" : "infeasible";
        u = main.u;
        strain = main.strain;
        stress = main.stress;
      }
      if (ref) row.err = compute_errors(u, strain, stress, ref->u, ref->strain, ref->stress, model.ops.num_members);
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
  });

  auto csv_field = [](std::string s) {
    for (char& ch : s)
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    return s;
  };
  auto os = open_csv(out / "sweep.csv");
  os << "row,theta0,nd,variance,outliers,factor,replicate,seed,status,iterations,u_re,sigma_rms,eps_rms,lower,"
        "comparable,upper,u_re_var,sigma_rms_var,eps_rms_var,count\n";
  json jrows = json::array(), jagg = json::array();
  int failures = 0;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& c = cells[ci];
    const std::string prefix = format_double(c.theta0) + ',' + std::to_string(c.nd) + ',' + format_double(c.variance) +
                               ',' + std::to_string(c.outliers) + ',' + format_double(c.factor) + ',';
    std::vector<double> ure, srms, erms;
    for (int rep = 0; rep < reps; ++rep) {
      const ReplicateRow& r = rows[ci * static_cast<std::size_t>(reps) + static_cast<std::size_t>(rep)];
      if (r.status != "ok") ++failures;
      if (r.err && r.status.rfind("error", 0) != 0) {
        ure.push_back(r.err->u_re);
        srms.push_back(r.err->sigma_rms);
        erms.push_back(r.err->eps_rms);
      }
      os << "replicate," << prefix << rep << ',' << r.seed << ',' << csv_field(r.status) << ',' << r.iterations << ','
         << (r.err ? format_double(r.err->u_re) : "") << ',' << (r.err ? format_double(r.err->sigma_rms) : "") << ','
         << (r.err ? format_double(r.err->eps_rms) : "") << ',' << opt_num(r.lower) << ',' << opt_num(r.comparable)
         << ',' << opt_num(r.upper) << ",,,,\n";
      json jr{{"theta0", c.theta0}, {"nd", c.nd},         {"variance", c.variance}, {"outliers", c.outliers},
              {"factor", c.factor}, {"replicate", rep},   {"seed", r.seed},         {"status", r.status},
              {"iterations", r.iterations}};
      if (r.err) jr["metrics"] = metrics_json(*r.err);
      if (r.lower) jr.update({{"lower", *r.lower}, {"comparable", *r.comparable}, {"upper", *r.upper}});
      jrows.push_back(jr);
    }
    auto stat = [](const std::vector<double>& v, bool var) {
      return v.empty() ? std::string() : format_double(var ? variance(v) : mean(v));
    };
    os << "aggregate," << prefix << ",,,," << stat(ure, false) << ',' << stat(srms, false) << ',' << stat(erms, false)
       << ",,,," << stat(ure, true) << ',' << stat(srms, true) << ',' << stat(erms, true) << ',' << ure.size() << '\n';
    json ja{{"theta0", c.theta0}, {"nd", c.nd}, {"variance", c.variance}, {"outliers", c.outliers}, {"factor", c.factor},
            {"count", ure.size()}};
    if (!ure.empty())
      ja.update({{"u_re_mean", mean(ure)},
                 {"u_re_var", variance(ure)},
                 {"sigma_rms_mean", mean(srms)},
                 {"sigma_rms_var", variance(srms)},
                 {"eps_rms_mean", mean(erms)},
                 {"eps_rms_var", variance(erms)}});
    jagg.push_back(ja);
  }
  if (o.format == "json") write_json_file(out / "sweep.json", {{"replicates", jrows}, {"aggregates", jagg}});
  write_manifest(sub, out);
  std::cout << "sweep: " << cells.size() << " cells x " << reps << " replicates, " << failures
            << " replicates flagged\n"
            << (out / "sweep.csv").string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven bar and continuum solver built on sequential linear programming"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "JSON file with option values or a manifest from an earlier run; flags win");
  app.config_formatter(std::make_shared<cli::JsonConfig>(&app));
  app.allow_config_extras(false);
  Options o;

  auto* gen = app.add_subcommand("gen", "Generate a dataset (CSV plus JSON sidecar)");
  add_output_options(gen, o);
  add_gen_options(gen, o, true);
  gen->add_option("--name", o.name, "File stem of the dataset");

  auto* solve = app.add_subcommand("solve", "Run the SLP solver for one objective");
  auto* bnd = app.add_subcommand("bounds", "Lower, comparable and upper solutions for one dof");
  auto* base = app.add_subcommand("baseline", "Classic distance-minimising data-driven solver");
  auto* hull = app.add_subcommand("globalhull", "One LP over the convex hull of the whole dataset");
  auto* sweep = app.add_subcommand("sweep", "Replicated experiments over a parameter grid");
  for (auto* sub : {solve, bnd, base, hull, sweep}) {
    add_output_options(sub, o);
    add_model_options(sub, o);
  }
  for (auto* sub : {solve, bnd, base, hull}) sub->add_option("--data", o.data, "Dataset CSV");
  for (auto* sub : {solve, bnd, sweep}) add_slp_options(sub, o);
  for (auto* sub : {solve, bnd, hull, sweep})
    sub->add_option("--objective", o.objective, "compliance, plus:<dof> or minus:<dof>");
  for (auto* sub : {bnd, hull, sweep}) sub->add_option("--dof", o.dof, "Free dof index, or 'tip' for the cantilever");
  for (auto* sub : {solve, base, sweep}) add_reference_options(sub, o);
  base->add_option("--max-sweeps", o.max_sweeps, "Sweep limit")->check(CLI::PositiveNumber);
  add_nn_options(base, o);
  sweep->add_option("--max-sweeps", o.max_sweeps, "Sweep limit of the ddcm method")->check(CLI::PositiveNumber);

  add_gen_options(sweep, o, true);
  sweep->add_option("--replicates", o.replicates, "Replicates per grid cell")->check(CLI::PositiveNumber);
  sweep->add_option("--method", o.method, "Solver")->check(CLI::IsMember({"slp", "ddcm"}));
  sweep->add_option("--theta0-list", o.theta0_list, "Grid over --theta0")->delimiter(',');
  sweep->add_option("--nd-list", o.nd_list, "Grid over --nd")->delimiter(',');
  sweep->add_option("--variance-list", o.variance_list, "Grid over --variance")->delimiter(',');
  sweep->add_option("--outlier-counts", o.outlier_counts, "Grid over --outliers")->delimiter(',');
  sweep->add_option("--outlier-factors", o.outlier_factors, "Grid over --outlier-factor")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(o, gen);
    if (solve->parsed()) return cmd_solve(o, solve);
    if (bnd->parsed()) return cmd_bounds(o, bnd);
    if (base->parsed()) return cmd_baseline(o, base);
    if (hull->parsed()) return cmd_globalhull(o, hull);
    if (sweep->parsed()) return cmd_sweep(o, sweep);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SizingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MeshError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
