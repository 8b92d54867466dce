// Experiment driver: parses a JSON config, runs one of the five tasks, and
// writes CSV artifacts plus a meta.json with run parameters and timings.
// Everything stochastic derives from the single --seed, so re-running a
// command with the same config and seed reproduces every CSV byte for byte
// (timings live only in meta.json).

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "distlqr/bound.hpp"
#include "distlqr/csv.hpp"
#include "distlqr/errors.hpp"
#include "distlqr/lqr.hpp"
#include "distlqr/mc.hpp"
#include "distlqr/optimizer.hpp"
#include "distlqr/return_dist.hpp"
#include "distlqr/risk.hpp"
#include "distlqr/rng.hpp"
#include "distlqr/system.hpp"

namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON access helpers. Validation is strict: every object is checked against
// its full key list, so typos fail loudly instead of silently using defaults.

void require_keys(const json& obj, const std::string& ctx,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw ConfigError(ctx + ": expected an object");
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError(ctx + ": unknown key \"" + item.key() + "\"");
    }
  }
}

const json& need(const json& obj, const char* key, const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(ctx + ": missing required key \"" + key + "\"");
  }
  return *it;
}

double need_number(const json& obj, const char* key, const std::string& ctx) {
  const json& v = need(obj, key, ctx);
  if (!v.is_number()) {
    throw ConfigError(ctx + "." + key + ": expected a number");
  }
  return v.get<double>();
}

int need_int(const json& obj, const char* key, const std::string& ctx) {
  const json& v = need(obj, key, ctx);
  if (!v.is_number_integer()) {
    throw ConfigError(ctx + "." + key + ": expected an integer");
  }
  return v.get<int>();
}

int int_or(const json& obj, const char* key, int fallback,
           const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    return fallback;
  }
  if (!it->is_number_integer()) {
    throw ConfigError(ctx + "." + key + ": expected an integer");
  }
  return it->get<int>();
}

double number_or(const json& obj, const char* key, double fallback,
                 const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    return fallback;
  }
  if (!it->is_number()) {
    throw ConfigError(ctx + "." + key + ": expected a number");
  }
  return it->get<double>();
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ConfigError(ctx + ": expected a matrix as an array of row arrays");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  if (cols == 0) {
    throw ConfigError(ctx + ": rows must be nonempty");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(ctx + ": ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& cell = row[static_cast<std::size_t>(k)];
      if (!cell.is_number()) {
        throw ConfigError(ctx + ": entries must be numbers");
      }
      m(i, k) = cell.get<double>();
    }
  }
  return m;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(ctx + ": expected a nonempty numeric array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const json& cell = j[static_cast<std::size_t>(i)];
    if (!cell.is_number()) {
      throw ConfigError(ctx + ": entries must be numbers");
    }
    v(i) = cell.get<double>();
  }
  return v;
}

// Accepts a single integer or an array of integers.
std::vector<int> parse_int_list(const json& j, const std::string& ctx) {
  std::vector<int> out;
  if (j.is_number_integer()) {
    out.push_back(j.get<int>());
    return out;
  }
  if (!j.is_array() || j.empty()) {
    throw ConfigError(ctx + ": expected an integer or a nonempty array");
  }
  for (const json& cell : j) {
    if (!cell.is_number_integer()) {
      throw ConfigError(ctx + ": entries must be integers");
    }
    out.push_back(cell.get<int>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config model.

struct OutputSpec {
  std::filesystem::path directory = ".";
  std::string prefix;
};

struct Experiment {
  distlqr::LinearSystem sys;
  distlqr::NoiseModel noise;
  json task;
  OutputSpec out;
};

distlqr::NoiseModel parse_noise(const json& j) {
  require_keys(j, "noise",
               {"kind", "mean", "covariance", "lower", "upper", "point",
                "sigma0_sq", "mu0"});
  const json& kind_v = need(j, "kind", "noise");
  if (!kind_v.is_string()) {
    throw ConfigError("noise.kind: expected a string");
  }
  const std::string kind = kind_v.get<std::string>();
  distlqr::NoiseModel model = [&] {
    if (kind == "gaussian") {
      return distlqr::NoiseModel::gaussian(
          parse_vector(need(j, "mean", "noise"), "noise.mean"),
          parse_matrix(need(j, "covariance", "noise"), "noise.covariance"));
    }
    if (kind == "uniform_box") {
      return distlqr::NoiseModel::uniform_box(
          parse_vector(need(j, "lower", "noise"), "noise.lower"),
          parse_vector(need(j, "upper", "noise"), "noise.upper"));
    }
    if (kind == "degenerate") {
      return distlqr::NoiseModel::degenerate(
          parse_vector(need(j, "point", "noise"), "noise.point"));
    }
    throw ConfigError("noise.kind: must be gaussian, uniform_box, or degenerate");
  }();
  if (j.contains("sigma0_sq") || j.contains("mu0")) {
    model.set_moment_bounds(
        number_or(j, "sigma0_sq", model.sigma0_sq(), "noise"),
        number_or(j, "mu0", model.mu0(), "noise"));
  }
  return model;
}

Experiment parse_config(const json& root) {
  require_keys(root, "config", {"system", "noise", "task", "output"});
  const json& sys_j = need(root, "system", "config");
  require_keys(sys_j, "system", {"A", "B", "Q", "R", "gamma"});

  distlqr::LinearSystem sys = distlqr::LinearSystem::make(
      parse_matrix(need(sys_j, "A", "system"), "system.A"),
      parse_matrix(need(sys_j, "B", "system"), "system.B"),
      parse_matrix(need(sys_j, "Q", "system"), "system.Q"),
      parse_matrix(need(sys_j, "R", "system"), "system.R"),
      need_number(sys_j, "gamma", "system"));

  distlqr::NoiseModel noise = parse_noise(need(root, "noise", "config"));
  if (noise.dim() != sys.state_dim()) {
    throw ConfigError("noise: dimension does not match the state dimension");
  }

  OutputSpec out;
  if (root.contains("output")) {
    const json& out_j = root["output"];
    require_keys(out_j, "output", {"directory", "prefix"});
    if (out_j.contains("directory")) {
      out.directory = out_j["directory"].get<std::string>();
    }
    if (out_j.contains("prefix")) {
      out.prefix = out_j["prefix"].get<std::string>();
    }
  }

  return Experiment{std::move(sys), std::move(noise),
                    need(root, "task", "config"), std::move(out)};
}

// ---------------------------------------------------------------------------
// Shared plumbing for the commands.

struct RunContext {
  std::uint64_t seed = 0;
  bool check = false;
  std::filesystem::path out_dir;
  std::string prefix;
  json meta;                       // accumulated run metadata
  std::vector<std::string> files;  // artifacts written
  std::chrono::steady_clock::time_point started =
      std::chrono::steady_clock::now();

  std::filesystem::path path_for(const std::string& name) const {
    return out_dir / (prefix + name);
  }

  void write_csv(const std::string& name,
                 const std::vector<std::vector<std::string>>& rows) {
    const auto path = path_for(name);
    distlqr::write_text_atomic(path, distlqr::csv_document(rows));
    files.push_back(path.string());
    std::cout << "wrote " << path.string() << "\n";
  }

  void finish(const std::string& command) {
    meta["command"] = command;
    meta["seed"] = seed;
    meta["files"] = files;
    meta["elapsed_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started)
            .count();
    const auto path = path_for("meta.json");
    distlqr::write_text_atomic(path, meta.dump(2) + "\n");
    std::cout << "wrote " << path.string() << "\n";
  }
};

struct ResolvedGain {
  distlqr::FeedbackGain K;
  distlqr::ValueCertificate cert;
  bool optimal = false;
};

// task.gain is either the string "optimal" (Riccati) or an explicit matrix
// (policy evaluation via the fixed-gain equation).
ResolvedGain resolve_gain(const distlqr::LinearSystem& sys, const json& task,
                          const std::string& ctx) {
  ResolvedGain out;
  const auto it = task.find("gain");
  if (it == task.end() || (it->is_string() && *it == "optimal")) {
    auto [cert, K] = distlqr::solve_riccati(sys);
    out.K = std::move(K);
    out.cert = std::move(cert);
    out.optimal = true;
    return out;
  }
  if (it->is_string()) {
    throw ConfigError(ctx + ".gain: string form must be \"optimal\"");
  }
  out.K.K = parse_matrix(*it, ctx + ".gain");
  out.cert = distlqr::solve_lyapunov(sys, out.K);
  return out;
}

std::vector<std::string> matrix_headers(const std::string& stem,
                                        const Eigen::MatrixXd& m) {
  std::vector<std::string> h;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      h.push_back(stem + "_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  return h;
}

void append_matrix_row(std::vector<std::string>& row,
                       const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(distlqr::format_double(m(i, j)));
    }
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// solve: P, K, residual, iterations, stability flags in one CSV row.

int cmd_solve(const Experiment& ex, RunContext& ctx) {
  require_keys(ex.task, "task", {"gain"});
  const ResolvedGain g = resolve_gain(ex.sys, ex.task, "task");
  const distlqr::ClosedLoop cl = distlqr::close_loop(ex.sys, g.K);
  const distlqr::StabilityFlags flags =
      distlqr::stability_flags(cl, ex.sys.gamma);

  if (ctx.check) {
    std::cout << "config ok: solve\n";
    return 0;
  }

  std::vector<std::string> header = matrix_headers("P", g.cert.P);
  const auto k_headers = matrix_headers("K", g.K.K);
  header.insert(header.end(), k_headers.begin(), k_headers.end());
  header.insert(header.end(),
                {"residual", "iterations", "mean_square_stable",
                 "norm_contractive", "discount_contractive"});

  std::vector<std::string> row;
  append_matrix_row(row, g.cert.P);
  append_matrix_row(row, g.K.K);
  row.push_back(distlqr::format_double(g.cert.residual));
  row.push_back(std::to_string(g.cert.iterations));
  row.push_back(flags.mean_square_stable ? "1" : "0");
  row.push_back(flags.norm_contractive ? "1" : "0");
  row.push_back(flags.discount_contractive ? "1" : "0");

  ctx.write_csv("solve.csv", {header, row});
  ctx.meta["gain"] = g.optimal ? json("optimal") : matrix_to_json(g.K.K);
  ctx.meta["rho_K"] = cl.rho_K;
  ctx.meta["spectral_radius"] = cl.spectral_radius;
  ctx.finish("solve");
  return 0;
}

// ---------------------------------------------------------------------------
// dist: histogram + raw samples per truncation depth, optional MC reference.

void write_distribution_files(RunContext& ctx, const std::string& stem,
                              const distlqr::EmpiricalDistribution& d,
                              int bins,
                              std::optional<std::pair<double, double>> range) {
  const auto hist = distlqr::histogram(d, bins, range);
  std::vector<std::vector<std::string>> hist_rows;
  hist_rows.push_back({"bin_center", "frequency"});
  for (const auto& bin : hist) {
    hist_rows.push_back({distlqr::format_double(bin.center),
                         distlqr::format_double(bin.frequency)});
  }
  ctx.write_csv(stem + ".csv", hist_rows);

  std::vector<std::vector<std::string>> sample_rows;
  sample_rows.push_back({"value"});
  for (double v : d.samples()) {
    sample_rows.push_back({distlqr::format_double(v)});
  }
  ctx.write_csv(stem + "_samples.csv", sample_rows);
}

int cmd_dist(const Experiment& ex, RunContext& ctx) {
  require_keys(ex.task, "task",
               {"gain", "x", "N", "M", "bins", "range", "mc_horizon"});
  const Eigen::VectorXd x =
      parse_vector(need(ex.task, "x", "task"), "task.x");
  const std::vector<int> depths =
      parse_int_list(need(ex.task, "N", "task"), "task.N");
  const int samples = int_or(ex.task, "M", 10000, "task");
  const int bins = int_or(ex.task, "bins", 60, "task");
  std::optional<std::pair<double, double>> range;
  if (ex.task.contains("range")) {
    const Eigen::VectorXd r = parse_vector(ex.task["range"], "task.range");
    if (r.size() != 2) {
      throw ConfigError("task.range: expected [lo, hi]");
    }
    range = std::make_pair(r(0), r(1));
  }

  const ResolvedGain g = resolve_gain(ex.sys, ex.task, "task");

  if (ctx.check) {
    for (int N : depths) {
      distlqr::ReturnModel model(ex.sys, g.K, g.cert, ex.noise, N);
    }
    std::cout << "config ok: dist\n";
    return 0;
  }

  // One parent stream for every depth: draw m's noise prefix is shared
  // across the N values, so the histograms differ only by truncation.
  const distlqr::RngStream parent =
      distlqr::RngStream(ctx.seed).substream("dist", 0);
  json stats = json::object();
  for (int N : depths) {
    const distlqr::ReturnModel model(ex.sys, g.K, g.cert, ex.noise, N);
    const distlqr::EmpiricalDistribution d =
        distlqr::build_empirical(model, x, samples, parent);
    write_distribution_files(ctx, "dist_N" + std::to_string(N), d, bins,
                             range);
    stats["N" + std::to_string(N)] = {
        {"mean", d.mean()}, {"min", d.min()}, {"max", d.max()}};
  }

  if (ex.task.contains("mc_horizon")) {
    const int horizon = need_int(ex.task, "mc_horizon", "task");
    const distlqr::EmpiricalDistribution d = distlqr::build_mc_distribution(
        ex.sys, g.K, ex.noise, x, {horizon, samples},
        distlqr::RngStream(ctx.seed).substream("mc", 0));
    write_distribution_files(ctx, "dist_mc", d, bins, range);
    stats["mc"] = {{"horizon", horizon},
                   {"mean", d.mean()},
                   {"min", d.min()},
                   {"max", d.max()}};
  }

  ctx.meta["M"] = samples;
  ctx.meta["bins"] = bins;
  ctx.meta["N"] = depths;
  ctx.meta["stats"] = stats;
  ctx.finish("dist");
  return 0;
}

// ---------------------------------------------------------------------------
// compare: KS distance to a reference distribution over a sweep of N, with
// the geometric CDF bound alongside where its hypotheses hold.

int cmd_compare(const Experiment& ex, RunContext& ctx) {
  require_keys(ex.task, "task", {"gain", "x", "N", "M", "reference"});
  const Eigen::VectorXd x =
      parse_vector(need(ex.task, "x", "task"), "task.x");
  const std::vector<int> depths =
      parse_int_list(need(ex.task, "N", "task"), "task.N");
  const int samples = int_or(ex.task, "M", 10000, "task");

  const json& ref = need(ex.task, "reference", "task");
  require_keys(ref, "task.reference", {"kind", "horizon", "N"});
  const json& ref_kind_v = need(ref, "kind", "task.reference");
  if (!ref_kind_v.is_string()) {
    throw ConfigError("task.reference.kind: expected a string");
  }
  const std::string ref_kind = ref_kind_v.get<std::string>();
  if (ref_kind != "mc" && ref_kind != "truncation") {
    throw ConfigError("task.reference.kind: must be mc or truncation");
  }
  if (ref_kind == "mc" ? ref.contains("N") : ref.contains("horizon")) {
    throw ConfigError("task.reference: mc takes horizon, truncation takes N");
  }

  const ResolvedGain g = resolve_gain(ex.sys, ex.task, "task");
  const distlqr::ClosedLoop cl = distlqr::close_loop(ex.sys, g.K);
  const distlqr::StabilityFlags flags =
      distlqr::stability_flags(cl, ex.sys.gamma);

  if (ctx.check) {
    if (ref_kind == "mc") {
      need_int(ref, "horizon", "task.reference");
    } else {
      need_int(ref, "N", "task.reference");
    }
    std::cout << "config ok: compare\n";
    return 0;
  }

  // The sweep and a truncation reference share one parent stream, so draw m
  // is the same trajectory at every depth; the measured KS distance then
  // reflects truncation alone rather than independent-sample noise.
  const distlqr::RngStream parent =
      distlqr::RngStream(ctx.seed).substream("sweep", 0);

  distlqr::EmpiricalDistribution reference = [&] {
    if (ref_kind == "mc") {
      const int horizon = need_int(ref, "horizon", "task.reference");
      return distlqr::build_mc_distribution(
          ex.sys, g.K, ex.noise, x, {horizon, samples},
          distlqr::RngStream(ctx.seed).substream("reference", 0));
    }
    const int ref_depth = need_int(ref, "N", "task.reference");
    const distlqr::ReturnModel model(ex.sys, g.K, g.cert, ex.noise,
                                     ref_depth);
    return distlqr::build_empirical(model, x, samples, parent);
  }();

  // The bound needs a density scale for the reference law; a histogram peak
  // estimate keeps the column honest without claiming an exact constant.
  const bool bound_ok =
      flags.norm_contractive && flags.discount_contractive;
  distlqr::BoundInputs bound_inputs;
  if (bound_ok) {
    bound_inputs = distlqr::BoundInputs{
        g.cert,           cl.rho_K,
        ex.sys.gamma,     x,
        ex.noise.sigma0_sq(), ex.noise.mu0(),
        distlqr::estimate_density_max(reference)};
    ctx.meta["L0_estimate"] = *bound_inputs.L0;
  }

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"N", "ks_to_reference", "bound_at_N"});
  for (int N : depths) {
    const distlqr::ReturnModel model(ex.sys, g.K, g.cert, ex.noise, N);
    const distlqr::EmpiricalDistribution d =
        distlqr::build_empirical(model, x, samples, parent);
    const double ks = distlqr::ks_distance(d, reference);
    std::vector<std::string> row{std::to_string(N),
                                 distlqr::format_double(ks)};
    if (bound_ok && N >= 1) {
      row.push_back(
          distlqr::format_double(distlqr::bound_at(bound_inputs, N)));
    } else {
      row.push_back("");
    }
    rows.push_back(std::move(row));
  }

  ctx.write_csv("ks_vs_N.csv", rows);
  ctx.meta["M"] = samples;
  ctx.meta["reference"] = ref;
  ctx.finish("compare");
  return 0;
}

// ---------------------------------------------------------------------------
// bound: the truncation bound over a sweep of N.

int cmd_bound(const Experiment& ex, RunContext& ctx) {
  require_keys(ex.task, "task", {"gain", "x", "N", "L0", "M", "reference_N"});
  const Eigen::VectorXd x =
      parse_vector(need(ex.task, "x", "task"), "task.x");
  const std::vector<int> depths =
      parse_int_list(need(ex.task, "N", "task"), "task.N");

  const ResolvedGain g = resolve_gain(ex.sys, ex.task, "task");
  const distlqr::ClosedLoop cl = distlqr::close_loop(ex.sys, g.K);

  distlqr::BoundInputs inputs{g.cert,       cl.rho_K,
                              ex.sys.gamma, x,
                              ex.noise.sigma0_sq(), ex.noise.mu0(),
                              std::nullopt};

  bool estimated_L0 = false;
  if (ex.task.contains("L0")) {
    const json& l0 = ex.task["L0"];
    if (l0.is_string()) {
      if (l0 != "estimate") {
        throw ConfigError("task.L0: string form must be \"estimate\"");
      }
      estimated_L0 = true;
    } else if (l0.is_number()) {
      inputs.L0 = l0.get<double>();
    } else {
      throw ConfigError("task.L0: expected a number or \"estimate\"");
    }
  }

  if (ctx.check) {
    distlqr::bound_constant(inputs);  // surfaces hypothesis violations
    std::cout << "config ok: bound\n";
    return 0;
  }

  if (estimated_L0) {
    const int samples = int_or(ex.task, "M", 100000, "task");
    const int ref_depth = int_or(ex.task, "reference_N", 200, "task");
    const distlqr::ReturnModel model(ex.sys, g.K, g.cert, ex.noise,
                                     ref_depth);
    const distlqr::EmpiricalDistribution d = distlqr::build_empirical(
        model, x, samples,
        distlqr::RngStream(ctx.seed).substream("bound", 0));
    inputs.L0 = distlqr::estimate_density_max(d);
    ctx.meta["L0_estimate"] = *inputs.L0;
    ctx.meta["L0_reference_N"] = ref_depth;
    ctx.meta["L0_M"] = samples;
  }

  const distlqr::BoundConstant c = distlqr::bound_constant(inputs);
  const bool scaled = c.C.has_value();

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"N", scaled ? "bound" : "bound_over_L0"});
  for (int N : depths) {
    rows.push_back({std::to_string(N),
                    distlqr::format_double(distlqr::bound_at(inputs, N))});
  }
  ctx.write_csv("bound.csv", rows);

  ctx.meta["C_over_L0"] = c.C_over_L0;
  if (c.C) {
    ctx.meta["C"] = *c.C;
  }
  ctx.meta["rho_K"] = cl.rho_K;
  ctx.meta["sigma0_sq"] = ex.noise.sigma0_sq();
  ctx.meta["mu0"] = ex.noise.mu0();
  ctx.finish("bound");
  return 0;
}

// ---------------------------------------------------------------------------
// optimize: the zeroth-order policy search over one or more seeds.

int cmd_optimize(const Experiment& ex, RunContext& ctx) {
  require_keys(ex.task, "task",
               {"K0", "x", "N", "M", "alpha", "eta", "delta", "episodes",
                "seeds", "crn"});
  const Eigen::VectorXd x =
      parse_vector(need(ex.task, "x", "task"), "task.x");
  const distlqr::FeedbackGain K0{
      parse_matrix(need(ex.task, "K0", "task"), "task.K0")};

  distlqr::PGConfig cfg;
  cfg.eta = need_number(ex.task, "eta", "task");
  cfg.delta = need_number(ex.task, "delta", "task");
  cfg.episodes = need_int(ex.task, "episodes", "task");
  cfg.truncation = need_int(ex.task, "N", "task");
  cfg.samples = int_or(ex.task, "M", 20000, "task");
  cfg.alpha = number_or(ex.task, "alpha", 1.0, "task");
  if (ex.task.contains("crn")) {
    if (!ex.task["crn"].is_boolean()) {
      throw ConfigError("task.crn: expected a boolean");
    }
    cfg.crn = ex.task["crn"].get<bool>();
  }

  const json& seeds_j = need(ex.task, "seeds", "task");
  if (!seeds_j.is_array() || seeds_j.empty()) {
    throw ConfigError("task.seeds: expected a nonempty array of integers");
  }
  std::vector<std::uint64_t> run_seeds;
  for (const json& s : seeds_j) {
    if (!s.is_number_integer()) {
      throw ConfigError("task.seeds: entries must be integers");
    }
    run_seeds.push_back(s.get<std::uint64_t>());
  }

  if (ctx.check) {
    // Validates the search config and the stability of K0 without the
    // sampling work of a real run.
    distlqr::PGConfig probe = cfg;
    probe.episodes = 0;
    probe.samples = 1;
    distlqr::run_policy_search(ex.sys, ex.noise, x, K0, probe);
    std::cout << "config ok: optimize\n";
    return 0;
  }

  const distlqr::RngStream root(ctx.seed);

  const auto trace_rows =
      [&](const distlqr::OptimizerTrace& trace) {
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header{"t"};
        const auto k_headers = matrix_headers("K", K0.K);
        header.insert(header.end(), k_headers.begin(), k_headers.end());
        header.insert(header.end(), {"objective", "grad_norm",
                                     "stability_resamples", "step_halvings"});
        rows.push_back(std::move(header));
        for (const auto& rec : trace.episodes) {
          std::vector<std::string> row{std::to_string(rec.t)};
          append_matrix_row(row, rec.K);
          row.push_back(distlqr::format_double(rec.objective));
          row.push_back(distlqr::format_double(rec.g.norm()));
          row.push_back(std::to_string(rec.stability_resamples));
          row.push_back(std::to_string(rec.step_halvings));
          rows.push_back(std::move(row));
        }
        return rows;
      };

  std::vector<distlqr::OptimizerTrace> traces;
  json per_seed = json::object();
  for (std::uint64_t s : run_seeds) {
    distlqr::PGConfig run_cfg = cfg;
    run_cfg.seed = root.substream("run", s).key();
    try {
      traces.push_back(
          distlqr::run_policy_search(ex.sys, ex.noise, x, K0, run_cfg));
    } catch (const distlqr::StabilityBoundaryError& e) {
      // Keep what the failed run produced, then surface the failure.
      ctx.write_csv("trace_" + std::to_string(s) + ".csv",
                    trace_rows(e.trace()));
      ctx.finish("optimize");
      throw;
    }
    const distlqr::OptimizerTrace& trace = traces.back();
    ctx.write_csv("trace_" + std::to_string(s) + ".csv", trace_rows(trace));
    per_seed[std::to_string(s)] = {
        {"final_K", matrix_to_json(trace.final_K)},
        {"final_objective", trace.episodes.empty()
                                ? trace.bootstrap_objective
                                : trace.episodes.back().objective}};
  }

  // Seed-averaged iterate and objective per episode.
  std::vector<std::vector<std::string>> summary;
  {
    std::vector<std::string> header{"t"};
    const auto k_headers = matrix_headers("K", K0.K);
    header.insert(header.end(), k_headers.begin(), k_headers.end());
    header.push_back("objective");
    summary.push_back(std::move(header));
  }
  const double inv = 1.0 / static_cast<double>(traces.size());
  for (int t = 0; t < cfg.episodes; ++t) {
    Eigen::MatrixXd k_mean = Eigen::MatrixXd::Zero(K0.K.rows(), K0.K.cols());
    double obj_mean = 0.0;
    for (const auto& trace : traces) {
      const auto& rec = trace.episodes[static_cast<std::size_t>(t)];
      k_mean += rec.K;
      obj_mean += rec.objective;
    }
    k_mean *= inv;
    obj_mean *= inv;
    std::vector<std::string> row{std::to_string(t + 1)};
    append_matrix_row(row, k_mean);
    row.push_back(distlqr::format_double(obj_mean));
    summary.push_back(std::move(row));
  }
  ctx.write_csv("summary.csv", summary);

  Eigen::MatrixXd final_mean = Eigen::MatrixXd::Zero(K0.K.rows(), K0.K.cols());
  for (const auto& trace : traces) {
    final_mean += trace.final_K;
  }
  final_mean *= inv;

  ctx.meta["per_seed"] = per_seed;
  ctx.meta["final_K_mean"] = matrix_to_json(final_mean);
  ctx.meta["episodes"] = cfg.episodes;
  ctx.meta["M"] = cfg.samples;
  ctx.meta["alpha"] = cfg.alpha;
  ctx.meta["crn"] = cfg.crn;
  ctx.finish("optimize");
  return 0;
}

// ---------------------------------------------------------------------------

int dispatch(const std::string& command, const std::string& config_path,
             RunContext& ctx) {
  std::ifstream in(config_path);
  if (!in) {
    throw distlqr::IoError("cannot read config file: " + config_path);
  }
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  Experiment ex = parse_config(root);
  if (ctx.out_dir.empty()) {  // --out, when given, wins over the config
    ctx.out_dir = ex.out.directory;
  }
  ctx.prefix = ex.out.prefix;
  if (!ctx.check) {
    std::filesystem::create_directories(ctx.out_dir);
  }

  if (command == "solve") return cmd_solve(ex, ctx);
  if (command == "dist") return cmd_dist(ex, ctx);
  if (command == "compare") return cmd_compare(ex, ctx);
  if (command == "bound") return cmd_bound(ex, ctx);
  if (command == "optimize") return cmd_optimize(ex, ctx);
  throw ConfigError("unknown command: " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributional LQR toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  RunContext ctx;

  for (const char* name :
       {"solve", "dist", "compare", "optimize", "bound"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "path to the JSON config")
        ->required();
    sub->add_option("--seed", ctx.seed, "root seed for every random stream");
    sub->add_option("--out", ctx.out_dir,
                    "output directory (overrides the config)");
    sub->add_flag("--check", ctx.check,
                  "validate the config and required hypotheses, run nothing");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return dispatch(command, config_path, ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const distlqr::NonConvergenceError& e) {
    std::cerr << "solver error: " << e.what()
              << " (last residual " << e.last_residual << ")\n";
    return 3;
  } catch (const distlqr::StabilityBoundaryError& e) {
    std::cerr << "stability error: " << e.what() << "\n";
    return 4;
  } catch (const distlqr::UnstableGainError& e) {
    std::cerr << "stability error: " << e.what() << "\n";
    return 4;
  } catch (const distlqr::HypothesisError& e) {
    std::cerr << "hypothesis error: " << e.what() << "\n";
    return 4;
  } catch (const distlqr::InvalidArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const distlqr::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const distlqr::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 5;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 5;
  } catch (const distlqr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
