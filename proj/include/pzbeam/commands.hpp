#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pzbeam/analysis.hpp"
#include "pzbeam/config.hpp"
#include "pzbeam/discretization.hpp"
#include "pzbeam/error.hpp"
#include "pzbeam/integrator.hpp"
#include "pzbeam/io.hpp"
#include "pzbeam/model.hpp"
#include "pzbeam/stationary.hpp"

namespace pzbeam {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitSolverFailure = 3,
  kExitCheckFailure = 4,
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate",      "stationary", "validate", "quasi-stability",
                                                 "eps-lipschitz", "attractor",  "sweep",    "eigen",
                                                 "continuous-dependence"};
  return names;
}

/// Initial state named by the config's `initial` block.
inline State initial_state(const RunConfig& cfg, const Grid& grid) {
  const auto& init = cfg.initial;
  if (init.kind == "random") return random_state(grid, cfg.seed, init.amplitude);
  if (init.kind == "checkpoint") return load_checkpoint(init.path, grid);
  State z = State::zero(grid);
  if (init.kind == "mode") {
    z.v = sample(grid, [&](double x) { return init.amplitude * std::sin(0.5 * std::numbers::pi * x / grid.length()); });
    z.p = z.v;
  }
  return z;
}

namespace detail {

inline const char* module_of(const std::string& command) {
  if (command == "simulate") return "integrator";
  if (command == "stationary") return "stationary";
  if (command == "validate") return "model";
  if (command == "eigen") return "discretization";
  return "analysis";
}

struct RunContext {
  const RunConfig& cfg;
  BeamSystem sys;
  StepConfig step;
  double lambda1_discrete;
  DerivedConstants dc;  // built on the discrete eigenvalue
  OutputDir& out;
  nlohmann::json checks = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
};

inline nlohmann::json derived_json(const DerivedConstants& dc) {
  return {{"alpha", dc.alpha}, {"lambda1", dc.lambda1}, {"kappa", dc.kappa},
          {"beta1", dc.beta1}, {"beta2", dc.beta2},     {"C_F", dc.C_F}};
}

inline nlohmann::json nonlinearity_json(const Nonlinearity& nl) {
  const auto& c = nl.constants;
  return {{"name", nl.name},
          {"diagnostics_only", nl.diagnostics_only},
          {"beta0", c.beta0},
          {"m_F", c.m_F},
          {"C_f", c.C_f},
          {"r", c.r},
          {"growth", c.growth},
          {"m", c.m},
          {"M1", c.M1},
          {"q", c.q},
          {"M2", c.M2 ? nlohmann::json(*c.M2) : nlohmann::json(nullptr)},
          {"l", c.l ? nlohmann::json(*c.l) : nlohmann::json(nullptr)}};
}

inline void run_simulate(RunContext& ctx) {
  const Grid& g = ctx.sys.grid;
  SimulateOptions opts;
  opts.snapshot_every = ctx.cfg.simulate.snapshot_every;
  const State z0 = initial_state(ctx.cfg, g);
  const SimulationResult sim = simulate(ctx.sys, z0, ctx.cfg.simulate.T, ctx.step, opts);

  CsvTable energy({"t", "E", "total_E", "dissipation"});
  for (const auto& s : sim.series) energy.row({s.t, s.E, s.total_E, s.dissipation});
  ctx.out.write("energy.csv", energy.str());
  ctx.out.write("final_state.csv", state_csv(g, sim.final_state));
  for (std::size_t i = 0; i < sim.snapshots.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof name, "snapshots/snapshot_%06zu.csv", i);
    ctx.out.write(name, state_csv(g, sim.snapshots[i]));
  }

  const double hn = ctx.sys.forcing_norm_sq();
  const double upper = energy_upper_constant(ctx.sys.params, ctx.sys.nl.constants, ctx.dc, hn);
  const double r = ctx.sys.nl.constants.r;
  double worst_increase = 0.0, worst_lower = -HUGE_VAL, worst_upper = -HUGE_VAL;
  for (std::size_t i = 0; i < sim.series.size(); ++i) {
    const auto& s = sim.series[i];
    if (i > 0) worst_increase = std::max(worst_increase, s.total_E - sim.series[i - 1].total_E);
    const double norm_sq = 2.0 * s.E;
    worst_lower = std::max(worst_lower, ctx.dc.beta2 * norm_sq - ctx.dc.C_F - s.total_E);
    worst_upper = std::max(worst_upper, s.total_E - upper * (1.0 + std::pow(norm_sq, 0.5 * (r + 1.0))));
  }
  const double scale = 1.0 + std::abs(sim.series.front().total_E);
  ctx.checks["energy_nonincreasing"] = worst_increase <= 1e-10 * scale;
  ctx.checks["energy_sandwich"] = worst_lower <= 1e-10 * scale && worst_upper <= 1e-10 * scale;
  ctx.results = {{"steps", sim.steps},
                 {"dt", ctx.step.dt},
                 {"T", ctx.cfg.simulate.T},
                 {"initial_total_E", sim.series.front().total_E},
                 {"final_total_E", sim.series.back().total_E},
                 {"worst_energy_increase", worst_increase},
                 {"energy_upper_constant", upper},
                 {"snapshots", sim.snapshots.size()}};
  ctx.out.write_json("checkpoint.json", checkpoint_json(g, sim.final_state, sha256_hex(serialize_config(ctx.cfg))));
}

inline void run_stationary(RunContext& ctx) {
  const Grid& g = ctx.sys.grid;
  StationarySetOptions opt;
  opt.n_guesses = ctx.cfg.stationary.n_guesses;
  opt.guess_scale = ctx.cfg.stationary.guess_scale;
  opt.seed = ctx.cfg.seed;
  opt.tol = ctx.cfg.stationary.tol;
  opt.max_iter = ctx.cfg.stationary.max_iter;
  opt.dedup_tol = ctx.cfg.stationary.dedup_tol;
  opt.threads = ctx.cfg.threads;
  const StationarySet set = sample_stationary_set(ctx.sys, opt);

  CsvTable table({"point_id", "x", "v", "p"});
  nlohmann::json points = nlohmann::json::array();
  bool all_pass = true;
  const double hn = ctx.sys.forcing_norm_sq();
  for (std::size_t k = 0; k < set.points.size(); ++k) {
    const auto& pt = set.points[k];
    for (std::size_t i = 0; i < g.size(); ++i) {
      table.row({std::to_string(k), format_double(g.x(i)), format_double(pt.v[i]), format_double(pt.p[i])});
    }
    const StationaryBound b = check_stationary_bound(pt, ctx.dc, ctx.sys.nl.constants.m_F, hn, g.length());
    all_pass = all_pass && b.pass;
    points.push_back({{"point_id", k},
                      {"h_norm_sq", pt.h_norm_sq},
                      {"residual_norm", pt.residual_norm},
                      {"iterations", pt.iterations},
                      {"bound_lhs", b.lhs},
                      {"bound_rhs", b.rhs},
                      {"bound_pass", b.pass}});
  }
  ctx.out.write("stationary_points.csv", table.str());
  ctx.checks["stationary_set_nonempty"] = !set.points.empty();
  ctx.checks["stationary_bound"] = all_pass;
  ctx.results = {{"count", set.points.size()},
                 {"converged", set.converged},
                 {"dropped", set.dropped},
                 {"points", points}};
}

inline void run_validate(RunContext& ctx) {
  const ValidationReport report = validate_assumptions(ctx.sys.nl, ctx.cfg.validate.box, ctx.cfg.validate.n_samples,
                                                       ctx.cfg.seed, ctx.dc.beta1);
  CsvTable table({"check", "passed", "warning_only", "worst_margin", "worst_v", "worst_p"});
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : report.checks) {
    table.row({c.name, c.passed ? "1" : "0", c.warning_only ? "1" : "0", format_double(c.worst_margin),
               format_double(c.worst_v), format_double(c.worst_p)});
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"warning_only", c.warning_only},
                    {"worst_margin", std::isfinite(c.worst_margin) ? nlohmann::json(c.worst_margin)
                                                                   : nlohmann::json(nullptr)},
                    {"note", c.note}});
  }
  ctx.out.write("validation.csv", table.str());
  ctx.checks["assumptions"] = report.all_passed();
  ctx.results = {{"checks", list}, {"n_samples", ctx.cfg.validate.n_samples}};
}

inline void run_quasi_stability(RunContext& ctx) {
  const Grid& g = ctx.sys.grid;
  const auto& q = ctx.cfg.quasi_stability;
  CsvTable table({"pair", "t", "E_diff", "chi_sup"});
  nlohmann::json fits = nlohmann::json::array();
  // A fitted rate counts only when the decay over the window clears round-off
  // and the log-linear model explains the data.
  bool decays = true;
  for (std::size_t k = 0; k < q.pairs; ++k) {
    const State a = random_state(g, substream_seed(ctx.cfg.seed, 2 * k), q.amplitude);
    const State b = random_state(g, substream_seed(ctx.cfg.seed, 2 * k + 1), q.amplitude);
    const auto records = difference_energy_experiment(ctx.sys, a, b, q.T, ctx.step, q.theta);
    for (const auto& r : records) table.row({static_cast<double>(k), r.t, r.E_diff, r.chi_sup});
    const QuasiStabilityFit fit = fit_quasi_stability(records);
    decays = decays && fit.sigma * q.T > 1e-9 && fit.r_squared >= 0.95;
    fits.push_back({{"pair", k},
                    {"sigma", fit.sigma},
                    {"varsigma", fit.varsigma},
                    {"C_B", fit.C_B},
                    {"r_squared", fit.r_squared},
                    {"E0", fit.E0},
                    {"samples_used", fit.samples_used}});
  }
  ctx.out.write("difference_energy.csv", table.str());
  ctx.checks["exponential_decay"] = decays;
  ctx.results = {{"theta", q.theta}, {"T", q.T}, {"fits", fits}};
}

inline void run_continuous_dependence(RunContext& ctx) {
  const auto& c = ctx.cfg.continuous_dependence;
  const State z0 = random_state(ctx.sys.grid, ctx.cfg.seed, c.amplitude);
  const auto res = continuous_dependence_experiment(ctx.sys, z0, c.scales, c.T, ctx.step,
                                                    substream_seed(ctx.cfg.seed, 1), ctx.cfg.threads);
  CsvTable table({"scale", "growth"});
  for (std::size_t i = 0; i < res.scales.size(); ++i) table.row({res.scales[i], res.growth[i]});
  ctx.out.write("continuous_dependence.csv", table.str());
  const auto [lo, hi] = std::minmax_element(res.growth.begin(), res.growth.end());
  ctx.results = {{"T", c.T}, {"growth_max", *hi}, {"growth_min", *lo}};
}

inline void run_eps_lipschitz(RunContext& ctx) {
  const auto& e = ctx.cfg.eps_lipschitz;
  const State z0 = random_state(ctx.sys.grid, ctx.cfg.seed, e.amplitude);
  const auto rows = epsilon_lipschitz_experiment(ctx.sys, z0, e.pairs, e.T, ctx.step, e.growth_rate, ctx.cfg.threads);
  CsvTable table({"eps1", "eps2", "delta_eps", "sup_gap", "ratio", "bound"});
  double worst_ratio = 0.0;
  std::size_t nonzero = 0;
  for (const auto& r : rows) {
    table.row({r.eps1, r.eps2, r.delta_eps, r.sup_gap, r.ratio, r.bound});
    worst_ratio = std::max(worst_ratio, r.ratio);
    if (r.delta_eps > 0.0 && r.sup_gap > 0.0) ++nonzero;
  }
  ctx.out.write("eps_lipschitz.csv", table.str());
  ctx.results = {{"T", e.T},
                 {"growth_rate", e.growth_rate},
                 {"lipschitz_estimate", worst_ratio},
                 {"loglog_slope", nonzero >= 2 ? nlohmann::json(loglog_slope(rows)) : nlohmann::json(nullptr)}};
}

inline void write_cloud(RunContext& ctx, const PointCloud& cloud, const std::string& stem) {
  const Grid& g = ctx.sys.grid;
  const BeamSystem sys = ctx.sys.with_epsilon(cloud.epsilon);
  CsvTable summary({"state_id", "member", "t", "h_norm_sq", "total_E", "regularity"});
  CsvTable states({"state_id", "x", "v", "p", "vt", "pt"});
  for (std::size_t k = 0; k < cloud.states.size(); ++k) {
    const State& z = cloud.states[k];
    summary.row({static_cast<double>(k), static_cast<double>(cloud.member[k]), z.t,
                 h_norm_sq(g, sys.params, z), total_energy(sys, z), std::sqrt(regularity_proxy(sys, z).total_sq())});
    for (std::size_t i = 0; i < g.size(); ++i) {
      states.row({static_cast<double>(k), g.x(i), z.v[i], z.p[i], z.vt[i], z.pt[i]});
    }
  }
  ctx.out.write(stem + ".csv", summary.str());
  ctx.out.write(stem + "_states.csv", states.str());
}

inline void run_attractor(RunContext& ctx) {
  const CloudOptions opt = ctx.cfg.cloud_options();
  const PointCloud cloud = attractor_cloud(ctx.sys, opt, ctx.step);
  if (cloud.states.empty()) throw Error(ErrorKind::EmptySet, "every ensemble member failed");
  write_cloud(ctx, cloud, "cloud");

  // Absorbing bound: |z(t)|^2 <= (total_E(0) + C_F) / beta2 along every member.
  double e0 = -HUGE_VAL;
  for (std::size_t i = 0; i < opt.ensemble_size; ++i) {
    e0 = std::max(e0, total_energy(ctx.sys, random_state(ctx.sys.grid, substream_seed(opt.seed, i), opt.amplitude)));
  }
  const double bound = (e0 + ctx.dc.C_F) / ctx.dc.beta2;
  double largest = 0.0;
  for (const State& z : cloud.states) largest = std::max(largest, h_norm_sq(ctx.sys.grid, ctx.sys.params, z));
  ctx.checks["absorbing_bound"] = largest <= bound * (1.0 + 1e-12);
  ctx.results = {{"states", cloud.states.size()},
                 {"dropped", cloud.dropped},
                 {"diameter", cloud_diameter(ctx.sys.grid, ctx.sys.params, cloud)},
                 {"regularity_envelope", regularity_envelope(ctx.sys, cloud)},
                 {"largest_h_norm_sq", largest},
                 {"absorbing_bound", bound}};
}

inline void run_sweep(RunContext& ctx) {
  const CloudOptions opt = ctx.cfg.cloud_options();
  const SweepResult sweep = semicontinuity_sweep(ctx.sys, ctx.cfg.sweep.eps0, ctx.cfg.sweep.eps_list, opt, ctx.step);
  if (sweep.base.states.empty()) throw Error(ErrorKind::EmptySet, "every base ensemble member failed");
  CsvTable table({"epsilon", "abs_diff", "semidistance"});
  bool monotone = true;
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& r = sweep.rows[i];
    table.row({r.epsilon, r.abs_diff, r.semidistance});
    if (i > 0 && r.semidistance > sweep.rows[i - 1].semidistance) monotone = false;
  }
  ctx.out.write("sweep.csv", table.str());
  write_cloud(ctx, sweep.base, "base_cloud");
  const double floor = transient_noise_floor(ctx.sys.with_epsilon(ctx.cfg.sweep.eps0), opt, ctx.step);
  ctx.results = {{"eps0", ctx.cfg.sweep.eps0},
                 {"base_diameter", sweep.base_diameter},
                 {"noise_floor", floor},
                 {"nonincreasing", monotone},
                 {"final_semidistance", sweep.rows.empty() ? 0.0 : sweep.rows.back().semidistance}};
}

inline void run_eigen(RunContext& ctx) {
  const Grid& g = ctx.sys.grid;
  const EigenPair ep = smallest_eigenpair(g, ctx.cfg.eigen.tol);
  CsvTable table({"x", "value"});
  for (std::size_t i = 0; i < g.size(); ++i) table.row({g.x(i), ep.vector[i]});
  ctx.out.write("eigenvector.csv", table.str());
  ctx.results = {{"lambda1", ep.value},
                 {"lambda1_closed_form", ctx.lambda1_discrete},
                 {"lambda1_continuum", analytic_lambda1(g.length())},
                 {"iterations", ep.iterations}};
}

inline void write_error(const std::filesystem::path& out_dir, const std::string& command, const Error& e,
                        const char* module = nullptr) {
  nlohmann::json rec = {{"command", command},
                        {"error", std::string(to_string(e.kind()))},
                        {"message", e.detail()},
                        {"module", module ? module : module_of(command)},
                        {"time", e.time() ? nlohmann::json(*e.time()) : nlohmann::json(nullptr)}};
  try {
    write_file(out_dir / "error.json", rec.dump(2) + "\n");
  } catch (const std::exception&) {
    // Output directory unusable; the exit status still reports the failure.
  }
}

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError: return kExitConfigError;
    case ErrorKind::AssumptionViolated: return kExitCheckFailure;
    default: return kExitSolverFailure;
  }
}

}  // namespace detail

/// Runs one command, writing CSV tables, summary.json and manifest.json into
/// out_dir. Failures leave error.json instead of a summary.
inline int execute(const std::string& command, const RunConfig& cfg, const std::filesystem::path& out_dir) {
  using namespace detail;
  try {
    if (std::find(command_names().begin(), command_names().end(), command) == command_names().end()) {
      throw Error(ErrorKind::ValidationError, "unknown command '" + command + "'");
    }
    validate_config(cfg);
    OutputDir out(out_dir);
    const BeamSystem sys = cfg.system();
    const double lambda1_d = discrete_lambda1(sys.grid);
    const auto& nc = sys.nl.constants;
    const double hn = sys.forcing_norm_sq();
    RunContext ctx{cfg, sys, cfg.step_config(), lambda1_d, derived_constants(sys.params, nc.beta0, nc.m_F, hn, lambda1_d),
                   out};

    if (command == "simulate") run_simulate(ctx);
    else if (command == "stationary") run_stationary(ctx);
    else if (command == "validate") run_validate(ctx);
    else if (command == "quasi-stability") run_quasi_stability(ctx);
    else if (command == "continuous-dependence") run_continuous_dependence(ctx);
    else if (command == "eps-lipschitz") run_eps_lipschitz(ctx);
    else if (command == "attractor") run_attractor(ctx);
    else if (command == "sweep") run_sweep(ctx);
    else run_eigen(ctx);

    bool pass = true;
    for (const auto& [_, v] : ctx.checks.items()) pass = pass && v.get<bool>();
    const std::string canonical = serialize_config(cfg);
    const nlohmann::json summary = {
        {"command", command},
        {"config", to_json(cfg)},
        {"config_hash", sha256_hex(canonical)},
        {"seed", cfg.seed},
        {"grid", {{"L", sys.grid.length()}, {"N", sys.grid.size()}, {"dx", sys.grid.dx()}}},
        {"dt", ctx.step.dt},
        {"derived_constants", derived_json(derived_constants(sys.params, nc.beta0, nc.m_F, hn))},
        {"derived_constants_discrete", derived_json(ctx.dc)},
        {"nonlinearity", nonlinearity_json(sys.nl)},
        {"checks", ctx.checks},
        {"passed", pass},
        {"results", ctx.results}};
    out.write_json("summary.json", summary);
    out.write_manifest();
    return pass ? kExitOk : kExitCheckFailure;
  } catch (const Error& e) {
    write_error(out_dir, command, e);
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    write_error(out_dir, command, Error(ErrorKind::IoError, e.what()));
    return kExitSolverFailure;
  }
}

/// Reads and parses a config file, then executes; config errors exit with 2.
inline int execute_file(const std::string& command, const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed,
                        std::optional<std::size_t> threads) {
  RunConfig cfg;
  try {
    cfg = parse_config(read_file(config_path));
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    validate_config(cfg);
  } catch (const Error& e) {
    detail::write_error(out_dir, command, e, "cli");
    return kExitConfigError;
  }
  return execute(command, cfg, out_dir);
}

}  // namespace pzbeam
