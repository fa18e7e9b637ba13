#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pzbeam/analysis.hpp"
#include "pzbeam/error.hpp"
#include "pzbeam/integrator.hpp"
#include "pzbeam/model.hpp"

namespace pzbeam {

using json = nlohmann::json;

struct ForcingProfile {
  std::string profile = "zero";  // zero | constant | gaussian
  double value = 0.0;            // constant level
  double center = 0.5;           // gaussian bump
  double width = 0.1;
  double amplitude = 0.0;

  FieldVec evaluate(const Grid& grid) const {
    if (profile == "zero") return FieldVec(grid.size());
    if (profile == "constant") return FieldVec(grid.size(), value);
    return sample(grid, [this](double x) {
      const double s = (x - center) / width;
      return amplitude * std::exp(-s * s);
    });
  }
  friend bool operator==(const ForcingProfile&, const ForcingProfile&) = default;
};

struct InitialSpec {
  std::string kind = "zero";  // zero | random | mode | checkpoint
  double amplitude = 1.0;
  std::string path;           // checkpoint file
  friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct IntegratorSpec {
  std::optional<double> dt;  // defaults to dx/2
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  std::size_t record_every = 1;
  friend bool operator==(const IntegratorSpec&, const IntegratorSpec&) = default;
};

struct SimulateSpec {
  double T = 10.0;
  std::size_t snapshot_every = 0;
  friend bool operator==(const SimulateSpec&, const SimulateSpec&) = default;
};

struct StationarySpec {
  std::size_t n_guesses = 16;
  double guess_scale = 1.0;
  double tol = 1e-9;
  std::size_t max_iter = 100;
  double dedup_tol = 1e-6;
  friend bool operator==(const StationarySpec&, const StationarySpec&) = default;
};

struct ValidateSpec {
  SampleBox box;
  std::size_t n_samples = 10000;
  friend bool operator==(const ValidateSpec& a, const ValidateSpec& b) {
    return a.box.v_lo == b.box.v_lo && a.box.v_hi == b.box.v_hi && a.box.p_lo == b.box.p_lo &&
           a.box.p_hi == b.box.p_hi && a.n_samples == b.n_samples;
  }
};

struct QuasiStabilitySpec {
  double T = 20.0;
  int theta = 2;
  std::size_t pairs = 1;
  double amplitude = 1.0;
  friend bool operator==(const QuasiStabilitySpec&, const QuasiStabilitySpec&) = default;
};

struct ContinuitySpec {
  double T = 10.0;
  std::vector<double> scales = {1e-6, 1e-5, 1e-4, 1e-3};
  double amplitude = 2.0;
  friend bool operator==(const ContinuitySpec&, const ContinuitySpec&) = default;
};

struct EpsLipschitzSpec {
  double T = 20.0;
  std::vector<std::pair<double, double>> pairs = {{0.5, 0.6}, {0.5, 0.51}, {0.5, 0.501}, {0.5, 0.5001}};
  double growth_rate = 1.0;
  double amplitude = 1.0;
  friend bool operator==(const EpsLipschitzSpec&, const EpsLipschitzSpec&) = default;
};

struct AttractorSpec {
  std::size_t ensemble_size = 8;
  double T_transient = 40.0;
  double T_sample = 10.0;
  double sample_stride = 2.0;
  double amplitude = 2.0;
  friend bool operator==(const AttractorSpec&, const AttractorSpec&) = default;
};

struct SweepSpec {
  double eps0 = 0.0;
  std::vector<double> eps_list = {0.5, 0.25, 0.1, 0.05};
  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct EigenSpec {
  double tol = 1e-12;
  friend bool operator==(const EigenSpec&, const EigenSpec&) = default;
};

struct RunConfig {
  double L = 1.0;
  std::size_t N = 200;
  PhysicalParams params;
  std::string nonlinearity = "default_quartic";
  std::map<std::string, double> overrides;
  ForcingProfile h1, h2;
  IntegratorSpec integrator;
  InitialSpec initial;
  SimulateSpec simulate;
  StationarySpec stationary;
  ValidateSpec validate;
  QuasiStabilitySpec quasi_stability;
  ContinuitySpec continuous_dependence;
  EpsLipschitzSpec eps_lipschitz;
  AttractorSpec attractor;
  SweepSpec sweep;
  EigenSpec eigen;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.L == b.L && a.N == b.N && a.params.rho == b.params.rho && a.params.mu == b.params.mu &&
           a.params.alpha1 == b.params.alpha1 && a.params.beta == b.params.beta &&
           a.params.gamma == b.params.gamma && a.params.epsilon == b.params.epsilon &&
           a.nonlinearity == b.nonlinearity && a.overrides == b.overrides && a.h1 == b.h1 && a.h2 == b.h2 &&
           a.integrator == b.integrator && a.initial == b.initial && a.simulate == b.simulate &&
           a.stationary == b.stationary && a.validate == b.validate && a.quasi_stability == b.quasi_stability &&
           a.continuous_dependence == b.continuous_dependence && a.eps_lipschitz == b.eps_lipschitz &&
           a.attractor == b.attractor && a.sweep == b.sweep && a.eigen == b.eigen && a.seed == b.seed &&
           a.threads == b.threads;
  }

  Grid grid() const { return Grid(L, N); }

  StepConfig step_config() const {
    StepConfig cfg;
    cfg.dt = integrator.dt.value_or(0.5 * L / static_cast<double>(N));
    cfg.newton_tol = integrator.newton_tol;
    cfg.newton_max_iter = integrator.newton_max_iter;
    cfg.record_every = integrator.record_every;
    return cfg;
  }

  CloudOptions cloud_options() const {
    CloudOptions o;
    o.ensemble_size = attractor.ensemble_size;
    o.T_transient = attractor.T_transient;
    o.T_sample = attractor.T_sample;
    o.sample_stride = attractor.sample_stride;
    o.amplitude = attractor.amplitude;
    o.seed = seed;
    o.threads = threads;
    return o;
  }

  BeamSystem system() const {
    const Grid g = grid();
    PhysicalParams pp = params;
    pp.length = L;
    return BeamSystem{g, pp, make_nonlinearity(nonlinearity, overrides), Forcing{h1.evaluate(g), h2.evaluate(g)}};
  }
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::ValidationError, where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!keys.count(key)) throw Error(ErrorKind::ValidationError, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::ValidationError, where + "." + key + " has the wrong type");
  }
}

inline void read_forcing(const json& obj, ForcingProfile& f, const std::string& where) {
  reject_unknown(obj, {"profile", "value", "center", "width", "amplitude"}, where);
  read(obj, "profile", f.profile, where);
  read(obj, "value", f.value, where);
  read(obj, "center", f.center, where);
  read(obj, "width", f.width, where);
  read(obj, "amplitude", f.amplitude, where);
  if (f.profile != "zero" && f.profile != "constant" && f.profile != "gaussian") {
    throw Error(ErrorKind::ValidationError, where + ".profile ∈ {zero, constant, gaussian}");
  }
  if (f.profile == "gaussian" && !(f.width > 0.0)) {
    throw Error(ErrorKind::ValidationError, where + ".width > 0");
  }
  for (double v : {f.value, f.center, f.width, f.amplitude}) {
    if (!std::isfinite(v)) throw Error(ErrorKind::ValidationError, where + " values must be finite");
  }
}

inline json forcing_json(const ForcingProfile& f) {
  return json{{"profile", f.profile}, {"value", f.value}, {"center", f.center}, {"width", f.width},
              {"amplitude", f.amplitude}};
}

inline void positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::ValidationError, std::string(name) + " > 0");
}

}  // namespace detail

/// Checks every invariant of a filled-in config; throws ValidationError.
inline void validate_config(const RunConfig& cfg) {
  PhysicalParams pp = cfg.params;
  pp.length = cfg.L;
  pp.validate();
  if (cfg.N < 2) throw Error(ErrorKind::ValidationError, "N >= 2");
  (void)make_nonlinearity(cfg.nonlinearity, cfg.overrides);
  if (cfg.integrator.dt) detail::positive(*cfg.integrator.dt, "integrator.dt");
  detail::positive(cfg.integrator.newton_tol, "integrator.newton_tol");
  if (cfg.integrator.newton_max_iter < 1) throw Error(ErrorKind::ValidationError, "integrator.newton_max_iter >= 1");
  if (cfg.integrator.record_every < 1) throw Error(ErrorKind::ValidationError, "integrator.record_every >= 1");
  const auto& k = cfg.initial.kind;
  if (k != "zero" && k != "random" && k != "mode" && k != "checkpoint") {
    throw Error(ErrorKind::ValidationError, "initial.kind ∈ {zero, random, mode, checkpoint}");
  }
  if (k == "checkpoint" && cfg.initial.path.empty()) {
    throw Error(ErrorKind::ValidationError, "initial.path required for checkpoint");
  }
  detail::positive(cfg.simulate.T, "simulate.T");
  if (cfg.stationary.n_guesses < 1) throw Error(ErrorKind::ValidationError, "stationary.n_guesses >= 1");
  detail::positive(cfg.stationary.tol, "stationary.tol");
  detail::positive(cfg.stationary.dedup_tol, "stationary.dedup_tol");
  if (!(cfg.validate.box.v_hi > cfg.validate.box.v_lo) || !(cfg.validate.box.p_hi > cfg.validate.box.p_lo)) {
    throw Error(ErrorKind::ValidationError, "validate.box must be nondegenerate");
  }
  if (cfg.validate.n_samples < 100) throw Error(ErrorKind::ValidationError, "validate.n_samples >= 100");
  detail::positive(cfg.quasi_stability.T, "quasi_stability.T");
  if (cfg.quasi_stability.theta < 2) throw Error(ErrorKind::ValidationError, "quasi_stability.theta >= 2");
  if (cfg.quasi_stability.pairs < 1) throw Error(ErrorKind::ValidationError, "quasi_stability.pairs >= 1");
  detail::positive(cfg.continuous_dependence.T, "continuous_dependence.T");
  if (cfg.continuous_dependence.scales.empty()) {
    throw Error(ErrorKind::ValidationError, "continuous_dependence.scales must be nonempty");
  }
  for (double s : cfg.continuous_dependence.scales) detail::positive(s, "continuous_dependence.scales");
  detail::positive(cfg.eps_lipschitz.T, "eps_lipschitz.T");
  for (const auto& [a, b] : cfg.eps_lipschitz.pairs) {
    if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) {
      throw Error(ErrorKind::ValidationError, "epsilon ∈ [0,1]");
    }
  }
  if (cfg.attractor.ensemble_size < 1) throw Error(ErrorKind::ValidationError, "attractor.ensemble_size >= 1");
  detail::positive(cfg.attractor.T_transient, "attractor.T_transient");
  detail::positive(cfg.attractor.T_sample, "attractor.T_sample");
  detail::positive(cfg.attractor.sample_stride, "attractor.sample_stride");
  for (double e : cfg.sweep.eps_list) {
    if (!(e >= 0.0 && e <= 1.0)) throw Error(ErrorKind::ValidationError, "epsilon ∈ [0,1]");
  }
  if (!(cfg.sweep.eps0 >= 0.0 && cfg.sweep.eps0 <= 1.0)) throw Error(ErrorKind::ValidationError, "epsilon ∈ [0,1]");
  detail::positive(cfg.eigen.tol, "eigen.tol");
  if (cfg.threads < 1) throw Error(ErrorKind::ValidationError, "threads >= 1");
}

inline RunConfig config_from_json(const json& doc) {
  using detail::read;
  using detail::reject_unknown;
  reject_unknown(doc,
                 {"L", "N", "params", "nonlinearity", "forcing", "integrator", "initial", "simulate", "stationary",
                  "validate", "quasi_stability", "continuous_dependence", "eps_lipschitz", "attractor", "sweep",
                  "eigen", "seed", "threads"},
                 "config");
  RunConfig cfg;
  read(doc, "L", cfg.L, "config");
  read(doc, "N", cfg.N, "config");
  read(doc, "seed", cfg.seed, "config");
  read(doc, "threads", cfg.threads, "config");
  if (doc.contains("params")) {
    const json& p = doc["params"];
    reject_unknown(p, {"rho", "mu", "alpha1", "beta", "gamma", "epsilon"}, "params");
    read(p, "rho", cfg.params.rho, "params");
    read(p, "mu", cfg.params.mu, "params");
    read(p, "alpha1", cfg.params.alpha1, "params");
    read(p, "beta", cfg.params.beta, "params");
    read(p, "gamma", cfg.params.gamma, "params");
    read(p, "epsilon", cfg.params.epsilon, "params");
  }
  if (doc.contains("nonlinearity")) {
    const json& n = doc["nonlinearity"];
    reject_unknown(n, {"name", "overrides"}, "nonlinearity");
    read(n, "name", cfg.nonlinearity, "nonlinearity");
    read(n, "overrides", cfg.overrides, "nonlinearity");
  }
  if (doc.contains("forcing")) {
    const json& f = doc["forcing"];
    reject_unknown(f, {"h1", "h2"}, "forcing");
    if (f.contains("h1")) detail::read_forcing(f["h1"], cfg.h1, "forcing.h1");
    if (f.contains("h2")) detail::read_forcing(f["h2"], cfg.h2, "forcing.h2");
  }
  if (doc.contains("integrator")) {
    const json& i = doc["integrator"];
    reject_unknown(i, {"dt", "newton_tol", "newton_max_iter", "record_every"}, "integrator");
    if (i.contains("dt") && !i["dt"].is_null()) {
      double dt = 0.0;
      read(i, "dt", dt, "integrator");
      cfg.integrator.dt = dt;
    }
    read(i, "newton_tol", cfg.integrator.newton_tol, "integrator");
    read(i, "newton_max_iter", cfg.integrator.newton_max_iter, "integrator");
    read(i, "record_every", cfg.integrator.record_every, "integrator");
  }
  if (doc.contains("initial")) {
    const json& i = doc["initial"];
    reject_unknown(i, {"kind", "amplitude", "path"}, "initial");
    read(i, "kind", cfg.initial.kind, "initial");
    read(i, "amplitude", cfg.initial.amplitude, "initial");
    read(i, "path", cfg.initial.path, "initial");
  }
  if (doc.contains("simulate")) {
    const json& s = doc["simulate"];
    reject_unknown(s, {"T", "snapshot_every"}, "simulate");
    read(s, "T", cfg.simulate.T, "simulate");
    read(s, "snapshot_every", cfg.simulate.snapshot_every, "simulate");
  }
  if (doc.contains("stationary")) {
    const json& s = doc["stationary"];
    reject_unknown(s, {"n_guesses", "guess_scale", "tol", "max_iter", "dedup_tol"}, "stationary");
    read(s, "n_guesses", cfg.stationary.n_guesses, "stationary");
    read(s, "guess_scale", cfg.stationary.guess_scale, "stationary");
    read(s, "tol", cfg.stationary.tol, "stationary");
    read(s, "max_iter", cfg.stationary.max_iter, "stationary");
    read(s, "dedup_tol", cfg.stationary.dedup_tol, "stationary");
  }
  if (doc.contains("validate")) {
    const json& v = doc["validate"];
    reject_unknown(v, {"box", "n_samples"}, "validate");
    if (v.contains("box")) {
      std::vector<double> box;
      read(v, "box", box, "validate");
      if (box.size() != 4) throw Error(ErrorKind::ValidationError, "validate.box = [v_lo, v_hi, p_lo, p_hi]");
      cfg.validate.box = {box[0], box[1], box[2], box[3]};
    }
    read(v, "n_samples", cfg.validate.n_samples, "validate");
  }
  if (doc.contains("quasi_stability")) {
    const json& q = doc["quasi_stability"];
    reject_unknown(q, {"T", "theta", "pairs", "amplitude"}, "quasi_stability");
    read(q, "T", cfg.quasi_stability.T, "quasi_stability");
    read(q, "theta", cfg.quasi_stability.theta, "quasi_stability");
    read(q, "pairs", cfg.quasi_stability.pairs, "quasi_stability");
    read(q, "amplitude", cfg.quasi_stability.amplitude, "quasi_stability");
  }
  if (doc.contains("continuous_dependence")) {
    const json& c = doc["continuous_dependence"];
    reject_unknown(c, {"T", "scales", "amplitude"}, "continuous_dependence");
    read(c, "T", cfg.continuous_dependence.T, "continuous_dependence");
    read(c, "scales", cfg.continuous_dependence.scales, "continuous_dependence");
    read(c, "amplitude", cfg.continuous_dependence.amplitude, "continuous_dependence");
  }
  if (doc.contains("eps_lipschitz")) {
    const json& e = doc["eps_lipschitz"];
    reject_unknown(e, {"T", "pairs", "growth_rate", "amplitude"}, "eps_lipschitz");
    read(e, "T", cfg.eps_lipschitz.T, "eps_lipschitz");
    read(e, "pairs", cfg.eps_lipschitz.pairs, "eps_lipschitz");
    read(e, "growth_rate", cfg.eps_lipschitz.growth_rate, "eps_lipschitz");
    read(e, "amplitude", cfg.eps_lipschitz.amplitude, "eps_lipschitz");
  }
  if (doc.contains("attractor")) {
    const json& a = doc["attractor"];
    reject_unknown(a, {"ensemble_size", "T_transient", "T_sample", "sample_stride", "amplitude"}, "attractor");
    read(a, "ensemble_size", cfg.attractor.ensemble_size, "attractor");
    read(a, "T_transient", cfg.attractor.T_transient, "attractor");
    read(a, "T_sample", cfg.attractor.T_sample, "attractor");
    read(a, "sample_stride", cfg.attractor.sample_stride, "attractor");
    read(a, "amplitude", cfg.attractor.amplitude, "attractor");
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    reject_unknown(s, {"eps0", "eps_list"}, "sweep");
    read(s, "eps0", cfg.sweep.eps0, "sweep");
    read(s, "eps_list", cfg.sweep.eps_list, "sweep");
  }
  if (doc.contains("eigen")) {
    const json& e = doc["eigen"];
    reject_unknown(e, {"tol"}, "eigen");
    read(e, "tol", cfg.eigen.tol, "eigen");
  }
  validate_config(cfg);
  return cfg;
}

/// Parses and validates a JSON config; missing fields take their defaults.
inline RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return config_from_json(doc);
}

/// Fully filled-in config; keys sorted, so dumps are canonical.
inline json to_json(const RunConfig& cfg) {
  json doc;
  doc["L"] = cfg.L;
  doc["N"] = cfg.N;
  doc["params"] = {{"rho", cfg.params.rho},     {"mu", cfg.params.mu},       {"alpha1", cfg.params.alpha1},
                   {"beta", cfg.params.beta},   {"gamma", cfg.params.gamma}, {"epsilon", cfg.params.epsilon}};
  doc["nonlinearity"] = {{"name", cfg.nonlinearity}, {"overrides", cfg.overrides}};
  doc["forcing"] = {{"h1", detail::forcing_json(cfg.h1)}, {"h2", detail::forcing_json(cfg.h2)}};
  doc["integrator"] = {{"dt", cfg.integrator.dt ? json(*cfg.integrator.dt) : json(nullptr)},
                       {"newton_tol", cfg.integrator.newton_tol},
                       {"newton_max_iter", cfg.integrator.newton_max_iter},
                       {"record_every", cfg.integrator.record_every}};
  doc["initial"] = {{"kind", cfg.initial.kind}, {"amplitude", cfg.initial.amplitude}, {"path", cfg.initial.path}};
  doc["simulate"] = {{"T", cfg.simulate.T}, {"snapshot_every", cfg.simulate.snapshot_every}};
  doc["stationary"] = {{"n_guesses", cfg.stationary.n_guesses}, {"guess_scale", cfg.stationary.guess_scale},
                       {"tol", cfg.stationary.tol},             {"max_iter", cfg.stationary.max_iter},
                       {"dedup_tol", cfg.stationary.dedup_tol}};
  doc["validate"] = {
      {"box", {cfg.validate.box.v_lo, cfg.validate.box.v_hi, cfg.validate.box.p_lo, cfg.validate.box.p_hi}},
      {"n_samples", cfg.validate.n_samples}};
  doc["quasi_stability"] = {{"T", cfg.quasi_stability.T},
                            {"theta", cfg.quasi_stability.theta},
                            {"pairs", cfg.quasi_stability.pairs},
                            {"amplitude", cfg.quasi_stability.amplitude}};
  doc["continuous_dependence"] = {{"T", cfg.continuous_dependence.T},
                                  {"scales", cfg.continuous_dependence.scales},
                                  {"amplitude", cfg.continuous_dependence.amplitude}};
  doc["eps_lipschitz"] = {{"T", cfg.eps_lipschitz.T},
                          {"pairs", cfg.eps_lipschitz.pairs},
                          {"growth_rate", cfg.eps_lipschitz.growth_rate},
                          {"amplitude", cfg.eps_lipschitz.amplitude}};
  doc["attractor"] = {{"ensemble_size", cfg.attractor.ensemble_size},
                      {"T_transient", cfg.attractor.T_transient},
                      {"T_sample", cfg.attractor.T_sample},
                      {"sample_stride", cfg.attractor.sample_stride},
                      {"amplitude", cfg.attractor.amplitude}};
  doc["sweep"] = {{"eps0", cfg.sweep.eps0}, {"eps_list", cfg.sweep.eps_list}};
  doc["eigen"] = {{"tol", cfg.eigen.tol}};
  doc["seed"] = cfg.seed;
  doc["threads"] = cfg.threads;
  return doc;
}

inline std::string serialize_config(const RunConfig& cfg) { return to_json(cfg).dump(2); }

}  // namespace pzbeam
