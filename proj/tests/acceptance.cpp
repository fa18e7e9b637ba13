// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "pzbeam/analysis.hpp"
#include "pzbeam/commands.hpp"
#include "pzbeam/stationary.hpp"

using namespace pzbeam;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

FieldVec bump(const Grid& g, double center, double width, double amplitude) {
  return sample(g, [=](double x) { return amplitude * std::exp(-std::pow((x - center) / width, 2)); });
}

const Grid kGrid(1.0, 200);

/// Default quartic beam with the Gaussian bump forcing used by the
/// continuous-dependence and quasi-stability checks.
BeamSystem quartic_forced(double eps) {
  PhysicalParams pp;
  pp.epsilon = eps;
  return {kGrid, pp, default_nonlinearity(), {bump(kGrid, 0.5, 0.1, 5.0), bump(kGrid, 0.5, 0.1, -3.0)}};
}

/// Double-well beam whose attractor holds several equilibria.
BeamSystem double_well(double eps) {
  PhysicalParams pp;
  pp.epsilon = eps;
  const FieldVec h = bump(kGrid, 0.5, 0.1, 1.0);
  return {kGrid, pp, make_nonlinearity("double_well"), {h, h}};
}

StepConfig step(double dt) {
  StepConfig cfg;
  cfg.dt = dt;
  return cfg;
}

CloudOptions double_well_cloud() {
  CloudOptions o;
  o.ensemble_size = 8;
  o.T_transient = 40.0;
  o.T_sample = 10.0;
  o.sample_stride = 2.0;
  o.seed = 5;
  o.amplitude = 2.0;
  return o;
}

// Shared between criteria 9 and 11.
double g_lipschitz_K = -1.0;

Outcome operator_exactness() {
  Rng rng(2024);
  double worst_sbp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    FieldVec u(kGrid.size());
    for (auto& x : u) x = rng.uniform(-1.0, 1.0);
    FieldVec neg = apply_dxx(kGrid, u);
    neg *= -1.0;
    const double lhs = weighted_inner(kGrid, neg, u), rhs = gradient_norm_sq(kGrid, u);
    worst_sbp = std::max(worst_sbp, std::abs(lhs - rhs) / std::abs(rhs));
  }
  // x(2L - x) sampled on a power-of-two grid is exact in binary, isolating the
  // operator from input rounding.
  auto dxx_error = [](const Grid& g) {
    const FieldVec d = apply_dxx(g, sample(g, [&](double x) { return x * (2.0 * g.length() - x); }));
    double worst = 0.0;
    for (double x : d) worst = std::max(worst, std::abs(x + 2.0));
    return worst;
  };
  const double exact = dxx_error(Grid(1.0, 256));
  const double at200 = dxx_error(kGrid);
  return {worst_sbp <= 1e-12 && exact <= 1e-12,
          fmt("sbp_rel_max=%.2e dxx_err(N=256)=%.2e [N=200 rounding floor %.2e]", worst_sbp, exact, at200)};
}

Outcome poincare_constant() {
  const double exact = std::numbers::pi * std::numbers::pi / 4.0;
  const double e200 = std::abs(smallest_eigenvalue(Grid(1.0, 200), 1e-14) - exact);
  const double e400 = std::abs(smallest_eigenvalue(Grid(1.0, 400), 1e-14) - exact);
  return {e200 <= 5e-4 && e200 / e400 >= 3.5, fmt("err200=%.3e err400=%.3e ratio=%.3f", e200, e400, e200 / e400)};
}

Outcome energy_dissipation() {
  // Part 1: linear damping, f = 0, eps = 0, per-step identity.
  const BeamSystem lin{kGrid, PhysicalParams{}, make_nonlinearity("linear_damping"), Forcing::zero(kGrid)};
  MidpointStepper st(lin);
  State z = random_state(kGrid, 31, 1.0);
  const double dt = 0.0025, tol = 1e-12;
  double worst_identity = 0.0;
  for (int k = 0; k < 4000; ++k) {
    const double e0 = total_energy(lin, z);
    const State next = st.step(z, dt, tol, 50);
    const double loss = dt * dissipation_rate(kGrid, lin.nl, st.last_midpoint(z.t + 0.5 * dt));
    worst_identity = std::max(worst_identity, std::abs(total_energy(lin, next) - e0 + loss));
    z = next;
  }
  // Part 2: default quartic over T = 50.
  const BeamSystem quartic = quartic_forced(1.0);
  const SimulationResult r = simulate(quartic, random_state(kGrid, 32, 1.0), 50.0, step(dt));
  double worst_increase = 0.0;
  for (std::size_t i = 1; i < r.series.size(); ++i) {
    worst_increase = std::max(worst_increase, r.series[i].total_E - r.series[i - 1].total_E);
  }
  return {worst_identity <= 10.0 * tol && worst_increase <= 1e-10,
          fmt("identity_residual_max=%.2e worst_step_increase=%.2e steps=%zu", worst_identity, worst_increase,
              r.steps)};
}

Outcome energy_sandwich() {
  Rng rng(404);
  std::size_t samples = 0, lower_violations = 0, upper_violations = 0, literal_violations = 0;
  const double lam = discrete_lambda1(kGrid);
  for (int run = 0; run < 10; ++run) {
    const double eps = rng.uniform(0.0, 1.0);
    PhysicalParams pp;
    pp.epsilon = eps;
    BeamSystem sys{kGrid, pp, default_nonlinearity(),
                   {bump(kGrid, rng.uniform(0.2, 0.8), 0.1, rng.uniform(-5, 5)),
                    bump(kGrid, rng.uniform(0.2, 0.8), 0.1, rng.uniform(-5, 5))}};
    const double hn = sys.forcing_norm_sq();
    const NonlinearityConstants& nc = sys.nl.constants;
    const DerivedConstants dc = derived_constants(pp, nc.beta0, nc.m_F, hn, lam);
    const double upper = energy_upper_constant(pp, nc, dc, hn);
    StepConfig cfg = step(0.0025);
    cfg.record_every = 10;
    const SimulationResult r =
        simulate(sys, random_state(kGrid, substream_seed(405, run), rng.uniform(0.2, 3.0)), 10.0, cfg);
    for (const auto& s : r.series) {
      ++samples;
      const double nz2 = 2.0 * s.E;
      const double grow = 1.0 + std::pow(nz2, 0.5 * (nc.r + 1.0));
      if (s.total_E < dc.beta2 * nz2 - dc.C_F) ++lower_violations;
      if (s.total_E > upper * grow) ++upper_violations;
      if (s.total_E > dc.C_F * grow) ++literal_violations;
    }
  }
  return {lower_violations == 0 && upper_violations == 0,
          fmt("samples=%zu lower_violations=%zu upper_violations=%zu (with C_F itself as upper constant: %zu)",
              samples, lower_violations, upper_violations, literal_violations)};
}

Outcome convergence_order() {
  PhysicalParams pp;
  pp.alpha1 = 1.3;
  pp.beta = 0.8;
  pp.gamma = 0.7;
  pp.rho = 1.1;
  pp.mu = 0.9;
  // Slow coupled mode of the undamped linear system: the 2x2 generalized
  // eigenproblem k^2 [[alpha, -gb], [-gb, beta]] X = w^2 diag(rho, mu) X.
  const double k = std::numbers::pi / 2.0, k2 = k * k;
  const double a = pp.alpha() * k2 / pp.rho, b = -pp.gamma * pp.beta * k2 / pp.rho;
  const double c = -pp.gamma * pp.beta * k2 / pp.mu, d = pp.beta * k2 / pp.mu;
  const double w2 = 0.5 * ((a + d) - std::sqrt((a + d) * (a + d) - 4.0 * (a * d - b * c)));
  const double w = std::sqrt(w2), B = (w2 - a) / b;
  auto exact = [&](const Grid& g, double t) {
    const FieldVec phi = sample(g, [k](double x) { return std::sin(k * x); });
    return State{std::cos(w * t) * phi, B * std::cos(w * t) * phi, -w * std::sin(w * t) * phi,
                 -B * w * std::sin(w * t) * phi, t};
  };
  std::vector<double> errs;
  for (std::size_t n : {50u, 100u, 200u}) {
    const Grid g(1.0, n);
    const BeamSystem sys{g, pp, make_nonlinearity("zero"), Forcing::zero(g)};
    StepConfig cfg = step(0.5 * g.dx());
    cfg.newton_tol = 1e-13;
    const State end = simulate(sys, exact(g, 0.0), 2.0, cfg).final_state;
    errs.push_back(h_distance(g, pp, end, exact(g, 2.0)));
  }
  const double o1 = std::log2(errs[0] / errs[1]), o2 = std::log2(errs[1] / errs[2]);
  return {std::abs(o1 - 2.0) <= 0.2 && std::abs(o2 - 2.0) <= 0.2,
          fmt("errors=%.3e,%.3e,%.3e orders=%.3f,%.3f", errs[0], errs[1], errs[2], o1, o2)};
}

Outcome stationary_oracle() {
  PhysicalParams pp;
  pp.epsilon = 1.0;
  const BeamSystem lin{kGrid, pp, make_nonlinearity("linear_damping"),
                       {FieldVec(kGrid.size(), 1.0), FieldVec(kGrid.size(), 1.0)}};
  const StationaryPoint pt = solve_stationary(lin, FieldVec(kGrid.size()), FieldVec(kGrid.size()), 1e-10, 10);
  double err = 0.0;
  for (std::size_t i = 0; i < kGrid.size(); ++i) {
    const double x = kGrid.x(i);
    err = std::max({err, std::abs(pt.v[i] - (2 * x - x * x)), std::abs(pt.p[i] - (3 * x - 1.5 * x * x))});
  }
  // Continuum forcing norms |h1|^2 = |h2|^2 = 1, as in the hand evaluation.
  const StationaryBound b = check_stationary_bound(pt, derived_constants(pp, 0.0, 0.0, 2.0), 0.0, 2.0, 1.0);
  const bool oracle = err <= 5.0 * kGrid.dx() * kGrid.dx() && std::abs(b.lhs - 1.25) <= 5e-3 &&
                      std::abs(b.rhs - 2.4317) <= 1e-3 && b.pass;

  Rng rng(606);
  std::size_t points = 0, failures = 0;
  const double lam = discrete_lambda1(kGrid);
  for (int cfg = 0; cfg < 20; ++cfg) {
    PhysicalParams q;
    q.rho = rng.uniform(0.5, 2.0);
    q.mu = rng.uniform(0.5, 2.0);
    q.alpha1 = rng.uniform(0.5, 2.0);
    q.beta = rng.uniform(0.5, 2.0);
    q.gamma = rng.uniform(0.2, 1.5);
    q.epsilon = rng.uniform(0.0, 1.0);
    PolynomialCoefficients coeff;
    coeff.quartic = rng.uniform(0.5, 2.0);
    coeff.coupling = rng.uniform(0.0, 2.0);
    coeff.well = rng.uniform(0.0, 5.0);
    coeff.damping_linear = rng.uniform(0.5, 2.0);
    coeff.damping_cubic = rng.uniform(0.0, 1.0);
    const BeamSystem sys{kGrid, q, polynomial_nonlinearity("random", coeff),
                         {bump(kGrid, rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.3), rng.uniform(-3, 3)),
                          bump(kGrid, rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.3), rng.uniform(-3, 3))}};
    StationarySetOptions opt;
    opt.n_guesses = 8;
    opt.guess_scale = 2.0;
    opt.seed = substream_seed(607, static_cast<std::uint64_t>(cfg));
    const StationarySet set = sample_stationary_set(sys, opt);
    const NonlinearityConstants& nc = sys.nl.constants;
    const double hn = sys.forcing_norm_sq();
    const DerivedConstants dc = derived_constants(q, nc.beta0, nc.m_F, hn, lam);
    for (const auto& p : set.points) {
      ++points;
      if (!check_stationary_bound(p, dc, nc.m_F, hn, 1.0).pass) ++failures;
    }
  }
  return {oracle && failures == 0 && points >= 20,
          fmt("max_node_err=%.2e (5dx^2=%.2e) lhs=%.4f rhs=%.4f; random configs: points=%zu bound_failures=%zu", err,
              5.0 * kGrid.dx() * kGrid.dx(), b.lhs, b.rhs, points, failures)};
}

Outcome continuous_dependence() {
  const BeamSystem sys = quartic_forced(1.0);
  // Same draws as the continuous-dependence command with seed 7.
  const auto res = continuous_dependence_experiment(sys, random_state(kGrid, 7, 2.0), {1e-6, 1e-5, 1e-4, 1e-3}, 10.0,
                                                    step(0.0025), substream_seed(7, 1));
  const auto [lo, hi] = std::minmax_element(res.growth.begin(), res.growth.end());
  const double spread = (*hi - *lo) / std::max(std::abs(*hi), std::abs(*lo));
  return {std::isfinite(*lo) && spread <= 0.10,
          fmt("C=%.5f,%.5f,%.5f,%.5f spread=%.2e", res.growth[0], res.growth[1], res.growth[2], res.growth[3], spread)};
}

Outcome quasi_stability() {
  bool pass = true;
  double worst_sigma_ratio = 0.0, worst_var_ratio = 0.0, min_r2 = 1.0, min_sigma = HUGE_VAL;
  StepConfig cfg = step(0.0025);
  cfg.record_every = 20;
  for (std::uint64_t pair = 0; pair < 5; ++pair) {
    const State a = random_state(kGrid, 100 + pair, 1.0), b = random_state(kGrid, 200 + pair, 1.0);
    std::vector<double> sig, var;
    for (double eps : {0.0, 0.5, 1.0}) {
      const QuasiStabilityFit f =
          fit_quasi_stability(difference_energy_experiment(quartic_forced(eps), a, b, 20.0, cfg));
      pass = pass && f.sigma > 0.0 && f.r_squared >= 0.95;
      min_r2 = std::min(min_r2, f.r_squared);
      min_sigma = std::min(min_sigma, f.sigma);
      sig.push_back(f.sigma);
      var.push_back(f.varsigma);
    }
    const auto [slo, shi] = std::minmax_element(sig.begin(), sig.end());
    const auto [vlo, vhi] = std::minmax_element(var.begin(), var.end());
    worst_sigma_ratio = std::max(worst_sigma_ratio, *shi / *slo);
    worst_var_ratio = std::max(worst_var_ratio, *vhi / *vlo);
  }
  pass = pass && worst_sigma_ratio <= 2.0 && worst_var_ratio <= 2.0;
  return {pass, fmt("min_sigma=%.4f min_r2=%.4f max_sigma_ratio=%.4f max_varsigma_ratio=%.4f", min_sigma, min_r2,
                    worst_sigma_ratio, worst_var_ratio)};
}

Outcome eps_lipschitz() {
  const State z0 = random_state(kGrid, 3, 1.0);
  std::vector<std::pair<double, double>> pairs;
  for (double d : {1e-1, 1e-2, 1e-3, 1e-4}) pairs.emplace_back(0.5, 0.5 + d);
  const auto rows = epsilon_lipschitz_experiment(double_well(0.0), z0, pairs, 20.0, step(0.0025));
  const double slope = loglog_slope(rows);
  g_lipschitz_K = 0.0;
  for (const auto& r : rows) g_lipschitz_K = std::max(g_lipschitz_K, r.ratio);

  BeamSystem unforced = double_well(0.0);
  unforced.forcing = Forcing::zero(kGrid);
  const auto zero_rows = epsilon_lipschitz_experiment(unforced, z0, {{0.0, 1.0}, {0.3, 0.7}}, 20.0, step(0.0025));
  bool exact_zero = true;
  for (const auto& r : zero_rows) exact_zero = exact_zero && r.sup_gap == 0.0;
  return {std::abs(slope - 1.0) <= 0.1 && exact_zero,
          fmt("slope=%.4f K=%.4f gap_without_forcing=%s", slope, g_lipschitz_K, exact_zero ? "0" : "nonzero")};
}

Outcome stabilization() {
  PhysicalParams pp;
  const BeamSystem sys{kGrid, pp, default_nonlinearity(), Forcing::zero(kGrid)};
  StationarySetOptions sopt;
  sopt.n_guesses = 8;
  sopt.seed = 10;
  const StationarySet set = sample_stationary_set(sys, sopt);
  std::vector<double> dist(8, 0.0);
  parallel_for(8, 1, [&](std::size_t i) {
    const State end = simulate(sys, random_state(kGrid, substream_seed(11, i), 2.0), 200.0, step(0.0025)).final_state;
    dist[i] = distance_to_stationary_set(kGrid, pp, end, set.points);
  });
  const double worst = *std::max_element(dist.begin(), dist.end());
  return {worst <= 1e-3, fmt("stationary_points=%zu ensemble=8 max_distance_at_T200=%.3e", set.points.size(), worst)};
}

Outcome upper_semicontinuity() {
  if (g_lipschitz_K < 0.0) return {false, "criterion 9 did not produce K"};
  const CloudOptions opt = double_well_cloud();
  const StepConfig cfg = step(0.01);
  const SweepResult sw = semicontinuity_sweep(double_well(0.0), 0.0, {0.5, 0.25, 0.1, 0.05}, opt, cfg);
  const double floor = transient_noise_floor(double_well(0.0), opt, cfg);
  bool monotone = true, companion = true;
  std::string table;
  for (std::size_t i = 0; i < sw.rows.size(); ++i) {
    const auto& r = sw.rows[i];
    if (i > 0 && r.semidistance > sw.rows[i - 1].semidistance) monotone = false;
    if (r.semidistance > g_lipschitz_K * r.abs_diff + floor) companion = false;
    table += fmt("%s%.2f:%.4e", i ? "," : "", r.epsilon, r.semidistance);
  }
  const double final_fraction = sw.rows.back().semidistance / sw.base_diameter;
  return {monotone && companion && final_fraction <= 0.05 && sw.base_diameter > 0.0,
          fmt("dist=[%s] diameter=%.4f final/diameter=%.4f noise_floor=%.2e companion=%s", table.c_str(),
              sw.base_diameter, final_fraction, floor, companion ? "ok" : "violated")};
}

Outcome regularity_envelope_check() {
  std::vector<double> R;
  for (double eps : {0.0, 0.5, 1.0}) {
    const BeamSystem sys = double_well(eps);
    R.push_back(regularity_envelope(sys, attractor_cloud(sys, double_well_cloud(), step(0.01))));
  }
  const auto [lo, hi] = std::minmax_element(R.begin(), R.end());
  return {*hi / *lo <= 1.5, fmt("R=%.4f,%.4f,%.4f spread=%.4f", R[0], R[1], R[2], *hi / *lo)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "pzbeam_acceptance_determinism";
  fs::remove_all(root);
  RunConfig cfg = parse_config(R"({
    "N": 100, "seed": 13, "params": {"epsilon": 0.5},
    "nonlinearity": {"name": "double_well"},
    "forcing": {"h1": {"profile": "gaussian", "amplitude": 1}, "h2": {"profile": "constant", "value": 0.2}},
    "initial": {"kind": "random"}, "simulate": {"T": 2, "snapshot_every": 200},
    "stationary": {"n_guesses": 6, "guess_scale": 2},
    "attractor": {"ensemble_size": 3, "T_transient": 2, "T_sample": 1, "sample_stride": 0.5},
    "sweep": {"eps0": 0, "eps_list": [0.5, 0.1]}
  })");
  std::size_t compared = 0, differing = 0;
  for (const char* cmd : {"simulate", "stationary", "sweep"}) {
    const fs::path a = root / (std::string(cmd) + "_a"), b = root / (std::string(cmd) + "_b");
    if (execute(cmd, cfg, a) != kExitOk || execute(cmd, cfg, b) != kExitOk) return {false, fmt("%s failed", cmd)};
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), a);
      ++compared;
      if (!fs::exists(b / rel) || read_file(entry.path()) != read_file(b / rel)) ++differing;
    }
  }
  fs::remove_all(root);
  return {compared > 0 && differing == 0, fmt("files_compared=%zu differing=%zu", compared, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"operator exactness", operator_exactness},
      {"Poincare constant", poincare_constant},
      {"energy dissipation", energy_dissipation},
      {"energy sandwich", energy_sandwich},
      {"convergence order", convergence_order},
      {"stationary oracle and bound", stationary_oracle},
      {"continuous dependence", continuous_dependence},
      {"quasi-stability", quasi_stability},
      {"epsilon Lipschitz", eps_lipschitz},
      {"stabilization", stabilization},
      {"upper semicontinuity", upper_semicontinuity},
      {"regularity envelope", regularity_envelope_check},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %2zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
