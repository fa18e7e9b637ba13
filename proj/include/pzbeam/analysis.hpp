#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pzbeam/discretization.hpp"
#include "pzbeam/integrator.hpp"
#include "pzbeam/parallel.hpp"
#include "pzbeam/rng.hpp"
#include "pzbeam/stationary.hpp"

namespace pzbeam {

struct TimeValue {
  double t = 0.0;
  double y = 0.0;
};

struct DecayFit {
  double sigma = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double r_squared = 0.0;
};

/// Least squares of log(y - floor) against t: y ~ floor + amplitude e^{-sigma t}.
inline DecayFit fit_exponential_decay(std::span<const TimeValue> series, double floor = 0.0) {
  if (series.size() < 10) throw Error(ErrorKind::InvalidArgument, "decay fit needs at least 10 samples");
  if (!(floor >= 0.0)) throw Error(ErrorKind::InvalidArgument, "decay fit floor must be >= 0");
  const double n = static_cast<double>(series.size());
  double mean_t = 0.0, mean_y = 0.0;
  std::vector<double> logs(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double shifted = series[i].y - floor;
    if (!(shifted > 0.0)) {
      throw Error(ErrorKind::NonpositiveData, "sample " + std::to_string(i) + " is not above the floor");
    }
    logs[i] = std::log(shifted);
    mean_t += series[i].t;
    mean_y += logs[i];
  }
  mean_t /= n;
  mean_y /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double dt = series[i].t - mean_t, dy = logs[i] - mean_y;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (!(stt > 0.0)) throw Error(ErrorKind::InvalidArgument, "decay fit needs distinct sample times");
  const double slope = sty / stt;
  const double intercept = mean_y - slope * mean_t;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double e = logs[i] - (intercept + slope * series[i].t);
    ss_res += e * e;
  }
  DecayFit fit;
  fit.sigma = -slope;
  fit.amplitude = std::exp(intercept);
  fit.offset = floor;
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

/// Random state whose four fields are smooth mixed-boundary sine sums.
inline State random_state(const Grid& grid, std::uint64_t seed, double amplitude) {
  Rng rng(seed);
  State z;
  z.v = random_smooth_field(grid, rng, amplitude);
  z.p = random_smooth_field(grid, rng, amplitude);
  z.vt = random_smooth_field(grid, rng, amplitude);
  z.pt = random_smooth_field(grid, rng, amplitude);
  return z;
}

/// [chi(v, p)]^2 = |v|_{2 theta}^2 + |p|_{2 theta}^2.
inline double chi_sq(const Grid& grid, const FieldVec& v, const FieldVec& p, int theta) {
  const double a = lp_seminorm(grid, v, 2 * theta);
  const double b = lp_seminorm(grid, p, 2 * theta);
  return a * a + b * b;
}

struct DifferenceEnergyRecord {
  double t = 0.0;
  double E_diff = 0.0;
  double chi_sup = 0.0;
};

/// Co-evolves two trajectories and records half the squared distance between
/// them together with the running sup of the squared compact seminorm.
inline std::vector<DifferenceEnergyRecord> difference_energy_experiment(const BeamSystem& sys, const State& z1_0,
                                                                        const State& z2_0, double T,
                                                                        const StepConfig& cfg, int theta = 2) {
  if (theta < 2) throw Error(ErrorKind::InvalidArgument, "theta must be >= 2");
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be positive");
  cfg.validate();
  sys.validate();
  z1_0.require_conforming(sys.grid);
  z2_0.require_conforming(sys.grid);
  MidpointStepper s1(sys), s2(sys);
  State a = z1_0, b = z2_0;
  std::vector<DifferenceEnergyRecord> out;
  double sup = 0.0;
  auto record = [&](double t) {
    const State d = difference(a, b);
    sup = std::max(sup, chi_sq(sys.grid, d.v, d.p, theta));
    out.push_back({t, 0.5 * h_norm_sq(sys.grid, sys.params, d), sup});
  };
  record(z1_0.t);
  const std::size_t steps = step_count(T, cfg.dt);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = z1_0.t + static_cast<double>(k) * cfg.dt;
    try {
      a = s1.step(a, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
      b = s2.step(b, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
    } catch (const Error& e) {
      throw e.at_time(t - cfg.dt);
    }
    a.t = b.t = t;
    if (k % cfg.record_every == 0 || k == steps) {
      record(t);
    } else {
      const State d = difference(a, b);
      sup = std::max(sup, chi_sq(sys.grid, d.v, d.p, theta));
    }
  }
  return out;
}

/// Fitted constants of  E(t) <= varsigma E(0) e^{-sigma t} + C_B chi_sup(t).
struct QuasiStabilityFit {
  double sigma = 0.0;
  double varsigma = 0.0;
  double C_B = 0.0;
  double r_squared = 0.0;
  double E0 = 0.0;
  std::size_t samples_used = 0;
};

/// Samples below `cutoff * E(0)` are treated as round-off and left out.
inline QuasiStabilityFit fit_quasi_stability(std::span<const DifferenceEnergyRecord> records,
                                             double cutoff = 1e-20) {
  if (records.empty()) throw Error(ErrorKind::EmptySet, "no difference-energy records");
  QuasiStabilityFit q;
  q.E0 = records.front().E_diff;
  if (!(q.E0 > 0.0)) throw Error(ErrorKind::NonpositiveData, "initial difference energy is zero");
  std::vector<TimeValue> series;
  for (const auto& r : records) {
    if (r.E_diff > cutoff * q.E0) series.push_back({r.t, r.E_diff});
  }
  const DecayFit fit = fit_exponential_decay(series);
  q.sigma = fit.sigma;
  q.varsigma = fit.amplitude / q.E0;
  q.r_squared = fit.r_squared;
  q.samples_used = series.size();
  for (const auto& r : records) {
    const double excess = r.E_diff - q.varsigma * q.E0 * std::exp(-q.sigma * r.t);
    if (excess > 0.0 && r.chi_sup > 0.0) q.C_B = std::max(q.C_B, excess / r.chi_sup);
  }
  return q;
}

struct ContinuousDependenceResult {
  std::vector<double> scales;
  std::vector<double> growth;  // fitted C per scale
  double worst = 0.0;
};

/// Smallest C with |dz(t)|^2 <= e^{C t} |dz(0)|^2 on the sampled times, for
/// perturbations of z0 along one fixed random direction at each scale. C is
/// negative when the perturbation decays from the first step on.
inline ContinuousDependenceResult continuous_dependence_experiment(const BeamSystem& sys, const State& z0,
                                                                   const std::vector<double>& scales, double T,
                                                                   const StepConfig& cfg, std::uint64_t seed,
                                                                   std::size_t threads = 1) {
  cfg.validate();
  sys.validate();
  for (double s : scales) {
    if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, "perturbation scales must be positive");
  }
  State dir = random_state(sys.grid, seed, 1.0);
  const double dn = std::sqrt(h_norm_sq(sys.grid, sys.params, dir));
  for (FieldVec* f : {&dir.v, &dir.p, &dir.vt, &dir.pt}) *f *= 1.0 / dn;

  const std::size_t steps = step_count(T, cfg.dt);
  ContinuousDependenceResult result;
  result.scales = scales;
  result.growth.assign(scales.size(), 0.0);
  parallel_for(scales.size(), threads, [&](std::size_t j) {
    State base = z0, z = z0;
    z.v += scales[j] * dir.v;
    z.p += scales[j] * dir.p;
    z.vt += scales[j] * dir.vt;
    z.pt += scales[j] * dir.pt;
    const double d0 = h_distance(sys.grid, sys.params, z, z0);
    MidpointStepper sb(sys), sz(sys);
    double c = -HUGE_VAL;
    for (std::size_t k = 1; k <= steps; ++k) {
      base = sb.step(base, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
      z = sz.step(z, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
      const double t = static_cast<double>(k) * cfg.dt;
      const double ratio = h_distance(sys.grid, sys.params, z, base) / d0;
      c = std::max(c, 2.0 * std::log(ratio) / t);
    }
    result.growth[j] = c;
  });
  result.worst = *std::max_element(result.growth.begin(), result.growth.end());
  return result;
}

struct EpsLipschitzRow {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double delta_eps = 0.0;
  double sup_gap = 0.0;
  double ratio = 0.0;  // sup_gap / |eps1 - eps2| (0 when the pair coincides)
  double bound = 0.0;  // Gronwall envelope with growth rate growth_rate
};

/// Co-evolves z0 under two forcing scales and records the sup-in-time gap.
/// `growth_rate` is the rate used in the Gronwall envelope
/// sqrt((e^{C t} - 1)/C (|h1|^2 + |h2|^2)) |eps1 - eps2|.
inline std::vector<EpsLipschitzRow> epsilon_lipschitz_experiment(
    const BeamSystem& sys, const State& z0, const std::vector<std::pair<double, double>>& eps_pairs, double T,
    const StepConfig& cfg, double growth_rate = 1.0, std::size_t threads = 1) {
  cfg.validate();
  sys.validate();
  const double hn = sys.forcing_norm_sq();
  std::vector<EpsLipschitzRow> rows(eps_pairs.size());
  const std::size_t steps = step_count(T, cfg.dt);
  parallel_for(eps_pairs.size(), threads, [&](std::size_t j) {
    const auto [e1, e2] = eps_pairs[j];
    const BeamSystem s1 = sys.with_epsilon(e1), s2 = sys.with_epsilon(e2);
    s1.params.validate();
    s2.params.validate();
    MidpointStepper st1(s1), st2(s2);
    State a = z0, b = z0;
    double gap = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      a = st1.step(a, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
      b = st2.step(b, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
      gap = std::max(gap, h_distance(sys.grid, sys.params, a, b));
    }
    EpsLipschitzRow& row = rows[j];
    row.eps1 = e1;
    row.eps2 = e2;
    row.delta_eps = std::abs(e1 - e2);
    row.sup_gap = gap;
    row.ratio = row.delta_eps > 0.0 ? gap / row.delta_eps : 0.0;
    const double envelope = growth_rate > 0.0 ? (std::exp(growth_rate * T) - 1.0) / growth_rate : T;
    row.bound = std::sqrt(envelope * hn) * row.delta_eps;
  });
  return rows;
}

/// Least-squares slope of log(sup_gap) against log(delta_eps) over rows with a
/// nonzero gap.
inline double loglog_slope(std::span<const EpsLipschitzRow> rows) {
  std::vector<TimeValue> pts;
  for (const auto& r : rows) {
    if (r.delta_eps > 0.0 && r.sup_gap > 0.0) pts.push_back({std::log(r.delta_eps), std::log(r.sup_gap)});
  }
  if (pts.size() < 2) throw Error(ErrorKind::InvalidArgument, "slope needs at least two nonzero gaps");
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.t;
    my += p.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.t - mx) * (p.t - mx);
    sxy += (p.t - mx) * (p.y - my);
  }
  return sxy / sxx;
}

/// Finite sample of an attractor: ensemble states collected after a transient.
struct PointCloud {
  std::vector<State> states;
  std::vector<std::size_t> member;  // ensemble index of each state
  double epsilon = 0.0;
  double transient = 0.0;
  double interval = 0.0;
  std::size_t ensemble_size = 0;
  std::size_t dropped = 0;  // members lost to solver failure
};

struct CloudOptions {
  std::size_t ensemble_size = 8;
  double T_transient = 50.0;
  double T_sample = 10.0;
  double sample_stride = 1.0;  // time between collected states
  std::uint64_t seed = 0;
  double amplitude = 1.0;  // scale of the random initial states
  std::size_t threads = 1;
};

inline PointCloud attractor_cloud(const BeamSystem& sys, const CloudOptions& opt, const StepConfig& cfg) {
  if (!(opt.T_transient > 0.0) || !(opt.T_sample > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "T_transient and T_sample must be positive");
  }
  if (!(opt.sample_stride > 0.0)) throw Error(ErrorKind::InvalidArgument, "sample_stride must be positive");
  if (opt.ensemble_size < 1) throw Error(ErrorKind::InvalidArgument, "ensemble_size must be at least 1");
  cfg.validate();
  sys.validate();
  const std::size_t transient_steps = step_count(opt.T_transient, cfg.dt);
  const std::size_t stride_steps = std::max<std::size_t>(1, step_count(opt.sample_stride, cfg.dt));
  const std::size_t sample_steps = step_count(opt.T_sample, cfg.dt);

  std::vector<std::optional<std::vector<State>>> collected(opt.ensemble_size);
  parallel_for(opt.ensemble_size, opt.threads, [&](std::size_t i) {
    State z = random_state(sys.grid, substream_seed(opt.seed, i), opt.amplitude);
    MidpointStepper st(sys);
    std::vector<State> samples;
    try {
      for (std::size_t k = 1; k <= transient_steps + sample_steps; ++k) {
        z = st.step(z, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
        z.t = static_cast<double>(k) * cfg.dt;
        if (k >= transient_steps && (k - transient_steps) % stride_steps == 0) samples.push_back(z);
      }
      collected[i] = std::move(samples);
    } catch (const Error&) {
      collected[i].reset();
    }
  });

  PointCloud cloud;
  cloud.epsilon = sys.params.epsilon;
  cloud.transient = opt.T_transient;
  cloud.interval = opt.sample_stride;
  cloud.ensemble_size = opt.ensemble_size;
  for (std::size_t i = 0; i < collected.size(); ++i) {
    if (!collected[i]) {
      ++cloud.dropped;
      continue;
    }
    for (auto& s : *collected[i]) {
      cloud.states.push_back(std::move(s));
      cloud.member.push_back(i);
    }
  }
  return cloud;
}

/// sup over a in A of inf over b in B of the phase-space distance.
inline double hausdorff_semidistance(const Grid& grid, const PhysicalParams& params, std::span<const State> A,
                                     std::span<const State> B) {
  if (A.empty() || B.empty()) throw Error(ErrorKind::EmptySet, "semidistance of an empty cloud");
  double sup = 0.0;
  for (const State& a : A) {
    double inf = std::numeric_limits<double>::infinity();
    for (const State& b : B) inf = std::min(inf, h_distance(grid, params, a, b));
    sup = std::max(sup, inf);
  }
  return sup;
}

inline double hausdorff_semidistance(const Grid& grid, const PhysicalParams& params, const PointCloud& A,
                                     const PointCloud& B) {
  return hausdorff_semidistance(grid, params, std::span<const State>(A.states), std::span<const State>(B.states));
}

inline double cloud_diameter(const Grid& grid, const PhysicalParams& params, const PointCloud& cloud) {
  double d = 0.0;
  for (std::size_t i = 0; i < cloud.states.size(); ++i) {
    for (std::size_t j = i + 1; j < cloud.states.size(); ++j) {
      d = std::max(d, h_distance(grid, params, cloud.states[i], cloud.states[j]));
    }
  }
  return d;
}

inline double distance_to_stationary_set(const Grid& grid, const PhysicalParams& params, const State& z,
                                         std::span<const StationaryPoint> set) {
  if (set.empty()) throw Error(ErrorKind::EmptySet, "stationary set is empty");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pt : set) best = std::min(best, h_distance(grid, params, z, pt.as_state(z.t)));
  return best;
}

struct SweepRow {
  double epsilon = 0.0;
  double abs_diff = 0.0;
  double semidistance = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ordered from the farthest epsilon to the nearest
  PointCloud base;
  double base_diameter = 0.0;
};

/// One cloud per epsilon with a shared seed, compared against the eps0 cloud.
inline SweepResult semicontinuity_sweep(const BeamSystem& sys, double eps0, const std::vector<double>& eps_list,
                                        const CloudOptions& opt, const StepConfig& cfg) {
  for (double e : eps_list) {
    if (!(e >= 0.0 && e <= 1.0)) throw Error(ErrorKind::ValidationError, "epsilon ∈ [0,1]");
  }
  SweepResult result;
  result.base = attractor_cloud(sys.with_epsilon(eps0), opt, cfg);
  result.base_diameter = cloud_diameter(sys.grid, sys.params, result.base);
  for (double e : eps_list) {
    const PointCloud cloud = attractor_cloud(sys.with_epsilon(e), opt, cfg);
    result.rows.push_back({e, std::abs(e - eps0), hausdorff_semidistance(sys.grid, sys.params, cloud, result.base)});
  }
  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.abs_diff > b.abs_diff; });
  return result;
}

/// Symmetric semidistance between the cloud of `opt` and the cloud with twice
/// the transient; the sampling noise floor of cloud comparisons.
inline double transient_noise_floor(const BeamSystem& sys, const CloudOptions& opt, const StepConfig& cfg) {
  CloudOptions longer = opt;
  longer.T_transient = 2.0 * opt.T_transient;
  const PointCloud a = attractor_cloud(sys, opt, cfg);
  const PointCloud b = attractor_cloud(sys, longer, cfg);
  return std::max(hausdorff_semidistance(sys.grid, sys.params, a, b),
                  hausdorff_semidistance(sys.grid, sys.params, b, a));
}

/// Discrete proxies of the higher-regularity norms: second differences of the
/// displacements, gradients of the velocities and the accelerations read off
/// the equations of motion.
struct RegularityProxy {
  double dxx_v = 0.0, dxx_p = 0.0;
  double grad_vt = 0.0, grad_pt = 0.0;
  double acc_v = 0.0, acc_p = 0.0;

  double total_sq() const {
    return dxx_v * dxx_v + dxx_p * dxx_p + grad_vt * grad_vt + grad_pt * grad_pt + acc_v * acc_v + acc_p * acc_p;
  }
};

inline RegularityProxy regularity_proxy(const BeamSystem& sys, const State& z) {
  const Grid& g = sys.grid;
  RegularityProxy r;
  r.dxx_v = std::sqrt(weighted_norm_sq(g, apply_dxx(g, z.v)));
  r.dxx_p = std::sqrt(weighted_norm_sq(g, apply_dxx(g, z.p)));
  r.grad_vt = std::sqrt(gradient_norm_sq(g, z.vt));
  r.grad_pt = std::sqrt(gradient_norm_sq(g, z.pt));
  const State rate = semidiscrete_rhs(sys, z);
  r.acc_v = std::sqrt(weighted_norm_sq(g, rate.vt));
  r.acc_p = std::sqrt(weighted_norm_sq(g, rate.pt));
  return r;
}

/// Largest proxy norm over the cloud (the empirical R).
inline double regularity_envelope(const BeamSystem& sys, const PointCloud& cloud) {
  if (cloud.states.empty()) throw Error(ErrorKind::EmptySet, "empty cloud");
  double R = 0.0;
  for (const State& z : cloud.states) R = std::max(R, std::sqrt(regularity_proxy(sys, z).total_sq()));
  return R;
}

}  // namespace pzbeam
