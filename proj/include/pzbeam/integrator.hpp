#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pzbeam/block_tridiagonal.hpp"
#include "pzbeam/discretization.hpp"
#include "pzbeam/error.hpp"
#include "pzbeam/model.hpp"
#include "pzbeam/state.hpp"

namespace pzbeam {

/// Everything that defines the semiflow: mesh, coefficients, nonlinearity and
/// the (unscaled) forcing profiles h1, h2.
struct BeamSystem {
  Grid grid;
  PhysicalParams params;
  Nonlinearity nl;
  Forcing forcing;

  void validate() const {
    params.validate();
    require_conforming(grid, forcing.h1, "h1");
    require_conforming(grid, forcing.h2, "h2");
    if (!forcing.h1.all_finite() || !forcing.h2.all_finite()) {
      throw Error(ErrorKind::ValidationError, "forcing must be finite");
    }
  }

  double forcing_norm_sq() const {
    return weighted_norm_sq(grid, forcing.h1) + weighted_norm_sq(grid, forcing.h2);
  }

  BeamSystem with_epsilon(double epsilon) const {
    BeamSystem copy = *this;
    copy.params.epsilon = epsilon;
    return copy;
  }
};

struct StepConfig {
  double dt = 0.0025;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  std::size_t record_every = 1;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::ValidationError, "dt > 0");
    if (!(newton_tol > 0.0)) throw Error(ErrorKind::ValidationError, "newton_tol > 0");
    if (newton_max_iter < 1) throw Error(ErrorKind::ValidationError, "newton_max_iter >= 1");
    if (record_every < 1) throw Error(ErrorKind::ValidationError, "record_every >= 1");
  }

  /// dt = dx/2.
  static StepConfig for_grid(const Grid& grid) {
    StepConfig cfg;
    cfg.dt = 0.5 * grid.dx();
    return cfg;
  }
};

/// Runs whose phase-space norm exceeds this are aborted as blow-up.
inline constexpr double kBlowUpNorm = 1e12;

/// Time derivative of z: (v_t, p_t, a_v, a_p).
inline State semidiscrete_rhs(const BeamSystem& sys, const State& z) {
  z.require_conforming(sys.grid);
  const PhysicalParams& pp = sys.params;
  const FieldVec dxx_v = apply_dxx(sys.grid, z.v);
  const FieldVec dxx_p = apply_dxx(sys.grid, z.p);
  const double alpha = pp.alpha();
  const double gb = pp.gamma * pp.beta;
  State out{z.vt, z.pt, FieldVec(sys.grid.size()), FieldVec(sys.grid.size()), z.t};
  for (std::size_t i = 0; i < sys.grid.size(); ++i) {
    const double v = z.v[i], p = z.p[i];
    out.vt[i] = (alpha * dxx_v[i] - gb * dxx_p[i] - sys.nl.f1(v, p) - sys.nl.g1(z.vt[i]) +
                 pp.epsilon * sys.forcing.h1[i]) /
                pp.rho;
    out.pt[i] = (pp.beta * dxx_p[i] - gb * dxx_v[i] - sys.nl.f2(v, p) - sys.nl.g2(z.pt[i]) +
                 pp.epsilon * sys.forcing.h2[i]) /
                pp.mu;
  }
  return out;
}

/// E = |z|^2/2 plus the potential, minus the work of the scaled forcing.
inline double total_energy(const BeamSystem& sys, const State& z) {
  double potential = 0.0, work = 0.0;
  for (std::size_t i = 0; i < sys.grid.size(); ++i) {
    const double w = sys.grid.weight(i);
    potential += w * sys.nl.potential(z.v[i], z.p[i]);
    work += w * (sys.forcing.h1[i] * z.v[i] + sys.forcing.h2[i] * z.p[i]);
  }
  return 0.5 * h_norm_sq(sys.grid, sys.params, z) + potential - sys.params.epsilon * work;
}

/// Quadrature of g1(v_t) v_t + g2(p_t) p_t (the energy loss rate).
inline double dissipation_rate(const Grid& grid, const Nonlinearity& nl, const State& z) {
  z.require_conforming(grid);
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sum += grid.weight(i) * (nl.g1(z.vt[i]) * z.vt[i] + nl.g2(z.pt[i]) * z.pt[i]);
  }
  return sum;
}

/// Implicit midpoint stepper. The unknowns are the midpoint velocities
/// W = (v_t^n + v_t^{n+1})/2; displacements follow as v^{n+1} = v^n + dt W.
class MidpointStepper {
 public:
  explicit MidpointStepper(const BeamSystem& sys) : sys_(sys), jac_(sys.grid.size()) {
    const std::size_t n = sys.grid.size();
    wv_.assign(n, 0.0);
    wp_.assign(n, 0.0);
    rhs_.assign(n, Vec2{});
    vmid_ = FieldVec(n);
    pmid_ = FieldVec(n);
  }

  std::size_t last_iterations() const noexcept { return last_iterations_; }
  double last_residual() const noexcept { return last_residual_; }

  /// Advances z by dt (which may be negative for reversibility checks).
  State step(const State& z, double dt, double tol, int max_iter) {
    const Grid& grid = sys_.grid;
    const PhysicalParams& pp = sys_.params;
    const std::size_t n = grid.size();
    const double h = 0.5 * dt;

    // Explicit predictor.
    const State rate = semidiscrete_rhs(sys_, z);
    for (std::size_t i = 0; i < n; ++i) {
      wv_[i] = z.vt[i] + h * rate.vt[i];
      wp_[i] = z.pt[i] + h * rate.pt[i];
    }

    const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    const double alpha = pp.alpha();
    const double gb = pp.gamma * pp.beta;
    last_iterations_ = 0;
    for (int it = 0; it <= max_iter; ++it) {
      const double res = residual(z, h);
      last_residual_ = res;
      if (!std::isfinite(res)) throw Error(ErrorKind::BlowUp, "non-finite Newton iterate");
      if (res <= tol) break;
      if (it == max_iter) {
        throw Error(ErrorKind::NewtonDiverged,
                    "residual " + std::to_string(res) + " after " + std::to_string(max_iter) + " iterations");
      }
      ++last_iterations_;
      // Jacobian of r = W - vel_n - h a(mid) with respect to W.
      const double sv = h / pp.rho, sp = h / pp.mu;
      for (std::size_t i = 0; i < n; ++i) {
        const Hessian hs = sys_.nl.hessian_at(vmid_[i], pmid_[i]);
        const double diag_dxx = -2.0 * inv_dx2;
        Mat2& d = jac_.diag[i];
        d.a = 1.0 + sv * (-alpha * h * diag_dxx + h * hs[0] + sys_.nl.dg1_at(wv_[i]));
        d.b = sv * (gb * h * diag_dxx + h * hs[1]);
        d.c = sp * (gb * h * diag_dxx + h * hs[1]);
        d.d = 1.0 + sp * (-pp.beta * h * diag_dxx + h * hs[2] + sys_.nl.dg2_at(wp_[i]));
        const double sub = i + 1 == n ? 2.0 * inv_dx2 : inv_dx2;
        const double sup = inv_dx2;
        jac_.lower[i] = i == 0 ? Mat2{} : coupling_block(sub, sv, sp, alpha, gb, pp.beta, h);
        jac_.upper[i] = i + 1 == n ? Mat2{} : coupling_block(sup, sv, sp, alpha, gb, pp.beta, h);
        rhs_[i] = Vec2{-rv_[i], -rp_[i]};
      }
      try {
        jac_.solve(rhs_);
        for (std::size_t i = 0; i < n; ++i) {
          wv_[i] += rhs_[i].x;
          wp_[i] += rhs_[i].y;
        }
      } catch (const Error&) {
        // Fixed-point fallback: W <- W - r.
        for (std::size_t i = 0; i < n; ++i) {
          wv_[i] -= rv_[i];
          wp_[i] -= rp_[i];
        }
      }
    }

    State next{FieldVec(n), FieldVec(n), FieldVec(n), FieldVec(n), z.t + dt};
    for (std::size_t i = 0; i < n; ++i) {
      next.v[i] = z.v[i] + dt * wv_[i];
      next.p[i] = z.p[i] + dt * wp_[i];
      next.vt[i] = 2.0 * wv_[i] - z.vt[i];
      next.pt[i] = 2.0 * wp_[i] - z.pt[i];
    }
    if (!next.all_finite()) throw Error(ErrorKind::BlowUp, "non-finite state");
    if (h_norm_sq(grid, pp, next) > kBlowUpNorm * kBlowUpNorm) {
      throw Error(ErrorKind::BlowUp, "phase-space norm exceeded 1e12");
    }
    return next;
  }

  /// Midpoint state of the last step: displacements at the half step and the
  /// solved midpoint velocities.
  State last_midpoint(double t) const {
    const std::size_t n = sys_.grid.size();
    State mid{vmid_, pmid_, FieldVec(n), FieldVec(n), t};
    for (std::size_t i = 0; i < n; ++i) {
      mid.vt[i] = wv_[i];
      mid.pt[i] = wp_[i];
    }
    return mid;
  }

 private:
  static Mat2 coupling_block(double dxx, double sv, double sp, double alpha, double gb, double beta,
                             double h) {
    return {sv * (-alpha * h * dxx), sv * (gb * h * dxx), sp * (gb * h * dxx), sp * (-beta * h * dxx)};
  }

  /// Fills rv_, rp_ and the midpoint displacements; returns max |r|.
  double residual(const State& z, double h) {
    const Grid& grid = sys_.grid;
    const PhysicalParams& pp = sys_.params;
    const std::size_t n = grid.size();
    for (std::size_t i = 0; i < n; ++i) {
      vmid_[i] = z.v[i] + h * wv_[i];
      pmid_[i] = z.p[i] + h * wp_[i];
    }
    const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    const double alpha = pp.alpha();
    const double gb = pp.gamma * pp.beta;
    rv_.resize(n);
    rp_.resize(n);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double vl = i == 0 ? 0.0 : vmid_[i - 1];
      const double pl = i == 0 ? 0.0 : pmid_[i - 1];
      const double vr = i + 1 == n ? vmid_[n - 2] : vmid_[i + 1];
      const double pr = i + 1 == n ? pmid_[n - 2] : pmid_[i + 1];
      const double dv = (vr - 2.0 * vmid_[i] + vl) * inv_dx2;
      const double dp = (pr - 2.0 * pmid_[i] + pl) * inv_dx2;
      const double av = (alpha * dv - gb * dp - sys_.nl.f1(vmid_[i], pmid_[i]) - sys_.nl.g1(wv_[i]) +
                         pp.epsilon * sys_.forcing.h1[i]) /
                        pp.rho;
      const double ap = (pp.beta * dp - gb * dv - sys_.nl.f2(vmid_[i], pmid_[i]) - sys_.nl.g2(wp_[i]) +
                         pp.epsilon * sys_.forcing.h2[i]) /
                        pp.mu;
      rv_[i] = wv_[i] - z.vt[i] - h * av;
      rp_[i] = wp_[i] - z.pt[i] - h * ap;
      worst = std::max({worst, std::abs(rv_[i]), std::abs(rp_[i])});
      if (std::isnan(rv_[i]) || std::isnan(rp_[i])) worst = rv_[i] + rp_[i];
    }
    return worst;
  }

  const BeamSystem& sys_;
  BlockTridiagonal jac_;
  std::vector<double> wv_, wp_, rv_, rp_;
  std::vector<Vec2> rhs_;
  FieldVec vmid_, pmid_;
  std::size_t last_iterations_ = 0;
  double last_residual_ = 0.0;
};

inline State step_midpoint(const BeamSystem& sys, const State& z, const StepConfig& cfg) {
  cfg.validate();
  z.require_conforming(sys.grid);
  MidpointStepper stepper(sys);
  return stepper.step(z, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
}

/// One step with -dt; the midpoint map is symmetric so this undoes step_midpoint.
inline State step_midpoint_backward(const BeamSystem& sys, const State& z, const StepConfig& cfg) {
  cfg.validate();
  MidpointStepper stepper(sys);
  return stepper.step(z, -cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
}

struct EnergySample {
  double t = 0.0;
  double E = 0.0;         // half the squared phase-space norm
  double total_E = 0.0;   // E plus potential minus forcing work
  double dissipation = 0.0;
};

using EnergySeries = std::vector<EnergySample>;

inline EnergySample energy_sample(const BeamSystem& sys, const State& z) {
  return {z.t, 0.5 * h_norm_sq(sys.grid, sys.params, z), total_energy(sys, z),
          dissipation_rate(sys.grid, sys.nl, z)};
}

struct SimulateOptions {
  /// Keep a copy of the state every this many steps (0 = none).
  std::size_t snapshot_every = 0;
  /// Called after every accepted step with the new state and its step index.
  std::function<void(const State&, std::size_t)> observer;
};

struct SimulationResult {
  State final_state;
  EnergySeries series;
  std::vector<State> snapshots;
  std::size_t steps = 0;
};

inline std::size_t step_count(double T, double dt) {
  return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

/// Runs ceil(T/dt) midpoint steps from z0, recording energy every
/// record_every steps and at the final state.
inline SimulationResult simulate(const BeamSystem& sys, const State& z0, double T, const StepConfig& cfg,
                                 const SimulateOptions& options = {}) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "simulation horizon T must be positive");
  cfg.validate();
  sys.validate();
  z0.require_conforming(sys.grid);

  SimulationResult result;
  const std::size_t steps = step_count(T, cfg.dt);
  MidpointStepper stepper(sys);
  State z = z0;
  result.series.push_back(energy_sample(sys, z));
  if (options.snapshot_every > 0) result.snapshots.push_back(z);
  const double t0 = z0.t;
  for (std::size_t k = 1; k <= steps; ++k) {
    try {
      z = stepper.step(z, cfg.dt, cfg.newton_tol, cfg.newton_max_iter);
    } catch (const Error& e) {
      throw e.at_time(z.t);
    }
    z.t = t0 + static_cast<double>(k) * cfg.dt;
    if (k % cfg.record_every == 0 || k == steps) result.series.push_back(energy_sample(sys, z));
    if (options.snapshot_every > 0 && (k % options.snapshot_every == 0 || k == steps)) {
      result.snapshots.push_back(z);
    }
    if (options.observer) options.observer(z, k);
  }
  result.final_state = std::move(z);
  result.steps = steps;
  return result;
}

}  // namespace pzbeam
