#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "pzbeam/block_tridiagonal.hpp"
#include "pzbeam/discretization.hpp"
#include "pzbeam/integrator.hpp"
#include "pzbeam/parallel.hpp"
#include "pzbeam/rng.hpp"

namespace pzbeam {

/// Solution of the stationary elliptic system, embedded as (v, p, 0, 0).
struct StationaryPoint {
  FieldVec v, p;
  double residual_norm = 0.0;
  double h_norm_sq = 0.0;
  std::size_t iterations = 0;

  State as_state(double t = 0.0) const {
    return {v, p, FieldVec(v.size()), FieldVec(p.size()), t};
  }
};

namespace detail {

/// Stationary residual -alpha v'' + gb p'' + f1 - eps h1 (and the p-row);
/// returns max |R|.
inline double stationary_residual(const BeamSystem& sys, const FieldVec& v, const FieldVec& p,
                                  std::vector<Vec2>& out) {
  const PhysicalParams& pp = sys.params;
  const FieldVec dv = apply_dxx(sys.grid, v);
  const FieldVec dp = apply_dxx(sys.grid, p);
  const double alpha = pp.alpha(), gb = pp.gamma * pp.beta;
  out.resize(sys.grid.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sys.grid.size(); ++i) {
    out[i].x = -alpha * dv[i] + gb * dp[i] + sys.nl.f1(v[i], p[i]) - pp.epsilon * sys.forcing.h1[i];
    out[i].y = -pp.beta * dp[i] + gb * dv[i] + sys.nl.f2(v[i], p[i]) - pp.epsilon * sys.forcing.h2[i];
    if (!std::isfinite(out[i].x) || !std::isfinite(out[i].y)) return std::numeric_limits<double>::infinity();
    worst = std::max({worst, std::abs(out[i].x), std::abs(out[i].y)});
  }
  return worst;
}

inline double merit(const Grid& grid, const std::vector<Vec2>& r) {
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) sum += grid.weight(i) * (r[i].x * r[i].x + r[i].y * r[i].y);
  return sum;
}

}  // namespace detail

/// Damped Newton on the stationary system starting from (guess_v, guess_p).
inline StationaryPoint solve_stationary(const BeamSystem& sys, const FieldVec& guess_v, const FieldVec& guess_p,
                                        double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "stationary tolerance must be positive");
  sys.validate();
  require_conforming(sys.grid, guess_v, "guess v");
  require_conforming(sys.grid, guess_p, "guess p");
  const Grid& grid = sys.grid;
  const PhysicalParams& pp = sys.params;
  const std::size_t n = grid.size();
  const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
  const double alpha = pp.alpha(), gb = pp.gamma * pp.beta;

  FieldVec v = guess_v, p = guess_p;
  std::vector<Vec2> r, step, trial_r;
  BlockTridiagonal jac(n);
  double res = detail::stationary_residual(sys, v, p, r);
  std::size_t it = 0;
  for (; res > tol; ++it) {
    if (it >= max_iter || !std::isfinite(res)) {
      throw Error(ErrorKind::NewtonDiverged,
                  "stationary residual " + std::to_string(res) + " after " + std::to_string(it) + " iterations");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Hessian h = sys.nl.hessian_at(v[i], p[i]);
      const double d = -2.0 * inv_dx2;
      jac.diag[i] = {-alpha * d + h[0], gb * d + h[1], gb * d + h[1], -pp.beta * d + h[2]};
      const double sub = i + 1 == n ? 2.0 * inv_dx2 : inv_dx2;
      jac.lower[i] = i == 0 ? Mat2{} : Mat2{-alpha * sub, gb * sub, gb * sub, -pp.beta * sub};
      jac.upper[i] = i + 1 == n ? Mat2{} : Mat2{-alpha * inv_dx2, gb * inv_dx2, gb * inv_dx2, -pp.beta * inv_dx2};
    }
    step.resize(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = Vec2{-r[i].x, -r[i].y};
    jac.solve(step);

    // Backtracking on the weighted residual norm.
    const double m0 = detail::merit(grid, r);
    double lambda = 1.0;
    FieldVec tv(n), tp(n);
    double tres = 0.0;
    for (int k = 0; k < 30; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        tv[i] = v[i] + lambda * step[i].x;
        tp[i] = p[i] + lambda * step[i].y;
      }
      tres = detail::stationary_residual(sys, tv, tp, trial_r);
      if (std::isfinite(tres) && detail::merit(grid, trial_r) <= (1.0 - 1e-4 * lambda) * m0) break;
      if (std::isfinite(tres) && tres <= tol) break;
      lambda *= 0.5;
    }
    v = std::move(tv);
    p = std::move(tp);
    r.swap(trial_r);
    res = tres;
  }
  StationaryPoint pt{std::move(v), std::move(p), res, 0.0, it};
  pt.h_norm_sq = stiffness_form(grid, pp, pt.v, pt.p);
  return pt;
}

struct StationaryBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// 3 beta2 |z|^2 <= 2 L m_F + beta1/(4 beta2) (|h1|^2 + |h2|^2).
inline StationaryBound check_stationary_bound(const StationaryPoint& pt, const DerivedConstants& dc, double m_F,
                                              double forcing_norm_sq, double length) {
  StationaryBound b;
  b.lhs = 3.0 * dc.beta2 * pt.h_norm_sq;
  b.rhs = 2.0 * length * m_F + dc.beta1 / (4.0 * dc.beta2) * forcing_norm_sq;
  b.pass = b.lhs <= b.rhs + 1e-9;
  return b;
}

/// Smooth random field respecting u(0) = 0 and u'(L) = 0: a sum of the first
/// `modes` mixed-boundary eigenfunctions with coefficients scale * U(-1,1)/k.
inline FieldVec random_smooth_field(const Grid& grid, Rng& rng, double scale, int modes = 4) {
  std::vector<double> coeff(static_cast<std::size_t>(modes));
  for (int k = 0; k < modes; ++k) coeff[static_cast<std::size_t>(k)] = scale * rng.uniform(-1.0, 1.0) / (k + 1);
  return sample(grid, [&](double x) {
    double s = 0.0;
    for (int k = 0; k < modes; ++k) {
      s += coeff[static_cast<std::size_t>(k)] * std::sin((k + 0.5) * std::numbers::pi * x / grid.length());
    }
    return s;
  });
}

struct StationarySetOptions {
  std::size_t n_guesses = 16;
  double guess_scale = 1.0;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::size_t max_iter = 100;
  double dedup_tol = 1e-6;  // relative: duplicates lie within dedup_tol (1 + |z|)
  std::size_t threads = 1;
};

struct StationarySet {
  std::vector<StationaryPoint> points;
  std::size_t converged = 0;
  std::size_t dropped = 0;
};

/// Multi-start Newton. Starts run independently; deduplication folds the
/// converged points in start order.
inline StationarySet sample_stationary_set(const BeamSystem& sys, const StationarySetOptions& opt) {
  if (opt.n_guesses < 1) throw Error(ErrorKind::InvalidArgument, "n_guesses must be at least 1");
  std::vector<std::optional<StationaryPoint>> found(opt.n_guesses);
  parallel_for(opt.n_guesses, opt.threads, [&](std::size_t i) {
    Rng rng(substream_seed(opt.seed, i));
    const FieldVec gv = random_smooth_field(sys.grid, rng, opt.guess_scale);
    const FieldVec gp = random_smooth_field(sys.grid, rng, opt.guess_scale);
    try {
      found[i] = solve_stationary(sys, gv, gp, opt.tol, opt.max_iter);
    } catch (const Error&) {
      found[i].reset();
    }
  });

  StationarySet set;
  for (auto& candidate : found) {
    if (!candidate) {
      ++set.dropped;
      continue;
    }
    ++set.converged;
    const State cs = candidate->as_state();
    bool duplicate = false;
    for (const auto& existing : set.points) {
      const double d = h_distance(sys.grid, sys.params, cs, existing.as_state());
      if (d <= opt.dedup_tol * (1.0 + std::sqrt(existing.h_norm_sq))) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) set.points.push_back(std::move(*candidate));
  }
  return set;
}

}  // namespace pzbeam
