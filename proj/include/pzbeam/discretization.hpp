#pragma once

#include <cmath>
#include <numbers>
#include <cstddef>
#include <vector>

#include "pzbeam/error.hpp"
#include "pzbeam/grid.hpp"
#include "pzbeam/model.hpp"
#include "pzbeam/state.hpp"

namespace pzbeam {

/// Cell-midpoint values (u_j - u_{j-1})/dx, j = 1..N.
using MidpointVec = std::vector<double>;

/// Three-point second difference. Ghost u_0 = 0 on the clamped end and the
/// reflected ghost u_{N+1} = u_{N-1} on the free end.
inline FieldVec apply_dxx(const Grid& grid, const FieldVec& u) {
  require_conforming(grid, u);
  const std::size_t n = grid.size();
  const double inv = 1.0 / (grid.dx() * grid.dx());
  FieldVec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? 0.0 : u[i - 1];
    const double right = i + 1 == n ? u[n - 2] : u[i + 1];
    out[i] = (right - 2.0 * u[i] + left) * inv;
  }
  return out;
}

inline MidpointVec apply_dplus(const Grid& grid, const FieldVec& u) {
  require_conforming(grid, u);
  const double inv = 1.0 / grid.dx();
  MidpointVec out(grid.size());
  double previous = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = (u[i] - previous) * inv;
    previous = u[i];
  }
  return out;
}

/// Trapezoid quadrature of u*w with the clamped node contributing zero.
inline double weighted_inner(const Grid& grid, const FieldVec& u, const FieldVec& w) {
  require_conforming(grid, u);
  require_conforming(grid, w);
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) sum += grid.weight(i) * u[i] * w[i];
  return sum;
}

inline double weighted_norm_sq(const Grid& grid, const FieldVec& u) { return weighted_inner(grid, u, u); }

/// Midpoint quadrature dx * sum(a_j b_j) for cell-centred data.
inline double midpoint_inner(const Grid& grid, const MidpointVec& a, const MidpointVec& b) {
  if (a.size() != grid.size() || b.size() != grid.size()) {
    throw Error(ErrorKind::DimensionMismatch, "midpoint vector does not match grid");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return grid.dx() * sum;
}

/// Discrete |u_x|^2.
inline double gradient_norm_sq(const Grid& grid, const FieldVec& u) {
  const MidpointVec d = apply_dplus(grid, u);
  return midpoint_inner(grid, d, d);
}

/// (quadrature of |u|^p)^(1/p) for even p >= 2, same weights as weighted_inner.
inline double lp_seminorm(const Grid& grid, const FieldVec& u, int p_exp) {
  if (p_exp < 2 || p_exp % 2 != 0) {
    throw Error(ErrorKind::InvalidArgument, "lp_seminorm exponent must be an even integer >= 2");
  }
  require_conforming(grid, u);
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) sum += grid.weight(i) * std::pow(std::abs(u[i]), p_exp);
  return std::pow(sum, 1.0 / p_exp);
}

/// Stiffness part alpha1 |v_x|^2 + beta |gamma v_x - p_x|^2.
inline double stiffness_form(const Grid& grid, const PhysicalParams& params, const FieldVec& v,
                             const FieldVec& p) {
  const MidpointVec dv = apply_dplus(grid, v);
  const MidpointVec dp = apply_dplus(grid, p);
  double sv = 0.0, sc = 0.0;
  for (std::size_t i = 0; i < dv.size(); ++i) {
    const double c = params.gamma * dv[i] - dp[i];
    sv += dv[i] * dv[i];
    sc += c * c;
  }
  return grid.dx() * (params.alpha1 * sv + params.beta * sc);
}

/// Squared phase-space norm.
inline double h_norm_sq(const Grid& grid, const PhysicalParams& params, const State& z) {
  z.require_conforming(grid);
  return stiffness_form(grid, params, z.v, z.p) + params.rho * weighted_norm_sq(grid, z.vt) +
         params.mu * weighted_norm_sq(grid, z.pt);
}

inline double h_distance(const Grid& grid, const PhysicalParams& params, const State& a, const State& b) {
  return std::sqrt(h_norm_sq(grid, params, difference(a, b)));
}

namespace detail {

/// Solves (-Dxx) x = b with the Thomas algorithm.
inline FieldVec solve_negative_dxx(const Grid& grid, const FieldVec& b) {
  const std::size_t n = grid.size();
  const double inv = 1.0 / (grid.dx() * grid.dx());
  std::vector<double> c(n), d(n);
  double diag = 2.0 * inv;
  c[0] = -inv / diag;
  d[0] = b[0] / diag;
  for (std::size_t i = 1; i < n; ++i) {
    const double sub = i + 1 == n ? -2.0 * inv : -inv;
    const double sup = -inv;
    const double denom = 2.0 * inv - sub * c[i - 1];
    c[i] = sup / denom;
    d[i] = (b[i] - sub * d[i - 1]) / denom;
  }
  FieldVec x(n);
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace detail

struct EigenPair {
  double value = 0.0;
  FieldVec vector;
  std::size_t iterations = 0;
};

/// Smallest eigenpair of -Dxx by inverse power iteration; the Rayleigh
/// quotient is taken in the weighted inner product, where -Dxx is symmetric.
inline EigenPair smallest_eigenpair(const Grid& grid, double tol, std::size_t max_iter = 10000) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "eigenvalue tolerance must be positive");
  FieldVec x(grid.size(), 1.0);
  double lambda = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    FieldVec y = detail::solve_negative_dxx(grid, x);
    const double norm = std::sqrt(weighted_norm_sq(grid, y));
    y *= 1.0 / norm;
    const FieldVec ay = apply_dxx(grid, y);
    const double next = -weighted_inner(grid, ay, y);
    x = std::move(y);
    if (it > 1 && std::abs(next - lambda) <= tol * std::abs(next)) {
      return {next, std::move(x), it};
    }
    lambda = next;
  }
  throw Error(ErrorKind::IterationCap, "inverse iteration did not converge");
}

inline double smallest_eigenvalue(const Grid& grid, double tol) { return smallest_eigenpair(grid, tol).value; }

/// Closed form of the smallest eigenvalue of -Dxx: (4/dx^2) sin^2(pi dx / (4 L)).
inline double discrete_lambda1(const Grid& grid) {
  const double s = std::sin(std::numbers::pi * grid.dx() / (4.0 * grid.length()));
  return 4.0 * s * s / (grid.dx() * grid.dx());
}

}  // namespace pzbeam
