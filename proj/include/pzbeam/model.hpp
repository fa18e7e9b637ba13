#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pzbeam/error.hpp"
#include "pzbeam/grid.hpp"
#include "pzbeam/rng.hpp"

namespace pzbeam {

struct PhysicalParams {
  double rho = 1.0;
  double mu = 1.0;
  double alpha1 = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double length = 1.0;
  double epsilon = 0.0;

  /// Full elastic stiffness alpha1 + gamma^2 beta.
  double alpha() const noexcept { return alpha1 + gamma * gamma * beta; }

  /// Throws ValidationError naming the first violated invariant.
  void validate() const {
    auto positive = [](double value, const char* name) {
      if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(ErrorKind::ValidationError, std::string(name) + " > 0");
      }
    };
    positive(rho, "rho");
    positive(mu, "mu");
    positive(alpha1, "alpha1");
    positive(beta, "beta");
    positive(gamma, "gamma");
    positive(length, "length");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
      throw Error(ErrorKind::ValidationError, "epsilon ∈ [0,1]");
    }
  }
};

/// Constants a nonlinearity declares about itself. They are checked by
/// validate_assumptions, never inferred.
struct NonlinearityConstants {
  double beta0 = 0.0;  // lower-bound slope of the potential
  double m_F = 0.0;    // lower-bound offset of the potential
  double C_f = 1.0;    // Lipschitz-growth constant of (f1, f2)
  double r = 1.0;      // growth exponent of (f1, f2)
  double growth = 0.0; // F(v,p) <= growth * (1 + |v|^{r+1} + |p|^{r+1})
  double m = 1.0;      // lower slope of the damping
  double M1 = 1.0;     // upper slope of the damping
  double q = 1.0;      // damping growth exponent
  std::optional<double> M2;  // superlinear coercivity, needed when q >= 3
  std::optional<double> l;
};

/// Second derivatives of the potential: {d f1/dv, d f1/dp = d f2/dv, d f2/dp}.
using Hessian = std::array<double, 3>;

struct Nonlinearity {
  std::string name;
  std::function<double(double, double)> potential;
  std::function<double(double, double)> f1;
  std::function<double(double, double)> f2;
  std::function<Hessian(double, double)> hessian;  // optional; finite differences otherwise
  std::function<double(double)> g1;
  std::function<double(double)> g2;
  std::function<double(double)> dg1;  // optional
  std::function<double(double)> dg2;  // optional
  NonlinearityConstants constants;
  /// Permits damping with m = 0 so conservative integrator checks can run.
  bool diagnostics_only = false;

  Hessian hessian_at(double v, double p) const {
    if (hessian) return hessian(v, p);
    const double hv = 1e-6 * (1.0 + std::abs(v));
    const double hp = 1e-6 * (1.0 + std::abs(p));
    const double f1v = (f1(v + hv, p) - f1(v - hv, p)) / (2 * hv);
    const double f1p = (f1(v, p + hp) - f1(v, p - hp)) / (2 * hp);
    const double f2p = (f2(v, p + hp) - f2(v, p - hp)) / (2 * hp);
    return {f1v, f1p, f2p};
  }

  double dg1_at(double s) const { return dg1 ? dg1(s) : central_difference(g1, s); }
  double dg2_at(double s) const { return dg2 ? dg2(s) : central_difference(g2, s); }

 private:
  static double central_difference(const std::function<double(double)>& g, double s) {
    const double h = 1e-6 * (1.0 + std::abs(s));
    return (g(s + h) - g(s - h)) / (2 * h);
  }
};

/// Coefficients of the built-in polynomial family
///   F(v,p) = quartic/4 (v^4 + p^4) + coupling/2 v^2 p^2 - well/2 (v^2 + p^2)
///   g1(s) = g2(s) = damping_linear s + damping_cubic s^3.
struct PolynomialCoefficients {
  double quartic = 1.0;
  double coupling = 1.0;
  double well = 0.0;
  double damping_linear = 1.0;
  double damping_cubic = 1.0;
};

inline PolynomialCoefficients preset_coefficients(const std::string& name) {
  if (name == "default_quartic") return {1.0, 1.0, 0.0, 1.0, 1.0};
  if (name == "double_well") return {1.0, 0.0, 4.0, 1.0, 1.0};
  if (name == "linear_damping") return {0.0, 0.0, 0.0, 1.0, 0.0};
  if (name == "zero") return {0.0, 0.0, 0.0, 0.0, 0.0};
  throw Error(ErrorKind::ValidationError, "unknown nonlinearity '" + name + "'");
}

/// Builds a member of the polynomial family and declares its constants.
inline Nonlinearity polynomial_nonlinearity(const std::string& name, const PolynomialCoefficients& c) {
  for (double value : {c.quartic, c.coupling, c.well, c.damping_linear, c.damping_cubic}) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(ErrorKind::ValidationError, "nonlinearity coefficients >= 0");
    }
  }
  if (c.well > 0.0 && c.quartic <= 0.0) {
    throw Error(ErrorKind::ValidationError, "well > 0 requires quartic > 0");
  }
  const double a = c.quartic, k = c.coupling, w = c.well;
  const double d1 = c.damping_linear, d3 = c.damping_cubic;

  Nonlinearity nl;
  nl.name = name;
  nl.potential = [a, k, w](double v, double p) {
    const double v2 = v * v, p2 = p * p;
    return 0.25 * a * (v2 * v2 + p2 * p2) + 0.5 * k * v2 * p2 - 0.5 * w * (v2 + p2);
  };
  nl.f1 = [a, k, w](double v, double p) { return a * v * v * v + k * v * p * p - w * v; };
  nl.f2 = [a, k, w](double v, double p) { return a * p * p * p + k * v * v * p - w * p; };
  nl.hessian = [a, k, w](double v, double p) {
    return Hessian{3 * a * v * v + k * p * p - w, 2 * k * v * p, 3 * a * p * p + k * v * v - w};
  };
  auto g = [d1, d3](double s) { return d1 * s + d3 * s * s * s; };
  auto dg = [d1, d3](double s) { return d1 + 3 * d3 * s * s; };
  nl.g1 = g;
  nl.g2 = g;
  nl.dg1 = dg;
  nl.dg2 = dg;

  NonlinearityConstants& nc = nl.constants;
  const bool superlinear = a > 0.0 || k > 0.0;
  nc.beta0 = 0.0;
  // min over s >= 0 of a/4 s^2 - w/2 s is -w^2/(4a), once per component; the
  // virial combination bottoms out at -w^2/(12a) per component.
  nc.m_F = w > 0.0 ? w * w / (2.0 * a) : 0.0;
  nc.r = superlinear ? 3.0 : 1.0;
  nc.C_f = std::max({3.0 * a + 2.0 * k, w, 1.0});
  nc.growth = superlinear ? 0.25 * (a + k) : 0.0;
  nc.m = d1;
  if (d3 > 0.0) {
    nc.M1 = std::max(d1, 3.0 * d3);
    nc.q = 3.0;
    nc.M2 = d3;
    nc.l = 4.0;
  } else {
    nc.M1 = d1 > 0.0 ? d1 : 1.0;
    nc.q = 1.0;
  }
  nl.diagnostics_only = !(d1 > 0.0);
  return nl;
}

inline Nonlinearity make_nonlinearity(const std::string& name,
                                      const std::map<std::string, double>& overrides = {}) {
  PolynomialCoefficients c = preset_coefficients(name);
  for (const auto& [key, value] : overrides) {
    if (key == "quartic") c.quartic = value;
    else if (key == "coupling") c.coupling = value;
    else if (key == "well") c.well = value;
    else if (key == "damping_linear") c.damping_linear = value;
    else if (key == "damping_cubic") c.damping_cubic = value;
    else throw Error(ErrorKind::ValidationError, "unknown nonlinearity override '" + key + "'");
  }
  return polynomial_nonlinearity(name, c);
}

/// F = 1/4 (v^2 + p^2)^2 with damping s + s^3.
inline Nonlinearity default_nonlinearity() { return make_nonlinearity("default_quartic"); }

struct Forcing {
  FieldVec h1;
  FieldVec h2;

  static Forcing zero(const Grid& grid) { return {FieldVec(grid.size()), FieldVec(grid.size())}; }
};

struct DerivedConstants {
  double alpha = 0.0;
  double lambda1 = 0.0;
  double kappa = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double C_F = 0.0;
};

/// Fundamental eigenvalue of -u'' with u(0) = 0, u'(L) = 0.
inline double analytic_lambda1(double length) {
  const double k = std::numbers::pi / (2.0 * length);
  return k * k;
}

/// `forcing_norm_sq` is |h1|^2 + |h2|^2. `lambda1` defaults to the analytic
/// value; pass the discrete eigenvalue to get constants that bound discrete
/// fields exactly.
inline DerivedConstants derived_constants(const PhysicalParams& params, double beta0, double m_F,
                                          double forcing_norm_sq,
                                          std::optional<double> lambda1 = std::nullopt) {
  params.validate();
  DerivedConstants dc;
  dc.alpha = params.alpha();
  dc.lambda1 = lambda1.value_or(analytic_lambda1(params.length));
  if (!(dc.lambda1 > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda1 must be positive");
  dc.kappa = std::max((2.0 * params.gamma * params.gamma + 1.0) / params.alpha1, 2.0 / params.beta);
  dc.beta1 = dc.kappa / dc.lambda1;
  dc.beta2 = 0.25 * (1.0 - 2.0 * beta0 * dc.beta1);
  if (!(dc.beta2 > 0.0)) {
    throw Error(ErrorKind::AssumptionViolated,
                "beta0 * beta1 must be below 1/2 (beta2 = " + std::to_string(dc.beta2) + ")");
  }
  dc.C_F = params.length * m_F + dc.beta1 / (4.0 * dc.beta2) * forcing_norm_sq;
  return dc;
}

/// Constant C with  total energy <= C (1 + |z|^{r+1}).  Built from
/// |u|_inf^2 <= L |u_x|^2, |v_x|^2 + |p_x|^2 <= kappa |z|^2, the declared
/// growth of F and Young's inequality on the forcing term; never below C_F.
inline double energy_upper_constant(const PhysicalParams& params, const NonlinearityConstants& nc,
                                    const DerivedConstants& dc, double forcing_norm_sq) {
  const double L = params.length;
  const double exponent = nc.r + 1.0;
  const double sup_factor = std::pow(L * dc.kappa, 0.5 * exponent);
  const double constant_part = 0.5 + nc.growth * L + 0.5 * forcing_norm_sq + 0.5 * dc.beta1;
  const double growth_part = 0.5 + 2.0 * nc.growth * L * sup_factor + 0.5 * dc.beta1;
  return std::max({constant_part, growth_part, dc.C_F});
}

struct SampleBox {
  double v_lo = -5.0, v_hi = 5.0;
  double p_lo = -5.0, p_hi = 5.0;
};

struct AssumptionCheck {
  std::string name;
  bool passed = true;
  bool warning_only = false;
  double worst_margin = std::numeric_limits<double>::infinity();  // < 0 means violated
  double worst_v = 0.0;  // worst sample (damping checks use worst_v for s)
  double worst_p = 0.0;
  std::string note;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AssumptionCheck& c) { return c.passed || c.warning_only; });
  }
  const AssumptionCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

namespace detail {

struct MarginTracker {
  AssumptionCheck check;

  explicit MarginTracker(std::string name) { check.name = std::move(name); }

  void observe(double margin, double v, double p = 0.0) {
    if (std::isnan(margin)) margin = -std::numeric_limits<double>::infinity();
    if (margin < check.worst_margin) {
      check.worst_margin = margin;
      check.worst_v = v;
      check.worst_p = p;
    }
  }
  AssumptionCheck finish() {
    check.passed = check.worst_margin >= 0.0;
    return check;
  }
};

inline double rel_tol(double scale) { return 1e-12 * (1.0 + std::abs(scale)); }

}  // namespace detail

/// Samples the declared constants of `nl` against every structural assumption.
/// `beta1`, when given, enables the smallness check on beta0.
inline ValidationReport validate_assumptions(const Nonlinearity& nl, const SampleBox& box,
                                             std::size_t n_samples, std::uint64_t seed,
                                             std::optional<double> beta1 = std::nullopt) {
  if (n_samples < 100) throw Error(ErrorKind::InvalidArgument, "n_samples must be at least 100");
  if (!(box.v_hi > box.v_lo) || !(box.p_hi > box.p_lo)) {
    throw Error(ErrorKind::InvalidArgument, "sample box is degenerate");
  }
  const NonlinearityConstants& nc = nl.constants;
  Rng rng(seed);

  // Box corners first so edge violations are hit exactly.
  std::vector<std::array<double, 2>> points = {
      {box.v_lo, box.p_lo}, {box.v_lo, box.p_hi}, {box.v_hi, box.p_lo}, {box.v_hi, box.p_hi}};
  while (points.size() < n_samples) {
    points.push_back({rng.uniform(box.v_lo, box.v_hi), rng.uniform(box.p_lo, box.p_hi)});
  }
  const double s_lo = std::min(box.v_lo, box.p_lo);
  const double s_hi = std::max(box.v_hi, box.p_hi);
  std::vector<double> speeds = {s_lo, s_hi, 0.0};
  while (speeds.size() < n_samples) speeds.push_back(rng.uniform(s_lo, s_hi));

  ValidationReport report;
  auto norm_sq = [](double v, double p) { return v * v + p * p; };

  {
    detail::MarginTracker t("gradient_consistency");
    for (const auto& [v, p] : points) {
      const double hv = 1e-4 * (1.0 + std::abs(v));
      const double hp = 1e-4 * (1.0 + std::abs(p));
      const double dFdv = (nl.potential(v + hv, p) - nl.potential(v - hv, p)) / (2 * hv);
      const double dFdp = (nl.potential(v, p + hp) - nl.potential(v, p - hp)) / (2 * hp);
      const double f1 = nl.f1(v, p), f2 = nl.f2(v, p);
      const double tol = 1e-6 * (1.0 + std::abs(nl.potential(v, p)) + std::abs(f1) + std::abs(f2));
      t.observe(tol - std::max(std::abs(dFdv - f1), std::abs(dFdp - f2)), v, p);
    }
    report.checks.push_back(t.finish());
  }
  {
    detail::MarginTracker t("potential_lower_bound");
    for (const auto& [v, p] : points) {
      const double F = nl.potential(v, p);
      t.observe(F + nc.beta0 * norm_sq(v, p) + nc.m_F + detail::rel_tol(F), v, p);
    }
    report.checks.push_back(t.finish());
  }
  {
    detail::MarginTracker t("virial_lower_bound");
    for (const auto& [v, p] : points) {
      const double F = nl.potential(v, p);
      const double virial = nl.f1(v, p) * v + nl.f2(v, p) * p - F;
      t.observe(virial + nc.beta0 * norm_sq(v, p) + nc.m_F + detail::rel_tol(virial), v, p);
    }
    report.checks.push_back(t.finish());
  }
  {
    // Joint reading: the difference is taken between two points of the plane.
    detail::MarginTracker t("lipschitz_growth");
    for (std::size_t i = 0; i + 1 < points.size(); i += 2) {
      const auto [va, pa] = points[i];
      const auto [vb, pb] = points[i + 1];
      const double dist = std::sqrt(norm_sq(va - vb, pa - pb));
      const double factor = nc.C_f *
                            (1.0 + std::pow(std::sqrt(norm_sq(va, pa)), nc.r - 1.0) +
                             std::pow(std::sqrt(norm_sq(vb, pb)), nc.r - 1.0)) *
                            dist;
      const double d1 = std::abs(nl.f1(va, pa) - nl.f1(vb, pb));
      const double d2 = std::abs(nl.f2(va, pa) - nl.f2(vb, pb));
      t.observe(factor - std::max(d1, d2) + detail::rel_tol(factor), va, pa);
    }
    report.checks.push_back(t.finish());
  }
  {
    detail::MarginTracker t("potential_growth");
    for (const auto& [v, p] : points) {
      const double bound = nc.growth * (1.0 + std::pow(std::abs(v), nc.r + 1.0) +
                                        std::pow(std::abs(p), nc.r + 1.0));
      const double F = nl.potential(v, p);
      t.observe(bound - F + detail::rel_tol(F), v, p);
    }
    report.checks.push_back(t.finish());
  }

  const std::array<const std::function<double(double)>*, 2> dampings = {&nl.g1, &nl.g2};
  {
    detail::MarginTracker t("damping_vanishes_at_zero");
    for (const auto* g : dampings) t.observe(1e-14 - std::abs((*g)(0.0)), 0.0);
    report.checks.push_back(t.finish());
  }
  {
    detail::MarginTracker t("damping_slope_bounds");
    for (double s : speeds) {
      const double d1 = nl.dg1_at(s), d2 = nl.dg2_at(s);
      const double upper = nc.M1 * (1.0 + std::pow(std::abs(s), nc.q - 1.0));
      const double tol = 1e-8 * (1.0 + upper);
      t.observe(std::min({d1 - nc.m, d2 - nc.m, upper - d1, upper - d2}) + tol, s);
    }
    report.checks.push_back(t.finish());
  }
  {
    detail::MarginTracker t("damping_monotone_gap");
    for (std::size_t i = 0; i + 1 < speeds.size(); i += 2) {
      const double a = speeds[i], b = speeds[i + 1];
      for (const auto* g : dampings) {
        const double gap = ((*g)(a) - (*g)(b)) * (a - b);
        const double need = nc.m * (a - b) * (a - b);
        t.observe(gap - need + detail::rel_tol(need), a, b);
      }
    }
    report.checks.push_back(t.finish());
  }
  {
    detail::MarginTracker t("damping_superlinear");
    if (nc.q >= 3.0) {
      if (!nc.M2 || !nc.l || !(*nc.M2 > 0.0)) {
        t.observe(-1.0, 0.0);
        t.check.note = "q >= 3 requires M2 > 0 and l";
      } else if (!(*nc.l > nc.q - 1.0)) {
        t.observe(-1.0, 0.0);
        t.check.note = "l must exceed q - 1";
      } else {
        for (double s : speeds) {
          if (std::abs(s) < 1.0) continue;
          const double need = *nc.M2 * std::pow(std::abs(s), *nc.l);
          for (const auto* g : dampings) t.observe((*g)(s) * s - need + detail::rel_tol(need), s);
        }
      }
    } else {
      t.check.note = "not required for q < 3";
    }
    report.checks.push_back(t.finish());
  }
  {
    AssumptionCheck c;
    c.name = "dissipation_positive";
    c.worst_margin = nc.m;
    c.passed = nc.m > 0.0;
    if (!c.passed && nl.diagnostics_only) {
      c.warning_only = true;
      c.note = "diagnostics-only nonlinearity, m = 0 permitted";
    }
    report.checks.push_back(c);
  }
  {
    AssumptionCheck c;
    c.name = "dissipation_at_least_one";
    c.worst_margin = nc.m - 1.0;
    c.passed = nc.m >= 1.0;
    c.warning_only = true;
    report.checks.push_back(c);
  }
  {
    AssumptionCheck c;
    c.name = "structural_exponents";
    c.passed = nc.r >= 1.0 && nc.q >= 1.0 && nc.C_f > 0.0 && nc.M1 > 0.0 && nc.beta0 >= 0.0 &&
               nc.m_F >= 0.0 && nc.growth >= 0.0;
    c.worst_margin = c.passed ? 0.0 : -1.0;
    report.checks.push_back(c);
  }
  if (beta1) {
    AssumptionCheck c;
    c.name = "beta0_small";
    c.worst_margin = 1.0 / (2.0 * *beta1) - nc.beta0;
    c.passed = c.worst_margin > 0.0;
    report.checks.push_back(c);
  }
  return report;
}

}  // namespace pzbeam
