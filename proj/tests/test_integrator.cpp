#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "pzbeam/analysis.hpp"
#include "pzbeam/integrator.hpp"

using namespace pzbeam;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BeamSystem make_system(std::size_t n, const std::string& nl, double eps = 0.0) {
  const Grid g(1.0, n);
  PhysicalParams pp;
  pp.epsilon = eps;
  return {g, pp, make_nonlinearity(nl), Forcing::zero(g)};
}

/// Standing-wave solution of the undamped linear system: v = A cos(w t) phi,
/// p = B cos(w t) phi with phi = sin(pi x / 2L). (A, B, w^2) solve the 2x2
/// generalized eigenproblem k^2 [[alpha, -gb], [-gb, beta]] X = w^2 diag(rho, mu) X.
struct StandingWave {
  double k, omega, A, B;

  explicit StandingWave(const PhysicalParams& pp) {
    k = std::numbers::pi / (2.0 * pp.length);
    const double k2 = k * k;
    const double a = pp.alpha() * k2 / pp.rho, b = -pp.gamma * pp.beta * k2 / pp.rho;
    const double c = -pp.gamma * pp.beta * k2 / pp.mu, d = pp.beta * k2 / pp.mu;
    // Smaller eigenvalue of [[a, b], [c, d]].
    const double tr = a + d, det = a * d - b * c;
    const double w2 = 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
    omega = std::sqrt(w2);
    A = 1.0;
    B = (w2 - a) / b;
  }

  State at(const Grid& g, double t) const {
    const FieldVec phi = sample(g, [this](double x) { return std::sin(k * x); });
    State z;
    z.v = A * std::cos(omega * t) * phi;
    z.p = B * std::cos(omega * t) * phi;
    z.vt = -A * omega * std::sin(omega * t) * phi;
    z.pt = -B * omega * std::sin(omega * t) * phi;
    z.t = t;
    return z;
  }
};

}  // namespace

TEST_CASE("zero data with zero forcing stays at rest", "[integrator]") {
  const BeamSystem sys = make_system(50, "default_quartic", 1.0);
  StepConfig cfg;
  cfg.dt = 0.01;
  const SimulationResult r = simulate(sys, State::zero(sys.grid), 1.0, cfg);
  CHECK(r.steps == 100);
  CHECK(r.series.size() == 101);
  for (const auto& s : r.series) {
    CHECK(s.E == 0.0);
    CHECK(s.total_E == 0.0);
    CHECK(s.dissipation == 0.0);
  }
  CHECK_THAT(r.final_state.t, WithinAbs(1.0, 1e-12));
}

TEST_CASE("recording cadence", "[integrator]") {
  const BeamSystem sys = make_system(40, "default_quartic");
  StepConfig cfg;
  cfg.dt = 0.01;
  cfg.record_every = 30;
  SimulateOptions opt;
  opt.snapshot_every = 50;
  std::size_t observed = 0;
  opt.observer = [&](const State&, std::size_t) { ++observed; };
  const SimulationResult r = simulate(sys, random_state(sys.grid, 1, 0.5), 1.0, cfg, opt);
  CHECK(observed == 100);
  CHECK(r.series.size() == 5);  // steps 0, 30, 60, 90, 100
  CHECK_THAT(r.series.back().t, WithinAbs(1.0, 1e-12));
  CHECK(r.snapshots.size() == 3);  // steps 0, 50, 100
  CHECK(step_count(1.0, 0.3) == 4);
  CHECK(step_count(0.9, 0.3) == 3);
}

TEST_CASE("invalid integrator input", "[integrator]") {
  const BeamSystem sys = make_system(20, "default_quartic");
  StepConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(simulate(sys, State::zero(sys.grid), 1.0, cfg), Error);
  cfg.dt = 0.01;
  CHECK_THROWS_AS(simulate(sys, State::zero(sys.grid), 0.0, cfg), Error);
  CHECK_THROWS_AS(simulate(sys, State::zero(Grid(1.0, 21)), 1.0, cfg), Error);
  CHECK(StepConfig::for_grid(sys.grid).dt == 0.025);
}

TEST_CASE("discrete dissipation identity for linear damping", "[integrator][property]") {
  // E(n+1) - E(n) = -dt (g1(W_v), W_v) - dt (g2(W_p), W_p) with W the midpoint velocities.
  const BeamSystem sys = make_system(200, "linear_damping");
  MidpointStepper st(sys);
  State z = random_state(sys.grid, 17, 1.0);
  const double dt = 0.0025;
  double worst = 0.0;
  for (int k = 0; k < 400; ++k) {
    const double e0 = total_energy(sys, z);
    const State next = st.step(z, dt, 1e-12, 50);
    const State mid = st.last_midpoint(z.t + 0.5 * dt);
    const double e1 = total_energy(sys, next);
    worst = std::max(worst, std::abs(e1 - e0 + dt * dissipation_rate(sys.grid, sys.nl, mid)));
    z = next;
  }
  CHECK(worst <= 10.0 * 1e-12);
}

TEST_CASE("undamped linear motion conserves energy and reverses", "[integrator][property]") {
  BeamSystem sys = make_system(100, "zero", 1.0);
  sys.forcing.h1 = FieldVec(sys.grid.size(), 0.3);
  MidpointStepper st(sys);
  const State z0 = random_state(sys.grid, 4, 1.0);
  State z = z0;
  const double e0 = total_energy(sys, z0);
  for (int k = 0; k < 200; ++k) {
    z = st.step(z, 0.005, 1e-13, 50);
    CHECK_THAT(total_energy(sys, z), WithinAbs(e0, 1e-11 * (1 + std::abs(e0))));
  }
  for (int k = 0; k < 200; ++k) z = st.step(z, -0.005, 1e-13, 50);
  CHECK(h_distance(sys.grid, sys.params, z, z0) <= 1e-9);
}

TEST_CASE("backward step undoes a nonlinear forward step", "[integrator]") {
  BeamSystem sys = make_system(60, "zero");
  sys.nl = make_nonlinearity("double_well", {{"damping_linear", 0.0}, {"damping_cubic", 0.0}});
  StepConfig cfg;
  cfg.dt = 0.01;
  cfg.newton_tol = 1e-13;
  const State z0 = random_state(sys.grid, 8, 0.5);
  const State back = step_midpoint_backward(sys, step_midpoint(sys, z0, cfg), cfg);
  CHECK(h_distance(sys.grid, sys.params, back, z0) <= 1e-10);
}

TEST_CASE("quartic energy is nonincreasing", "[integrator][property]") {
  const BeamSystem sys = make_system(100, "default_quartic");
  StepConfig cfg;
  cfg.dt = 0.005;
  const SimulationResult r = simulate(sys, random_state(sys.grid, 2, 1.0), 10.0, cfg);
  for (std::size_t i = 1; i < r.series.size(); ++i) {
    CHECK(r.series[i].total_E - r.series[i - 1].total_E <= 1e-10);
  }
  CHECK(r.series.back().total_E < 0.5 * r.series.front().total_E);
}

TEST_CASE("manufactured standing wave converges at second order", "[integrator]") {
  PhysicalParams pp;
  pp.alpha1 = 1.3;
  pp.beta = 0.8;
  pp.gamma = 0.7;
  pp.rho = 1.1;
  pp.mu = 0.9;
  const StandingWave wave(pp);
  const double T = 1.0;
  auto error = [&](std::size_t n) {
    const Grid g(1.0, n);
    const BeamSystem sys{g, pp, make_nonlinearity("zero"), Forcing::zero(g)};
    StepConfig cfg;
    cfg.dt = 0.5 * g.dx();
    cfg.newton_tol = 1e-13;
    const State end = simulate(sys, wave.at(g, 0.0), T, cfg).final_state;
    return h_distance(g, pp, end, wave.at(g, T));
  };
  const double e1 = error(25), e2 = error(50), e3 = error(100);
  const double order1 = std::log2(e1 / e2), order2 = std::log2(e2 / e3);
  INFO("errors " << e1 << " " << e2 << " " << e3);
  CHECK(std::abs(order1 - 2.0) <= 0.2);
  CHECK(std::abs(order2 - 2.0) <= 0.2);
}

TEST_CASE("runaway dynamics surface as solver errors with a time", "[integrator]") {
  BeamSystem sys = make_system(20, "zero");
  sys.nl.f1 = [](double v, double) { return -v * v * v * v * v; };
  sys.nl.f2 = [](double, double) { return 0.0; };
  sys.nl.hessian = [](double v, double) { return Hessian{-5 * v * v * v * v, 0.0, 0.0}; };
  State z = State::zero(sys.grid);
  z.v = FieldVec(sys.grid.size(), 5.0);
  StepConfig cfg;
  cfg.dt = 0.01;
  try {
    (void)simulate(sys, z, 10.0, cfg);
    FAIL("expected a solver failure");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::BlowUp || e.kind() == ErrorKind::NewtonDiverged));
    CHECK(e.time().has_value());
  }
}
