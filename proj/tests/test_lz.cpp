#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "qsl/errors.hpp"
#include "qsl/lz.hpp"

using namespace qsl::lz;
using oracle::pi;

TEST_CASE("phase wrapping") {
  CHECK(wrap_phase(pi) == doctest::Approx(pi));
  CHECK(wrap_phase(-pi) == doctest::Approx(pi));
  CHECK(wrap_phase(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(wrap_phase(0.3 + 4 * pi) == doctest::Approx(0.3));
}

TEST_CASE("protocol contracts") {
  LzParams p;
  p.v = 0.0;
  CHECK_THROWS_AS(p.validate(), qsl::ContractViolation);
  p.v = 1.0;
  p.protocol = TimeSeries{{0.0, 0.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(p.validate(), qsl::ContractViolation);
  p.protocol = TimeSeries{{0.0, 1.0}, {1.0, 3.0}};
  CHECK_NOTHROW(p.validate());
  CHECK(p.bias(0.5, 1.0) == doctest::Approx(2.0));
  CHECK(p.bias(5.0, 1.0) == doctest::Approx(3.0));
  CHECK_FALSE(p.bias_is_function_of_eta());
  p.c = 2.0;
  p.protocol = OptimalFeedback{};
  CHECK(p.bias(0.0, 0.4) == doctest::Approx(2.0 * std::cos(0.4)));
  CHECK(p.bias_is_function_of_eta());
}

TEST_CASE("pole behaviour of the right-hand side") {
  LzParams p;
  p.v = 1.0;
  // Drift term with cos(phi) != 0 at the pole diverges.
  CHECK_THROWS_AS(bloch_rhs({0.0, 0.0, 0.0}, p), qsl::PoleError);
  // phi = -pi/2 kills the divergent term.
  CHECK_NOTHROW(bloch_rhs({0.0, -pi / 2, 0.0}, p));
}

TEST_CASE("optimal protocol reaches the target in the speed-limit time") {
  for (double c : {-2.0, 0.0, 2.0}) {
    LzParams base;
    base.v = 1.0;
    base.c = c;
    const double chi0 = pi / 4;
    const double chi_tau = 3 * pi / 4;
    const auto p = optimal_protocol(base, chi0, chi_tau, 0.0);
    REQUIRE(p.kick_start.has_value());
    CHECK(*p.kick_start == doctest::Approx(-pi / 2));
    IntegrationOptions opt;
    opt.chi_target = chi_tau;
    const auto run = integrate(p, chi0, 0.0, 5.0, 1e-3, opt);
    CHECK(run.arrived);
    const double tau = qsl_time_lz(1.0, chi0, chi_tau);
    CHECK(tau == doctest::Approx(pi / 2).epsilon(1e-15));
    CHECK(run.stop_time == doctest::Approx(tau).epsilon(1e-8));
    CHECK(conserved_residual(run, p) < 1e-8);
    const auto rep = evaluate_lz_bounds(run);
    CHECK(rep.global_bound == doctest::Approx(tau).epsilon(1e-7));
    CHECK(rep.tau_qsl == doctest::Approx(run.stop_time).epsilon(1e-7));
    CHECK(run.after_end_kick.phi == doctest::Approx(0.0));
  }
}

TEST_CASE("descending target kicks to +pi/2") {
  LzParams base;
  base.v = 2.0;
  base.c = 1.0;
  const auto p = optimal_protocol(base, 2.0, 1.0, 0.3);
  CHECK(*p.kick_start == doctest::Approx(pi / 2));
  IntegrationOptions opt;
  opt.chi_target = 1.0;
  const auto run = integrate(p, 2.0, 0.3, 3.0, 1e-3, opt);
  CHECK(run.arrived);
  CHECK(run.stop_time == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("adaptive integrator agrees with fixed-step RK4") {
  LzParams p;
  p.v = 1.0;
  p.c = 0.8;
  p.protocol = LinearRamp{-1.0, 0.5};
  const auto run = integrate(p, 1.1, 0.4, 3.0, 0.01);
  const auto ref =
      oracle::rk4_bloch(1.0, 0.8, [](double t, double) { return -1.0 + 0.5 * t; }, 1.1, 0.4, 3.0, 1e-4);
  const auto& s = run.trajectory.samples();
  const auto last = static_cast<Eigen::Index>(run.trajectory.size() - 1);
  CHECK(run.trajectory.times().back() == doctest::Approx(3.0));
  CHECK(s(last, 0) == doctest::Approx(ref.chi.back()).epsilon(1e-8));
  CHECK(s(last, 1) == doctest::Approx(ref.phi.back()).epsilon(1e-8));
}

TEST_CASE("conserved quantity holds for time-dependent biases") {
  LzParams ramp;
  ramp.v = 1.3;
  ramp.c = 1.7;
  ramp.protocol = LinearRamp{0.5, -0.4};
  CHECK(conserved_residual(integrate(ramp, 0.9, 0.2, 4.0, 0.01), ramp) < 1e-7);

  LzParams series = ramp;
  series.protocol = TimeSeries{{0.0, 1.0, 2.0, 4.0}, {0.0, 1.0, -1.0, 0.5}};
  CHECK(conserved_residual(integrate(series, 2.0, -0.5, 4.0, 0.01), series) < 1e-7);
}

TEST_CASE("transit-time quadrature matches the event time") {
  // Frozen from an independent high-accuracy ODE solve (rtol 1e-13).
  LzParams p;
  p.v = 1.0;
  p.c = 1.5;
  p.protocol = Constant{0.4};
  const double chi0 = 1.0;
  const double phi0 = -1.2;
  const double chi_target = 1.72414558670358;
  const double c0 = integration_constant(p, chi0, phi0);
  CHECK(c0 == doctest::Approx(-2 * std::sin(chi0) * std::cos(phi0) - 1.5 * std::pow(std::sin(chi0), 2)));
  const double tq = transit_time_quadrature(p, std::cos(chi0), std::cos(chi_target), c0);
  CHECK(tq == doctest::Approx(0.758665446955925).epsilon(1e-9));
  IntegrationOptions opt;
  opt.chi_target = chi_target;
  const auto run = integrate(p, chi0, phi0, 2.0, 0.01, opt);
  CHECK(run.arrived);
  CHECK(run.stop_time == doctest::Approx(tq).epsilon(1e-8));
}

TEST_CASE("bias integral of the feedback protocol") {
  LzParams p;
  p.c = 2.0;
  p.protocol = OptimalFeedback{};
  // integral of c eta d eta.
  CHECK(bias_integral(p, 0.2, 0.6) == doctest::Approx(0.5 * 2.0 * (0.36 - 0.04)).epsilon(1e-12));
}

TEST_CASE("unreachable target is infeasible") {
  LzParams p;
  p.v = 1.0;
  p.c = 1.5;
  p.protocol = Constant{0.4};
  const double c0 = integration_constant(p, 1.0, -1.2);
  // Turning point sits near chi = 2.207; chi = 2.8 is classically forbidden.
  CHECK_THROWS_AS(transit_time_quadrature(p, std::cos(1.0), std::cos(2.8), c0), qsl::InfeasibleError);
  LzParams ramp = p;
  ramp.protocol = LinearRamp{0.0, 1.0};
  CHECK_THROWS_AS(transit_time_quadrature(ramp, 0.5, 0.0, c0), qsl::ContractViolation);
}

TEST_CASE("tabulated rows") {
  LzParams base;
  base.v = 1.0;
  base.c = 0.5;
  const auto p = optimal_protocol(base, 0.8, 2.0, 0.0);
  IntegrationOptions opt;
  opt.chi_target = 2.0;
  const auto run = integrate(p, 0.8, 0.0, 3.0, 0.05, opt);
  const auto rows = tabulate(run, p);
  REQUIRE(rows.size() == run.trajectory.size());
  for (const auto& r : rows) {
    CHECK(r.eta == doctest::Approx(std::cos(r.chi)));
    // Pure chi motion at rate v: v_global = v / 2.
    CHECK(r.v_global == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.residual < 1e-8);
  }
}
