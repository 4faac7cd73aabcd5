#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "qsl/bounds.hpp"

// Nonlinear Landau-Zener two-mode model on the Bloch sphere:
//   H = [Gamma(t) + c (|psi2|^2 - |psi1|^2)] / 2 sigma_z + v / 2 sigma_x
// written in the polar/azimuth angles (chi, phi) with eta = cos chi.
namespace qsl::lz {

/// Gamma = c cos(chi), i.e. the interaction-cancelling feedback bias.
struct OptimalFeedback {};

struct Constant {
  double value = 0.0;
};

/// Gamma(t) = start + slope * t.
struct LinearRamp {
  double start = 0.0;
  double slope = 0.0;
};

/// Piecewise-linear Gamma(t); held at the end values outside the samples.
struct TimeSeries {
  std::vector<double> times;
  std::vector<double> values;
};

using Protocol = std::variant<OptimalFeedback, Constant, LinearRamp, TimeSeries>;

struct LzParams {
  double v = 1.0;
  double c = 0.0;
  Protocol protocol = Constant{};
  // Instantaneous phase jumps: phi is set to the target value before the
  // first step / after the last step.
  std::optional<double> kick_start;
  std::optional<double> kick_end;

  void validate() const;
  double bias(double t, double chi) const;
  // True when Gamma is a function of eta alone (so the bias integral is
  // path independent).
  bool bias_is_function_of_eta() const;
};

struct BlochState {
  double chi = 0.0;
  double phi = 0.0;
  double t = 0.0;
};

/// Wraps an azimuth into (-pi, pi].
double wrap_phase(double phi);

struct BlochRates {
  double dchi = 0.0;
  double dphi = 0.0;
};

/// d chi/dt = -v sin phi, d phi/dt = Gamma - cos chi (c + v cos phi / sin chi).
/// Throws PoleError when |sin chi| < 1e-12 and |cos phi| > 1e-9.
BlochRates bloch_rhs(const BlochState& state, const LzParams& params);

struct IntegrationOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  // Stop when chi reaches this value (event located by bisection on the
  // dense output).
  std::optional<double> chi_target;
};

struct LzRun {
  // (chi, phi) between the kicks, sampled every dt plus the stopping time.
  // phi is kept continuous (not wrapped). Analytic rates are attached.
  bounds::Trajectory trajectory;
  // F(t) = integral of Gamma d eta along the path, same grid.
  std::vector<double> bias_integral;
  BlochState before_start_kick;
  BlochState after_end_kick;
  bool arrived = false;
  double stop_time = 0.0;
};

/// Adaptive Dormand-Prince integration of the Bloch equations on [0, t_max]
/// sampled every dt. Near the poles chi is clamped to [1e-9, pi - 1e-9];
/// a nonzero drift term there raises PoleError.
LzRun integrate(const LzParams& params, double chi0, double phi0, double t_max, double dt,
                const IntegrationOptions& options = {});

/// C0 = -2 v sin chi0 cos phi0 - c (1 - eta0^2).
double integration_constant(const LzParams& params, double chi0, double phi0);

/// F(eta) = integral_{eta0}^{eta} Gamma d eta' for eta-only protocols.
double bias_integral(const LzParams& params, double eta0, double eta);

/// max_k |sin chi (c + f) + 2 v cos phi| with f = (2F + C0) / sin^2 chi.
/// C0 is taken from the first trajectory sample (after the start kick).
double conserved_residual(const LzRun& run, const LzParams& params);

/// Time to move eta0 -> eta_tau:
///   integral d eta / (v sqrt(1 - eta^2 - [c(1 - eta^2) + 2F(eta) + C0]^2 / 4v^2)).
/// Only eta-only protocols are accepted. Throws InfeasibleError when the
/// radicand goes negative inside the interval.
double transit_time_quadrature(const LzParams& params, double eta0, double eta_tau, double c0);

/// Feedback Gamma = c cos chi with a start kick to -sgn(chi_tau - chi0) pi/2
/// and an end kick to final_phi (defaults to phi0).
LzParams optimal_protocol(const LzParams& params, double chi0, double chi_tau, double phi0,
                          std::optional<double> final_phi = std::nullopt);

/// |chi_tau - chi0| / v.
double qsl_time_lz(double v, double chi0, double chi_tau);

bounds::QslReport evaluate_lz_bounds(const LzRun& run);

struct TrajectoryRow {
  double t, chi, phi, eta, v_global, v_chi, v_phi, residual;
};

/// One row per trajectory sample with the columns of the CSV export.
std::vector<TrajectoryRow> tabulate(const LzRun& run, const LzParams& params);

}  // namespace qsl::lz
