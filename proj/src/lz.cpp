#include "qsl/lz.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>

#include "qsl/errors.hpp"
#include "qsl/geometry.hpp"

namespace qsl::lz {

namespace {

namespace odeint = boost::numeric::odeint;

using State = std::array<double, 3>;  // chi, phi, F

constexpr double kPi = std::numbers::pi;
constexpr double kPoleClamp = 1e-9;
constexpr double kPoleSin = 1e-12;
constexpr double kPoleCos = 1e-9;

struct BiasVisitor {
  double t;
  double chi;
  double c;

  double operator()(const OptimalFeedback&) const { return c * std::cos(chi); }
  double operator()(const Constant& k) const { return k.value; }
  double operator()(const LinearRamp& r) const { return r.start + r.slope * t; }
  double operator()(const TimeSeries& s) const {
    if (t <= s.times.front()) return s.values.front();
    if (t >= s.times.back()) return s.values.back();
    const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
    const auto hi = static_cast<std::size_t>(it - s.times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - s.times[lo]) / (s.times[hi] - s.times[lo]);
    return (1.0 - w) * s.values[lo] + w * s.values[hi];
  }
};

double phase_drift(double chi, double phi, double v) {
  const double s = std::sin(chi);
  const double cphi = std::cos(phi);
  if (std::abs(s) < kPoleSin) {
    if (std::abs(cphi) > kPoleCos) {
      throw PoleError("Bloch equations evaluated at a pole (chi = " + std::to_string(chi) +
                      ") with cos(phi) = " + std::to_string(cphi));
    }
    return 0.0;
  }
  return v * cphi / s;
}

}  // namespace

void LzParams::validate() const {
  if (!(v > 0.0)) throw ContractViolation("lz: coupling v must be positive");
  if (const auto* s = std::get_if<TimeSeries>(&protocol)) {
    if (s->times.empty() || s->times.size() != s->values.size()) {
      throw ContractViolation("lz: time-series protocol needs matching, non-empty samples");
    }
    for (std::size_t k = 1; k < s->times.size(); ++k) {
      if (!(s->times[k] > s->times[k - 1])) {
        throw ContractViolation("lz: time-series protocol times must increase");
      }
    }
  }
}

double LzParams::bias(double t, double chi) const {
  return std::visit(BiasVisitor{t, chi, c}, protocol);
}

bool LzParams::bias_is_function_of_eta() const {
  return std::holds_alternative<OptimalFeedback>(protocol) || std::holds_alternative<Constant>(protocol);
}

double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

BlochRates bloch_rhs(const BlochState& state, const LzParams& params) {
  const double gamma = params.bias(state.t, state.chi);
  const double drift = phase_drift(state.chi, state.phi, params.v);
  return BlochRates{-params.v * std::sin(state.phi),
                    gamma - std::cos(state.chi) * (params.c + drift)};
}

double integration_constant(const LzParams& params, double chi0, double phi0) {
  const double eta0 = std::cos(chi0);
  return -2.0 * params.v * std::sin(chi0) * std::cos(phi0) - params.c * (1.0 - eta0 * eta0);
}

double bias_integral(const LzParams& params, double eta0, double eta) {
  if (std::holds_alternative<OptimalFeedback>(params.protocol)) {
    return 0.5 * params.c * (eta * eta - eta0 * eta0);
  }
  if (const auto* k = std::get_if<Constant>(&params.protocol)) {
    return k->value * (eta - eta0);
  }
  throw ContractViolation("lz: bias integral over eta needs an eta-only protocol");
}

LzRun integrate(const LzParams& params, double chi0, double phi0, double t_max, double dt,
                const IntegrationOptions& options) {
  params.validate();
  if (!(dt > 0.0)) throw ContractViolation("lz integrate: dt must be positive");
  if (!(t_max >= 0.0)) throw ContractViolation("lz integrate: t_max must be non-negative");
  if (chi0 < 0.0 || chi0 > kPi) throw ContractViolation("lz integrate: chi0 outside [0, pi]");

  const BlochState before{chi0, phi0, 0.0};
  const double phi_start = params.kick_start ? *params.kick_start : phi0;

  auto system = [&params](const State& x, State& dxdt, double t) {
    double chi = x[0];
    const bool at_pole = chi <= kPoleClamp || chi >= kPi - kPoleClamp;
    if (at_pole) {
      if (std::abs(std::cos(x[1])) > kPoleCos) {
        throw PoleError("Bloch trajectory reached a pole at t = " + std::to_string(t) +
                        " with nonzero drift");
      }
      chi = std::clamp(chi, kPoleClamp, kPi - kPoleClamp);
    }
    const auto rates = bloch_rhs(BlochState{chi, x[1], t}, params);
    dxdt[0] = rates.dchi;
    dxdt[1] = rates.dphi;
    // dF/dt = Gamma d eta/dt = -Gamma sin chi d chi/dt
    dxdt[2] = -params.bias(t, chi) * std::sin(chi) * rates.dchi;
  };

  std::vector<double> times;
  std::vector<State> states;
  times.push_back(0.0);
  State x0{chi0, phi_start, 0.0};
  states.push_back(x0);

  const double direction =
      options.chi_target ? (*options.chi_target >= chi0 ? 1.0 : -1.0) : 0.0;
  auto event = [&](const State& x) { return direction * (x[0] - *options.chi_target); };

  bool arrived = false;
  double stop_time = t_max;
  if (options.chi_target && event(x0) >= 0.0) {
    arrived = true;
    stop_time = 0.0;
  }

  if (!arrived && t_max > 0.0) {
    auto stepper = odeint::make_dense_output(options.atol, options.rtol, std::max(dt, 1e-3 * t_max),
                                             odeint::runge_kutta_dopri5<State>());
    stepper.initialize(x0, 0.0, std::min(dt, t_max));
    std::size_t next = 1;
    State x{};
    try {
      while (true) {
        const auto [t_prev, t_cur] = stepper.do_step(system);
        double t_stop = std::min(t_cur, t_max);
        bool finished = t_cur >= t_max;
        if (options.chi_target) {
          stepper.calc_state(t_stop, x);
          if (event(x) >= 0.0) {
            double lo = t_prev;
            double hi = t_stop;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
              const double mid = 0.5 * (lo + hi);
              stepper.calc_state(mid, x);
              (event(x) >= 0.0 ? hi : lo) = mid;
            }
            t_stop = hi;
            finished = true;
            arrived = true;
          }
        }
        for (;; ++next) {
          const double tk = static_cast<double>(next) * dt;
          if (tk >= t_stop - 1e-12 * dt) break;
          stepper.calc_state(tk, x);
          times.push_back(tk);
          states.push_back(x);
        }
        if (finished) {
          stepper.calc_state(t_stop, x);
          times.push_back(t_stop);
          states.push_back(x);
          stop_time = t_stop;
          break;
        }
      }
    } catch (const qsl::Error&) {
      throw;
    } catch (const std::exception& e) {
      throw IntegrationToleranceError(std::string("lz integrate: step-size control failed: ") +
                                      e.what());
    }
  }

  Eigen::MatrixXd samples(static_cast<Eigen::Index>(times.size()), 2);
  Eigen::MatrixXd rates(static_cast<Eigen::Index>(times.size()), 2);
  std::vector<double> integral(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const double chi = std::clamp(states[k][0], 0.0, kPi);
    samples(row, 0) = chi;
    samples(row, 1) = states[k][1];
    const auto r = bloch_rhs(
        BlochState{std::clamp(chi, kPoleClamp, kPi - kPoleClamp), states[k][1], times[k]}, params);
    rates(row, 0) = r.dchi;
    rates(row, 1) = r.dphi;
    integral[k] = states[k][2];
  }

  bounds::Trajectory traj(times, std::move(samples), {"chi", "phi"});
  traj.attach_rates(std::move(rates));

  const State& last = states.back();
  BlochState after{std::clamp(last[0], 0.0, kPi), wrap_phase(params.kick_end ? *params.kick_end : last[1]),
                   stop_time};
  return LzRun{std::move(traj), std::move(integral), before, after, arrived, stop_time};
}

double conserved_residual(const LzRun& run, const LzParams& params) {
  const auto rows = tabulate(run, params);
  double worst = 0.0;
  for (const auto& row : rows) worst = std::max(worst, row.residual);
  return worst;
}

double transit_time_quadrature(const LzParams& params, double eta0, double eta_tau, double c0) {
  params.validate();
  if (!params.bias_is_function_of_eta()) {
    throw ContractViolation("transit_time_quadrature: protocol must depend on eta only");
  }
  if (std::abs(eta0) > 1.0 || std::abs(eta_tau) > 1.0) {
    throw ContractViolation("transit_time_quadrature: eta outside [-1, 1]");
  }
  if (eta0 == eta_tau) return 0.0;
  const double lo = std::min(eta0, eta_tau);
  const double hi = std::max(eta0, eta_tau);
  const double width = hi - lo;
  const double v = params.v;

  auto radicand = [&](double eta) {
    const double bracket =
        params.c * (1.0 - eta * eta) + 2.0 * bias_integral(params, eta0, eta) + c0;
    return 1.0 - eta * eta - bracket * bracket / (4.0 * v * v);
  };
  // xc is the signed distance to the nearest endpoint, supplied by tanh-sinh.
  auto integrand = [&](double eta, double xc) {
    const double r = radicand(eta);
    if (r > 0.0) return 1.0 / (v * std::sqrt(r));
    if (std::abs(xc) < 1e-9 * width && r > -1e-9) return 0.0;
    throw InfeasibleError("transit_time_quadrature: forbidden region at eta = " + std::to_string(eta));
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(integrand, lo, hi, 1e-12);
}

LzParams optimal_protocol(const LzParams& params, double chi0, double chi_tau, double phi0,
                          std::optional<double> final_phi) {
  if (chi0 == chi_tau) throw ContractViolation("optimal_protocol: chi0 equals chi_tau");
  LzParams out = params;
  out.protocol = OptimalFeedback{};
  out.kick_start = chi_tau > chi0 ? -kPi / 2.0 : kPi / 2.0;
  out.kick_end = final_phi.value_or(phi0);
  return out;
}

double qsl_time_lz(double v, double chi0, double chi_tau) {
  if (!(v > 0.0)) throw ContractViolation("qsl_time_lz: v must be positive");
  return std::abs(chi_tau - chi0) / v;
}

bounds::QslReport evaluate_lz_bounds(const LzRun& run) {
  return bounds::evaluate_bounds(run.trajectory, geometry::bloch_chart());
}

std::vector<TrajectoryRow> tabulate(const LzRun& run, const LzParams& params) {
  const auto chart = geometry::ParameterChart{geometry::bloch_chart()};
  const auto& traj = run.trajectory;
  const double chi0 = traj.samples()(0, 0);
  const double c0 = integration_constant(params, chi0, traj.samples()(0, 1));
  const double eta0 = std::cos(chi0);
  const bool closed_form = params.bias_is_function_of_eta();
  std::vector<TrajectoryRow> rows;
  rows.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double chi = traj.samples()(static_cast<Eigen::Index>(k), 0);
    const double phi = traj.samples()(static_cast<Eigen::Index>(k), 1);
    const auto point = traj.point(k);
    const auto rate = traj.rate(k);
    const double sin_chi = std::max(std::sin(chi), kPoleClamp);
    const double f_integral =
        closed_form ? bias_integral(params, eta0, std::cos(chi)) : run.bias_integral[k];
    // c sin^2 chi + 2F + C0 + 2 v sin chi cos phi = 0, divided by sin chi
    const double residual = std::abs(sin_chi * params.c + (2.0 * f_integral + c0) / sin_chi +
                                     2.0 * params.v * std::cos(phi));
    rows.push_back(TrajectoryRow{traj.times()[k], chi, phi, std::cos(chi),
                                 geometry::global_speed(chart, point, rate), rate[0], rate[1],
                                 residual});
  }
  return rows;
}

}  // namespace qsl::lz
