#include "qsl/jc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qsl/errors.hpp"
#include "qsl/geometry.hpp"

namespace qsl::jc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCriticalRatio = 1e-6;
constexpr double kSeriesCut = 1e-4;
constexpr std::size_t kScanPoints = 10000;
constexpr double kPsdFloor = -1e-9;

// sinh(x)/x, tanh(x)/x and sin(x)/x without the 0/0 at x = 0.
double shc(double x) { return std::abs(x) < kSeriesCut ? 1.0 + x * x / 6.0 : std::sinh(x) / x; }
double thc(double x) { return std::abs(x) < kSeriesCut ? 1.0 - x * x / 3.0 : std::tanh(x) / x; }
double snc(double x) { return std::abs(x) < kSeriesCut ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// D with the critical band collapsed to exactly zero.
double effective_D(const JcParams& p) { return p.regime() == Regime::Critical ? 0.0 : p.D(); }

double search_window(const JcParams& p) {
  if (p.regime() == Regime::Strong) return domain_end(p);
  return 40.0 / p.lambda0 + 4.0 / p.gamma0;
}

void check_time(double t) {
  if (!(t >= 0.0)) throw ContractViolation("jc: time must be non-negative");
}

double golden_max(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > rel_tol * std::max(std::abs(a), std::abs(b)) && b - a > 1e-300) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Eigen::Matrix2cd sigma_minus() {
  Eigen::Matrix2cd s = Eigen::Matrix2cd::Zero();
  s(1, 0) = 1.0;  // |g><e|
  return s;
}

void check_psd(const Eigen::Matrix2cd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues()[0] < kPsdFloor) {
    throw IntegrationToleranceError("lindblad_step: density matrix lost positivity (eigenvalue " +
                                    std::to_string(es.eigenvalues()[0]) + ")");
  }
}

void check_density(const Eigen::Matrix2cd& rho) {
  if ((rho - rho.adjoint()).norm() > 1e-10) throw ContractViolation("lindblad_step: rho not Hermitian");
  if (std::abs(rho.trace() - 1.0) > 1e-10) throw ContractViolation("lindblad_step: rho trace is not 1");
  check_psd(rho);
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Weak: return "weak";
    case Regime::Critical: return "critical";
    case Regime::Strong: return "strong";
  }
  return "unknown";
}

void JcParams::validate() const {
  if (!(gamma0 > 0.0)) throw ContractViolation("jc: gamma0 must be positive");
  if (!(lambda0 > 0.0)) throw ContractViolation("jc: lambda0 must be positive");
  if (!std::isfinite(omega0)) throw ContractViolation("jc: omega0 must be finite");
}

double JcParams::D() const { return std::sqrt(std::abs(lambda0 * lambda0 - 2.0 * gamma0 * lambda0)); }

Regime JcParams::regime() const {
  if (D() < kCriticalRatio * lambda0) return Regime::Critical;
  return 2.0 * gamma0 < lambda0 ? Regime::Weak : Regime::Strong;
}

double domain_end(const JcParams& p) {
  p.validate();
  if (p.regime() != Regime::Strong) return kInf;
  const double d = p.D();
  return 2.0 * (kPi - std::atan(d / p.lambda0)) / d;
}

double decay_rate(double t, const JcParams& p) {
  p.validate();
  check_time(t);
  const double d = effective_D(p);
  const double x = 0.5 * d * t;
  const double scale = 2.0 * p.gamma0 * p.lambda0;
  switch (p.regime()) {
    case Regime::Critical: return scale * t / (2.0 + p.lambda0 * t);
    case Regime::Weak: {
      const double h = 0.5 * t * thc(x);
      return scale * h / (1.0 + p.lambda0 * h);
    }
    case Regime::Strong: {
      const double s = 0.5 * t * snc(x);
      return scale * s / (std::cos(x) + p.lambda0 * s);
    }
  }
  return kNaN;
}

double rho11_closed_form(double t, const JcParams& p) {
  p.validate();
  check_time(t);
  const double d = effective_D(p);
  const double x = 0.5 * d * t;
  switch (p.regime()) {
    case Regime::Critical: {
      const double f = 1.0 + 0.5 * p.lambda0 * t;
      return std::exp(-p.lambda0 * t) * f * f;
    }
    case Regime::Weak: {
      const double h = 0.5 * t * thc(x);
      return std::exp(-p.lambda0 * t + 2.0 * log_cosh(x) + 2.0 * std::log1p(p.lambda0 * h));
    }
    case Regime::Strong: {
      const double f = std::cos(x) + p.lambda0 * 0.5 * t * snc(x);
      return std::exp(-p.lambda0 * t) * f * f;
    }
  }
  return kNaN;
}

double sigma_backflow(double t, const JcParams& p) {
  p.validate();
  check_time(t);
  if (p.regime() != Regime::Strong) return -decay_rate(t, p) * rho11_closed_form(t, p);
  const double x = 0.5 * p.D() * t;
  const double s = 0.5 * t * snc(x);
  const double f = std::cos(x) + p.lambda0 * s;
  return -2.0 * p.gamma0 * p.lambda0 * std::exp(-p.lambda0 * t) * f * s;
}

double rho11(double t, const JcParams& p) {
  p.validate();
  check_time(t);
  if (t >= domain_end(p)) {
    throw DomainEndError("rho11: t = " + std::to_string(t) + " is past the strong-branch domain end " +
                         std::to_string(domain_end(p)));
  }
  if (t == 0.0) return 1.0;
  auto gamma = [&p](double s) { return decay_rate(s, p); };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(gamma, 0.0, t, 15, 1e-12);
  return std::exp(-integral);
}

double bloch_z(double rho11_value) { return 2.0 * rho11_value - 1.0; }

Eigen::Matrix2cd excited_state() {
  Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
  r(0, 0) = 1.0;
  return r;
}

Eigen::Matrix2cd ground_state() {
  Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
  r(1, 1) = 1.0;
  return r;
}

double excited_population(const Eigen::Matrix2cd& rho) { return rho(0, 0).real(); }

Eigen::Matrix2cd lindblad_generator(const Eigen::Matrix2cd& rho, double gamma) {
  const Eigen::Matrix2cd sm = sigma_minus();
  const Eigen::Matrix2cd sp = sm.adjoint();
  const Eigen::Matrix2cd n = sp * sm;
  return gamma * (sm * rho * sp - 0.5 * (n * rho + rho * n));
}

Eigen::Matrix2cd lindblad_step(const Eigen::Matrix2cd& rho, double gamma, double dt) {
  return lindblad_step(rho, [gamma](double) { return gamma; }, 0.0, dt);
}

Eigen::Matrix2cd lindblad_step(const Eigen::Matrix2cd& rho, const std::function<double(double)>& gamma,
                               double t, double dt) {
  check_density(rho);
  const double g0 = gamma(t);
  const double gh = gamma(t + 0.5 * dt);
  const double g1 = gamma(t + dt);
  const Eigen::Matrix2cd k1 = lindblad_generator(rho, g0);
  const Eigen::Matrix2cd k2 = lindblad_generator(rho + 0.5 * dt * k1, gh);
  const Eigen::Matrix2cd k3 = lindblad_generator(rho + 0.5 * dt * k2, gh);
  const Eigen::Matrix2cd k4 = lindblad_generator(rho + dt * k3, g1);
  Eigen::Matrix2cd out = rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  check_psd(out);
  return out;
}

std::vector<LindbladSample> evolve_lindblad(const JcParams& p, double t_end, double dt) {
  p.validate();
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw ContractViolation("evolve_lindblad: need dt > 0 and t_end >= 0");
  if (t_end >= domain_end(p)) {
    throw DomainEndError("evolve_lindblad: t_end is past the strong-branch domain end");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt));
  const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;
  auto gamma = [&p](double s) { return decay_rate(s, p); };
  std::vector<LindbladSample> out;
  out.reserve(steps + 1);
  Eigen::Matrix2cd rho = excited_state();
  out.push_back({0.0, rho});
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    rho = lindblad_step(rho, gamma, t, h);
    out.push_back({static_cast<double>(k + 1) * h, rho});
  }
  return out;
}

double non_markovianity(const JcParams& p, double t_max) {
  p.validate();
  check_time(t_max);
  if (p.regime() != Regime::Strong) return 0.0;
  // sigma is proportional to -f(x) sin(x) with f = cos x + (l/D) sin x, so its
  // sign changes at x = m pi and x = m pi - atan(D / l).
  const double d = p.D();
  const double shift = std::atan(d / p.lambda0);
  std::vector<double> cuts{0.0};
  for (int m = 1;; ++m) {
    const double a = 2.0 * (m * kPi - shift) / d;
    if (a >= t_max) break;
    cuts.push_back(a);
    const double b = 2.0 * m * kPi / d;
    if (b >= t_max) break;
    cuts.push_back(b);
  }
  cuts.push_back(t_max);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    if (!(b > a)) continue;
    if (sigma_backflow(0.5 * (a + b), p) > 0.0) {
      total += rho11_closed_form(b, p) - rho11_closed_form(a, p);
    }
  }
  return total;
}

SigmaPeak max_sigma(const JcParams& p) {
  p.validate();
  const double w = search_window(p);
  auto mag = [&p](double t) { return std::abs(sigma_backflow(t, p)); };
  std::size_t best = 0;
  double best_value = -1.0;
  const double h = w / static_cast<double>(kScanPoints - 1);
  for (std::size_t i = 0; i < kScanPoints; ++i) {
    const double v = mag(static_cast<double>(i) * h);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  const double a = best == 0 ? 0.0 : static_cast<double>(best - 1) * h;
  const double b = std::min(w, static_cast<double>(best + 1) * h);
  const double t = golden_max(mag, a, b, 1e-10);
  SigmaPeak peak{t, mag(t)};
  if (best_value > peak.value) peak = SigmaPeak{static_cast<double>(best) * h, best_value};
  return peak;
}

double global_bound_excluding_start(const JcParams& p, double epsilon) {
  p.validate();
  if (!(epsilon > 0.0)) throw ContractViolation("global_bound_excluding_start: epsilon must be positive");
  double end = search_window(p);
  if (p.regime() == Regime::Strong) end *= 1.0 - 1e-6;
  if (!(end > epsilon)) throw ContractViolation("global_bound_excluding_start: epsilon beyond the window");
  const double ratio = std::pow(end / epsilon, 1.0 / static_cast<double>(kScanPoints - 1));
  double best = kInf;
  double t = epsilon;
  for (std::size_t i = 0; i < kScanPoints; ++i, t *= ratio) {
    const double r = rho11_closed_form(t, p);
    const double s = std::abs(sigma_backflow(t, p));
    if (s == 0.0) continue;
    best = std::min(best, std::sqrt(std::max(0.0, r * (1.0 - r))) / s);
  }
  return kPi * best;
}

nlohmann::ordered_json JcReport::to_json() const {
  auto finite_or_null = [](double x) -> nlohmann::ordered_json {
    if (std::isfinite(x)) return x;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["gamma0"] = params.gamma0;
  j["lambda0"] = params.lambda0;
  j["omega0"] = params.omega0;
  j["regime"] = to_string(regime);
  j["D"] = D;
  j["sigma_max"] = sigma_max;
  j["t_sigma_max"] = t_sigma_max;
  j["tau_local"] = tau_local;
  j["tau_local_z"] = tau_local_z;
  j["global_bound"] = global_bound;
  j["global_bound_regular"] = finite_or_null(global_bound_regular);
  j["tau_qsl"] = tau_qsl;
  j["tau_weak_formula"] = tau_weak_formula;
  j["tau_strong_formula"] = finite_or_null(tau_strong_formula);
  j["non_markovianity"] = non_markovianity;
  j["t_max"] = t_max;
  return j;
}

JcReport qsl_jc(const JcParams& p, double t_max) {
  p.validate();
  JcReport rep;
  rep.params = p;
  rep.regime = p.regime();
  rep.D = p.D();
  const SigmaPeak peak = max_sigma(p);
  rep.sigma_max = peak.value;
  rep.t_sigma_max = peak.t;
  rep.tau_local = bounds::bound_ratio(1.0, peak.value);
  rep.tau_local_z = bounds::bound_ratio(2.0, 2.0 * peak.value);
  rep.global_bound = 0.0;
  rep.global_bound_regular = global_bound_excluding_start(p, 1e-6 / p.lambda0);
  rep.tau_qsl = std::max(rep.global_bound, rep.tau_local);
  rep.tau_weak_formula = 1.0 / p.gamma0;
  const double strong_sq = 2.0 * p.gamma0 * p.lambda0 - p.lambda0 * p.lambda0;
  rep.tau_strong_formula = rep.regime == Regime::Strong ? 2.0 / std::sqrt(strong_sq) : kNaN;
  rep.non_markovianity = non_markovianity(p, t_max);
  rep.t_max = t_max;
  return rep;
}

double lorentzian_spectral_density(double omega, const JcParams& p) {
  p.validate();
  const double detuning = omega - p.omega0;
  return p.gamma0 * p.lambda0 / (2.0 * kPi * (detuning * detuning + p.lambda0 * p.lambda0));
}

std::vector<SweepRow> sweep_qsl(const std::vector<double>& gamma0s, const std::vector<double>& lambda0s,
                                double t_max) {
  std::vector<SweepRow> rows;
  rows.reserve(gamma0s.size() * lambda0s.size());
  for (double l : lambda0s) {
    for (double g : gamma0s) {
      const auto rep = qsl_jc(JcParams{g, l, 0.0}, t_max);
      rows.push_back(SweepRow{g, l, rep.tau_qsl, rep.tau_weak_formula, rep.tau_strong_formula,
                              rep.non_markovianity});
    }
  }
  return rows;
}

bounds::Trajectory sample_trajectory(const JcParams& p, double t_end, std::size_t n, Chart chart) {
  p.validate();
  if (n < 2 || !(t_end > 0.0)) throw ContractViolation("sample_trajectory: need n >= 2 and t_end > 0");
  std::vector<double> times(n);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), 1);
  Eigen::MatrixXd rates(static_cast<Eigen::Index>(n), 1);
  const double scale = chart == Chart::BlochZ ? 2.0 : 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t_end * static_cast<double>(k) / static_cast<double>(n - 1);
    const double r = std::clamp(rho11_closed_form(t, p), 0.0, 1.0);
    times[k] = t;
    values(static_cast<Eigen::Index>(k), 0) = chart == Chart::BlochZ ? bloch_z(r) : r;
    rates(static_cast<Eigen::Index>(k), 0) = scale * sigma_backflow(t, p);
  }
  bounds::Trajectory traj(std::move(times), std::move(values),
                          {chart == Chart::BlochZ ? "z" : "rho11"});
  traj.attach_rates(std::move(rates));
  return traj;
}

bounds::QslReport evaluate_jc_bounds(const JcParams& p, double t_end, std::size_t n, Chart chart) {
  const auto traj = sample_trajectory(p, t_end, n, chart);
  const geometry::ParameterChart c = chart == Chart::BlochZ
                                         ? geometry::ParameterChart{geometry::bloch_z_chart()}
                                         : geometry::ParameterChart{geometry::diagonal_qubit_chart()};
  return bounds::evaluate_bounds(traj, c);
}

std::vector<CsvRow> tabulate(const JcParams& p, double t_end, std::size_t n) {
  p.validate();
  if (n < 2 || !(t_end > 0.0)) throw ContractViolation("jc tabulate: need n >= 2 and t_end > 0");
  std::vector<CsvRow> rows;
  rows.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t_end * static_cast<double>(k) / static_cast<double>(n - 1);
    const double r = rho11_closed_form(t, p);
    rows.push_back(CsvRow{t, decay_rate(t, p), r, sigma_backflow(t, p), bloch_z(r)});
  }
  return rows;
}

}  // namespace qsl::jc
