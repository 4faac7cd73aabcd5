#include "qsl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "qsl/errors.hpp"

namespace qsl::transport {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kUncertaintySlack = 1e-9;

// FFTW planning is not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

Eigen::VectorXd wave_numbers(std::size_t n, double dx) {
  Eigen::VectorXd k(static_cast<Eigen::Index>(n));
  const double dk = 2.0 * kPi / (dx * static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto signed_j = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
    k[static_cast<Eigen::Index>(j)] = signed_j * dk;
  }
  return k;
}

// Forward/backward transforms on an owned aligned buffer.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    std::lock_guard<std::mutex> lock(planner_mutex());
    const int size = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(size, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(size, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  cd* data() { return reinterpret_cast<cd*>(buffer_); }
  void forward() { fftw_execute(forward_); }
  // Unnormalized; callers divide by n.
  void backward() { fftw_execute(backward_); }
  std::size_t size() const { return n_; }

  void load(const Eigen::VectorXcd& v) { std::copy(v.data(), v.data() + v.size(), data()); }
  void store(Eigen::VectorXcd& v) const {
    const double scale = 1.0 / static_cast<double>(n_);
    const cd* p = reinterpret_cast<const cd*>(buffer_);
    for (std::size_t j = 0; j < n_; ++j) v[static_cast<Eigen::Index>(j)] = p[j] * scale;
  }

 private:
  std::size_t n_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

Eigen::VectorXd potential_samples(const Wavefunction1D& psi, const ConveyorPotential& pot, double t) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(psi.size()));
  for (std::size_t j = 0; j < psi.size(); ++j) u[static_cast<Eigen::Index>(j)] = pot(psi.x(j), t);
  return u;
}

Eigen::VectorXcd apply_hamiltonian(Fft& fft, const Eigen::VectorXd& kinetic, const Eigen::VectorXd& u,
                                   const Eigen::VectorXcd& v) {
  fft.load(v);
  fft.forward();
  cd* p = fft.data();
  for (Eigen::Index j = 0; j < v.size(); ++j) p[j] *= kinetic[j];
  fft.backward();
  Eigen::VectorXcd out(v.size());
  fft.store(out);
  out.array() += u.array() * v.array();
  return out;
}

double edge_mass(const Wavefunction1D& psi) {
  const std::size_t n = psi.size();
  const std::size_t edge = std::max<std::size_t>(1, n / 32);
  double left = 0.0;
  double right = 0.0;
  for (std::size_t j = 0; j < edge; ++j) {
    left += std::norm(psi.psi[static_cast<Eigen::Index>(j)]);
    right += std::norm(psi.psi[static_cast<Eigen::Index>(n - 1 - j)]);
  }
  return std::max(left, right) * psi.dx;
}

}  // namespace

double Wavefunction1D::norm_squared() const { return psi.squaredNorm() * dx; }

void Wavefunction1D::normalize() {
  const double n2 = norm_squared();
  if (!(n2 > 0.0)) throw ContractViolation("wavefunction: cannot normalize a zero state");
  psi /= std::sqrt(n2);
}

void Wavefunction1D::validate(double tol) const {
  if (!is_power_of_two(size())) throw ContractViolation("wavefunction: grid size must be a power of two");
  if (!(dx > 0.0)) throw ContractViolation("wavefunction: dx must be positive");
  if (!(mass > 0.0)) throw ContractViolation("wavefunction: mass must be positive");
  if (std::abs(norm_squared() - 1.0) > tol) throw ContractViolation("wavefunction: not normalized");
}

double MinJerkSchedule::position(double t) const {
  const double u = std::clamp(t / duration, 0.0, 1.0);
  return x0 + distance * u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double MinJerkSchedule::velocity(double t) const {
  if (t <= 0.0 || t >= duration) return 0.0;
  const double u = t / duration;
  return distance / duration * 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

double MinJerkSchedule::acceleration(double t) const {
  if (t <= 0.0 || t >= duration) return 0.0;
  const double u = t / duration;
  return distance / (duration * duration) * 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
}

double MinJerkSchedule::max_velocity() const { return 1.875 * std::abs(distance) / duration; }

double MinJerkSchedule::max_acceleration() const {
  return 10.0 / std::sqrt(3.0) * std::abs(distance) / (duration * duration);
}

Schedule MinJerkSchedule::as_function() const {
  const MinJerkSchedule copy = *this;
  return [copy](double t) { return copy.position(t); };
}

Schedule static_schedule(double x0) {
  return [x0](double) { return x0; };
}

double ConveyorPotential::k() const { return 2.0 * kPi / wavelength; }

double ConveyorPotential::operator()(double x, double t) const {
  const double s = std::sin(k() * (x - x_control(t)));
  return U0 * s * s;
}

void ConveyorPotential::validate() const {
  if (!(U0 >= 0.0)) throw ContractViolation("conveyor potential: U0 must be non-negative");
  if (!(wavelength > 0.0)) throw ContractViolation("conveyor potential: wavelength must be positive");
  if (!x_control) throw ContractViolation("conveyor potential: missing control schedule");
}

double harmonic_frequency(double U0, double mass, double wavelength) {
  if (!(U0 > 0.0 && mass > 0.0 && wavelength > 0.0)) {
    throw ContractViolation("harmonic_frequency: inputs must be positive");
  }
  return 2.0 * kPi * std::sqrt(2.0 * U0 / (mass * wavelength * wavelength));
}

double harmonic_period(double U0, double mass, double wavelength) {
  return 2.0 * kPi / harmonic_frequency(U0, mass, wavelength);
}

Observables observables(const Wavefunction1D& psi, const ConveyorPotential& pot, double t) {
  const std::size_t n = psi.size();
  const double n2 = psi.norm_squared();
  Observables o;

  double sx = 0.0;
  double sxx = 0.0;
  double su = 0.0;
  double suu = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = std::norm(psi.psi[static_cast<Eigen::Index>(j)]) * psi.dx / n2;
    const double x = psi.x(j);
    const double u = pot(x, t);
    sx += w * x;
    sxx += w * x * x;
    su += w * u;
    suu += w * u * u;
  }
  o.mean_x = sx;
  o.Dx = std::sqrt(std::max(0.0, sxx - sx * sx));
  o.DU = std::sqrt(std::max(0.0, suu - su * su));

  Fft fft(n);
  fft.load(psi.psi);
  fft.forward();
  const Eigen::VectorXd k = wave_numbers(n, psi.dx);
  double total = 0.0;
  double sp = 0.0;
  double spp = 0.0;
  double skk = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = std::norm(fft.data()[j]);
    const double kj = k[static_cast<Eigen::Index>(j)];
    const double kin = kj * kj / (2.0 * psi.mass);
    total += w;
    sp += w * kj;
    spp += w * kj * kj;
    skk += w * kin * kin;
  }
  o.mean_p = sp / total;
  o.Dp = std::sqrt(std::max(0.0, spp / total - o.mean_p * o.mean_p));
  o.K2 = skk / total;
  o.energy = spp / total / (2.0 * psi.mass) + su;
  return o;
}

double fs_speed_direct(const Wavefunction1D& a, const Wavefunction1D& b, double dt) {
  if (a.size() != b.size()) throw ContractViolation("fs_speed_direct: grid mismatch");
  if (!(dt > 0.0)) throw ContractViolation("fs_speed_direct: dt must be positive");
  const double na = std::sqrt(a.norm_squared());
  const double nb = std::sqrt(b.norm_squared());
  const cd overlap = a.psi.dot(b.psi) * a.dx / (na * nb);
  const double mag = std::abs(overlap);
  // |b - <a|b> a| is accurate where arccos near 1 is not.
  const double perp = std::sqrt(std::max(0.0, 1.0 - mag * mag));
  const Eigen::VectorXcd residual = b.psi / nb - overlap * a.psi / na;
  const double perp_direct = std::sqrt(residual.squaredNorm() * a.dx);
  return std::atan2(std::min(perp, perp_direct), mag) / dt;
}

double fs_speed_formula(const Observables& obs) { return std::sqrt(obs.K2 + obs.DU * obs.DU); }

double energy_spread(const Wavefunction1D& psi, const ConveyorPotential& pot, double t) {
  Fft fft(psi.size());
  const Eigen::VectorXd k = wave_numbers(psi.size(), psi.dx);
  const Eigen::VectorXd kinetic = k.array().square() / (2.0 * psi.mass);
  const Eigen::VectorXcd v = psi.psi / std::sqrt(psi.norm_squared());
  const Eigen::VectorXcd hv = apply_hamiltonian(fft, kinetic, potential_samples(psi, pot, t), v);
  const double e = (v.dot(hv) * psi.dx).real();
  return std::sqrt((hv - e * v).squaredNorm() * psi.dx);
}

struct SplitStepPropagator::Impl {
  Impl(std::size_t n_, double dx_, double mass_, double dt_)
      : n(n_), dx(dx_), mass(mass_), dt(dt_), fft(n_) {
    const Eigen::VectorXd k = wave_numbers(n, dx);
    kinetic = k.array().square() / (2.0 * mass);
    kinetic_phase.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < kinetic.size(); ++j) kinetic_phase[j] = std::polar(1.0, -kinetic[j] * dt);
  }

  void kinetic_step(Eigen::VectorXcd& v, const Eigen::VectorXcd& factor) {
    fft.load(v);
    fft.forward();
    cd* p = fft.data();
    for (Eigen::Index j = 0; j < factor.size(); ++j) p[j] *= factor[j];
    fft.backward();
    fft.store(v);
  }

  std::size_t n;
  double dx;
  double mass;
  double dt;
  Fft fft;
  Eigen::VectorXd kinetic;
  Eigen::VectorXcd kinetic_phase;
};

SplitStepPropagator::SplitStepPropagator(std::size_t n, double dx, double mass, double dt) {
  if (!is_power_of_two(n)) throw ContractViolation("split-step: grid size must be a power of two");
  if (!(dx > 0.0 && mass > 0.0 && dt > 0.0)) {
    throw ContractViolation("split-step: dx, mass and dt must be positive");
  }
  impl_ = std::make_unique<Impl>(n, dx, mass, dt);
}

SplitStepPropagator::~SplitStepPropagator() = default;
SplitStepPropagator::SplitStepPropagator(SplitStepPropagator&&) noexcept = default;
SplitStepPropagator& SplitStepPropagator::operator=(SplitStepPropagator&&) noexcept = default;

double SplitStepPropagator::dt() const { return impl_->dt; }

void SplitStepPropagator::step(Wavefunction1D& psi, const ConveyorPotential& pot, double t) {
  auto& s = *impl_;
  if (psi.size() != s.n) throw ContractViolation("split-step: grid size mismatch");
  const double tm = t + 0.5 * s.dt;
  Eigen::VectorXcd half(static_cast<Eigen::Index>(s.n));
  for (std::size_t j = 0; j < s.n; ++j) half[static_cast<Eigen::Index>(j)] = std::polar(1.0, -0.5 * s.dt * pot(psi.x(j), tm));
  psi.psi.array() *= half.array();
  s.kinetic_step(psi.psi, s.kinetic_phase);
  psi.psi.array() *= half.array();
}

void SplitStepPropagator::imaginary_step(Wavefunction1D& psi, const ConveyorPotential& pot, double t,
                                         double dtau) {
  auto& s = *impl_;
  if (psi.size() != s.n) throw ContractViolation("split-step: grid size mismatch");
  Eigen::VectorXd u = potential_samples(psi, pot, t);
  const double u_min = u.minCoeff();
  const Eigen::VectorXcd half = (-0.5 * dtau * (u.array() - u_min)).exp().cast<cd>();
  const Eigen::VectorXcd decay = (-dtau * s.kinetic.array()).exp().cast<cd>();
  psi.psi.array() *= half.array();
  s.kinetic_step(psi.psi, decay);
  psi.psi.array() *= half.array();
  psi.normalize();
}

PropagationResult propagate(const Wavefunction1D& psi0, const ConveyorPotential& pot, double dt,
                            std::size_t steps, const PropagateOptions& options) {
  psi0.validate(1e-8);
  pot.validate();
  if (!(dt > 0.0)) throw ContractViolation("propagate: dt must be positive");
  const std::size_t every = std::max<std::size_t>(1, options.snapshot_every);

  PropagationResult out;
  const double u_max = pot.U0;
  if (dt * u_max > 0.1) {
    out.warnings.push_back("dt * max|U| = " + std::to_string(dt * u_max) + " exceeds 0.1");
  }

  auto check_edges = [&](const Wavefunction1D& w, double t) {
    const double edge = edge_mass(w);
    if (edge > options.boundary_tolerance) {
      throw GridTooSmall("propagate: density " + std::to_string(edge) + " at the grid edge at t = " +
                         std::to_string(t));
    }
  };

  auto record = [&](const Wavefunction1D& w, double t, double speed) {
    Snapshot s;
    s.t = t;
    s.x_control = pot.x_control(t);
    s.obs = observables(w, pot, t);
    s.speed_direct = speed;
    s.speed_formula = fs_speed_formula(s.obs);
    if (s.obs.Dp * s.obs.Dx < 0.5 - kUncertaintySlack) {
      out.warnings.push_back("uncertainty floor violated at t = " + std::to_string(t));
    }
    out.snapshots.push_back(s);
    if (options.keep_states) out.states.push_back(w);
  };

  check_edges(psi0, 0.0);
  SplitStepPropagator prop(psi0.size(), psi0.dx, psi0.mass, dt);
  Wavefunction1D current = psi0;
  Wavefunction1D previous = psi0;
  record(current, 0.0, 0.0);
  if (options.observer) options.observer(0, 0.0, current);

  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * dt;
    const double t = static_cast<double>(k) * dt;
    previous.psi = current.psi;
    prop.step(current, pot, t_prev);
    const double speed = fs_speed_direct(previous, current, dt);
    out.max_speed_direct = std::max(out.max_speed_direct, speed);
    if (k % every == 0 || k == steps) {
      out.max_norm_drift = std::max(out.max_norm_drift, std::abs(current.norm_squared() - 1.0));
      check_edges(current, t);
      record(current, t, speed);
    }
    if (options.observer) options.observer(k, t, current);
  }
  out.final_state = std::move(current);
  out.final_time = static_cast<double>(steps) * dt;
  return out;
}

Wavefunction1D gaussian(double x_min, double dx, std::size_t n, double x0, double sigma, double k0,
                        double mass) {
  if (!(sigma > 0.0)) throw ContractViolation("gaussian: sigma must be positive");
  Wavefunction1D w;
  w.x_min = x_min;
  w.dx = dx;
  w.mass = mass;
  w.psi.resize(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const double x = x_min + dx * static_cast<double>(j);
    const double y = (x - x0) / sigma;
    w.psi[static_cast<Eigen::Index>(j)] = std::polar(std::exp(-0.25 * y * y), k0 * x);
  }
  w.normalize();
  return w;
}

Wavefunction1D ground_state(double x_min, double dx, std::size_t n, double mass,
                            const ConveyorPotential& pot, double t, double tol) {
  pot.validate();
  if (!(pot.U0 > 0.0)) throw ContractViolation("ground_state: needs a confining trap (U0 > 0)");
  const double omega = harmonic_frequency(pot.U0, mass, pot.wavelength);
  const double sigma = 1.0 / std::sqrt(2.0 * mass * omega);
  Wavefunction1D psi = gaussian(x_min, dx, n, pot.x_control(t), sigma, 0.0, mass);

  // Coarse relaxation, then a locally optimal preconditioned eigensolver on
  // the spectral Hamiltonian itself.
  {
    SplitStepPropagator prop(n, dx, mass, 1.0);
    const double dtau = 0.05 / omega;
    for (int k = 0; k < 200; ++k) prop.imaginary_step(psi, pot, t, dtau);
  }

  Fft fft(n);
  const Eigen::VectorXd k = wave_numbers(n, dx);
  const Eigen::VectorXd kinetic = k.array().square() / (2.0 * mass);
  // Single-well potential: flat at U0 beyond the neighbouring barriers, so
  // the solver cannot spread the state over the band of degenerate wells.
  Eigen::VectorXd u = potential_samples(psi, pot, t);
  const double center = pot.x_control(t);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(psi.x(j) - center) > 0.25 * pot.wavelength) u[static_cast<Eigen::Index>(j)] = pot.U0;
  }
  const double shift = 0.5 * omega;
  auto precondition = [&](const Eigen::VectorXcd& r) {
    fft.load(r);
    fft.forward();
    cd* p = fft.data();
    for (Eigen::Index j = 0; j < r.size(); ++j) p[j] /= kinetic[j] + shift;
    fft.backward();
    Eigen::VectorXcd out(r.size());
    fft.store(out);
    return out;
  };

  Eigen::VectorXcd x = psi.psi * std::sqrt(dx);  // unit Euclidean norm
  Eigen::VectorXcd direction;
  for (int iter = 0; iter < 5000; ++iter) {
    const Eigen::VectorXcd hx = apply_hamiltonian(fft, kinetic, u, x);
    const double e = x.dot(hx).real();
    const Eigen::VectorXcd r = hx - e * x;
    if (r.norm() < tol) break;

    std::vector<Eigen::VectorXcd> basis{x, precondition(r)};
    if (direction.size() == x.size()) basis.push_back(direction);
    // Modified Gram-Schmidt; drop directions that have collapsed.
    std::vector<Eigen::VectorXcd> q;
    for (auto v : basis) {
      for (const auto& b : q) v -= b.dot(v) * b;
      for (const auto& b : q) v -= b.dot(v) * b;
      const double nv = v.norm();
      if (nv > 1e-12) q.push_back(v / nv);
    }
    const auto m = static_cast<Eigen::Index>(q.size());
    Eigen::MatrixXcd qm(x.size(), m);
    Eigen::MatrixXcd hq(x.size(), m);
    for (Eigen::Index j = 0; j < m; ++j) {
      qm.col(j) = q[static_cast<std::size_t>(j)];
      hq.col(j) = apply_hamiltonian(fft, kinetic, u, qm.col(j));
    }
    Eigen::MatrixXcd a = qm.adjoint() * hq;
    a = 0.5 * (a + a.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
    const Eigen::VectorXcd c = es.eigenvectors().col(0);
    const Eigen::VectorXcd next = qm * c;
    direction = next - c[0] * qm.col(0);
    const double nd = direction.norm();
    if (nd > 0.0) direction /= nd;
    x = next / next.norm();
  }
  psi.psi = x / std::sqrt(dx);
  // Fix the global phase so the state is real and positive at its peak.
  Eigen::Index peak = 0;
  psi.psi.cwiseAbs().maxCoeff(&peak);
  psi.psi *= std::conj(psi.psi[peak]) / std::abs(psi.psi[peak]);
  return psi;
}

double qsl_transport_global(double d, double Dx, double speed_max) {
  if (!(d > 0.0 && Dx > 0.0 && speed_max > 0.0)) {
    throw ContractViolation("qsl_transport_global: inputs must be positive");
  }
  return d / (2.0 * Dx) / speed_max;
}

double qsl_conveyor(double mass, double wavelength, double U0, double Dx, double d) {
  if (!(mass > 0.0 && wavelength > 0.0 && U0 > 0.0 && Dx > 0.0 && d > 0.0)) {
    throw ContractViolation("qsl_conveyor: inputs must be positive");
  }
  return std::sqrt(mass * wavelength * wavelength * d / (4.0 * kPi * kPi * U0 * Dx));
}

double local_bound_transport(double mass, double wavelength, double U0) {
  if (!(mass > 0.0 && wavelength > 0.0 && U0 > 0.0)) {
    throw ContractViolation("local_bound_transport: inputs must be positive");
  }
  return std::sqrt(mass * wavelength * wavelength / (2.0 * kPi * kPi * U0));
}

double combined_bound(double mass, double wavelength, double U0, double Dx, double d) {
  return std::max(qsl_conveyor(mass, wavelength, U0, Dx, d), local_bound_transport(mass, wavelength, U0));
}

double experiment_prefactor(double wavelength, double Dx) {
  if (!(wavelength > 0.0 && Dx > 0.0)) throw ContractViolation("experiment_prefactor: inputs must be positive");
  return std::sqrt(wavelength / (8.0 * kPi * Dx));
}

double experiment_qsl(double wavelength, double Dx, double d, double tau_ho) {
  const double n = 2.0 * d / wavelength;
  return experiment_prefactor(wavelength, Dx) * std::sqrt(2.0 * n / kPi) * tau_ho;
}

FixedPointResult qsl_self_consistent(double mass, double wavelength, double U0, double Dx, double d,
                                     double DU_max, double tol, std::size_t max_iter) {
  if (!(DU_max >= 0.0)) throw ContractViolation("qsl_self_consistent: DU_max must be non-negative");
  FixedPointResult res;
  const double k = 2.0 * kPi / wavelength;
  const double a = k * k * U0 / (2.0 * mass);
  const double geodesic = d / (2.0 * Dx);
  double tau = qsl_conveyor(mass, wavelength, U0, Dx, d);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const double b = DU_max / tau;
    const double target = std::sqrt(geodesic / std::sqrt(a * a + b * b));
    const double next = 0.5 * (tau + target);
    res.iterations = it;
    if (std::abs(next - tau) <= tol * std::max(1.0, std::abs(next))) {
      res.tau = next;
      res.converged = true;
      return res;
    }
    tau = next;
  }
  res.tau = tau;
  return res;
}

void TransportSetup::validate() const {
  if (!(mass > 0.0)) throw ContractViolation("transport: mass must be positive");
  if (!(wavelength > 0.0)) throw ContractViolation("transport: wavelength must be positive");
  if (!(U0 > 0.0)) throw ContractViolation("transport: U0 must be positive");
  if (!(distance > 0.0)) throw ContractViolation("transport: distance must be positive");
  if (duration < 0.0 || dt < 0.0) throw ContractViolation("transport: duration and dt must be non-negative");
  if (!(duration_scale > 0.0)) throw ContractViolation("transport: duration_scale must be positive");
  if (!is_power_of_two(n_grid)) throw ContractViolation("transport: n_grid must be a power of two");
  if (!(padding_wavelengths >= 2.0)) throw ContractViolation("transport: padding must be at least 2 wavelengths");
}

double TransportSetup::resolved_duration() const {
  if (duration > 0.0) return duration;
  return duration_scale * harmonic_period(U0, mass, wavelength) * std::sqrt(distance / wavelength);
}

double TransportSetup::resolved_dt() const {
  if (dt > 0.0) return dt;
  return 1e-3 * harmonic_period(U0, mass, wavelength);
}

nlohmann::ordered_json TransportReport::to_json() const {
  nlohmann::ordered_json j;
  j["d"] = d;
  j["Dx"] = Dx;
  j["Dp"] = Dp;
  j["K2_max"] = K2_max;
  j["DU_max"] = DU_max;
  j["speed_direct_max"] = speed_direct_max;
  j["speed_formula_max"] = speed_formula_max;
  j["elapsed"] = elapsed;
  j["tau_global"] = tau_global;
  j["tau_global_formula"] = tau_global_formula;
  j["tau_conveyor"] = tau_conveyor;
  j["tau_local"] = tau_local;
  j["tau_qsl"] = tau_qsl;
  j["bures_angle"] = bures_angle;
  j["max_offset"] = max_offset;
  j["max_norm_drift"] = max_norm_drift;
  return j;
}

TransportRun simulate_transport(const TransportSetup& setup) {
  setup.validate();
  TransportRun run;
  run.setup = setup;

  const double length = setup.distance + setup.padding_wavelengths * setup.wavelength;
  const double dx = length / static_cast<double>(setup.n_grid);
  const double x_min = 0.0;
  const double x_start = x_min + 0.5 * setup.padding_wavelengths * setup.wavelength;
  const double duration = setup.resolved_duration();
  const double dt = setup.resolved_dt();
  const auto steps = static_cast<std::size_t>(std::ceil(duration / dt));

  const MinJerkSchedule schedule{x_start, setup.distance, duration};
  ConveyorPotential pot{setup.U0, setup.wavelength, schedule.as_function()};
  const Wavefunction1D psi0 = ground_state(x_min, dx, setup.n_grid, setup.mass, pot, 0.0);

  PropagateOptions opts;
  opts.snapshot_every = setup.snapshot_every;
  run.propagation = propagate(psi0, pot, dt, steps, opts);

  auto& rep = run.report;
  const auto& first = run.propagation.snapshots.front().obs;
  rep.d = setup.distance;
  rep.Dx = first.Dx;
  rep.Dp = first.Dp;
  rep.elapsed = run.propagation.final_time;
  rep.speed_direct_max = run.propagation.max_speed_direct;
  for (const auto& s : run.propagation.snapshots) {
    rep.K2_max = std::max(rep.K2_max, s.obs.K2);
    rep.DU_max = std::max(rep.DU_max, s.obs.DU);
    rep.speed_formula_max = std::max(rep.speed_formula_max, s.speed_formula);
    rep.max_offset = std::max(rep.max_offset, std::abs(s.obs.mean_x - s.x_control));
  }
  rep.tau_global = qsl_transport_global(rep.d, rep.Dx, rep.speed_direct_max);
  rep.tau_global_formula = qsl_transport_global(rep.d, rep.Dx, rep.speed_formula_max);
  rep.tau_conveyor = qsl_conveyor(setup.mass, setup.wavelength, setup.U0, rep.Dx, rep.d);
  rep.tau_local = local_bound_transport(setup.mass, setup.wavelength, setup.U0);
  rep.tau_qsl = std::max(rep.tau_global, rep.tau_local);
  const auto& psi_t = run.propagation.final_state;
  const cd overlap = psi0.psi.dot(psi_t.psi) * dx;
  rep.bures_angle = std::acos(std::min(1.0, std::abs(overlap)));
  rep.max_norm_drift = run.propagation.max_norm_drift;
  return run;
}

}  // namespace qsl::transport
