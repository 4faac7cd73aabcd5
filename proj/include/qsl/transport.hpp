#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

// One-dimensional wavepacket transport in a moving optical lattice
//   H = p^2 / 2m + U0 sin^2(k (x - x_control(t))),  k = 2 pi / lambda, hbar = 1.
// The sin^2 form puts a trap minimum at x_control.
namespace qsl::transport {

struct Wavefunction1D {
  double x_min = 0.0;
  double dx = 1.0;
  Eigen::VectorXcd psi;
  double mass = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(psi.size()); }
  double x(std::size_t j) const { return x_min + dx * static_cast<double>(j); }
  double length() const { return dx * static_cast<double>(size()); }
  double norm_squared() const;
  void normalize();
  /// Power-of-two grid, positive dx and mass, unit norm within `tol`.
  void validate(double tol = 1e-10) const;
};

using Schedule = std::function<double(double)>;

/// Minimum-jerk move x0 -> x0 + d over [0, T]:
///   x = x0 + d s(t/T),  s(u) = 10u^3 - 15u^4 + 6u^5, held outside [0, T].
struct MinJerkSchedule {
  double x0 = 0.0;
  double distance = 0.0;
  double duration = 1.0;

  double position(double t) const;
  double velocity(double t) const;
  double acceleration(double t) const;
  double max_velocity() const;      // 15/8 d/T
  double max_acceleration() const;  // 10/sqrt(3) d/T^2
  Schedule as_function() const;
};

Schedule static_schedule(double x0);

struct ConveyorPotential {
  double U0 = 1.0;
  double wavelength = 1.0;
  Schedule x_control;

  double k() const;
  double operator()(double x, double t) const;
  void validate() const;
};

/// omega_HO = 2 pi sqrt(2 U0 / (m lambda^2)).
double harmonic_frequency(double U0, double mass, double wavelength);
/// tau_HO = 2 pi / omega_HO.
double harmonic_period(double U0, double mass, double wavelength);

struct Observables {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double Dx = 0.0;
  double Dp = 0.0;
  double K2 = 0.0;  // <(p^2/2m)^2>
  double DU = 0.0;
  double energy = 0.0;
};

Observables observables(const Wavefunction1D& psi, const ConveyorPotential& pot, double t);

/// arccos |<a|b>| / dt.
double fs_speed_direct(const Wavefunction1D& a, const Wavefunction1D& b, double dt);
/// sqrt(<K^2> + DU^2).
double fs_speed_formula(const Observables& obs);

/// Energy spread <H^2> - <H>^2 under the spectral Hamiltonian, square-rooted.
double energy_spread(const Wavefunction1D& psi, const ConveyorPotential& pot, double t);

/// Strang split-step Fourier propagator. The potential is evaluated at the
/// midpoint t + dt/2. FFTW plans are owned by the instance.
class SplitStepPropagator {
 public:
  SplitStepPropagator(std::size_t n, double dx, double mass, double dt);
  ~SplitStepPropagator();
  SplitStepPropagator(const SplitStepPropagator&) = delete;
  SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;
  SplitStepPropagator(SplitStepPropagator&&) noexcept;
  SplitStepPropagator& operator=(SplitStepPropagator&&) noexcept;

  /// Advances psi from t to t + dt.
  void step(Wavefunction1D& psi, const ConveyorPotential& pot, double t);
  /// Imaginary-time step of length dtau followed by renormalization.
  void imaginary_step(Wavefunction1D& psi, const ConveyorPotential& pot, double t, double dtau);
  double dt() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct Snapshot {
  double t = 0.0;
  double x_control = 0.0;
  Observables obs;
  double speed_direct = 0.0;   // over the step ending at t (0 at t = 0)
  double speed_formula = 0.0;
};

struct PropagateOptions {
  std::size_t snapshot_every = 1;
  bool keep_states = false;
  // Density mass allowed in the outer 1/32 of the grid on either side.
  double boundary_tolerance = 1e-8;
  std::function<void(std::size_t step, double t, const Wavefunction1D&)> observer;
};

struct PropagationResult {
  std::vector<Snapshot> snapshots;
  std::vector<Wavefunction1D> states;  // filled when keep_states is set
  Wavefunction1D final_state;
  double final_time = 0.0;
  // Largest step-to-step speed over the whole run, not only at snapshots.
  double max_speed_direct = 0.0;
  double max_norm_drift = 0.0;
  std::vector<std::string> warnings;
};

/// Split-step evolution over `steps` steps from t = 0. Warns when
/// dt max|U| > 0.1. Throws GridTooSmall when the edge density exceeds the
/// tolerance.
PropagationResult propagate(const Wavefunction1D& psi0, const ConveyorPotential& pot, double dt,
                            std::size_t steps, const PropagateOptions& options = {});

/// Normalized Gaussian exp(-(x-x0)^2 / 4 sigma^2 + i k0 x) on the given grid.
Wavefunction1D gaussian(double x_min, double dx, std::size_t n, double x0, double sigma, double k0,
                        double mass);

/// Lowest eigenstate of the spectral Hamiltonian of the trap at time t,
/// localized in the well at x_control(t). Converged until the energy
/// spread falls below `tol`.
Wavefunction1D ground_state(double x_min, double dx, std::size_t n, double mass,
                            const ConveyorPotential& pot, double t, double tol = 1e-9);

/// (d / 2 Dx) / speed_max.
double qsl_transport_global(double d, double Dx, double speed_max);
/// sqrt(m lambda^2 d / (4 pi^2 U0 Dx)).
double qsl_conveyor(double mass, double wavelength, double U0, double Dx, double d);
/// sqrt(m lambda^2 / (2 pi^2 U0)).
double local_bound_transport(double mass, double wavelength, double U0);
/// max(qsl_conveyor, local_bound_transport).
double combined_bound(double mass, double wavelength, double U0, double Dx, double d);
/// sqrt(lambda / (8 pi Dx)).
double experiment_prefactor(double wavelength, double Dx);
/// sqrt(lambda / (8 pi Dx)) sqrt(2n / pi) tau_HO with n = 2d / lambda.
double experiment_qsl(double wavelength, double Dx, double d, double tau_ho);

struct FixedPointResult {
  double tau = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Solves tau^2 = (d / 2Dx) / sqrt((k^2 U0 / 2m)^2 + (DU_max / tau)^2) by damped
/// iteration. DU_max = 0 reproduces qsl_conveyor.
FixedPointResult qsl_self_consistent(double mass, double wavelength, double U0, double Dx, double d,
                                     double DU_max, double tol = 1e-10, std::size_t max_iter = 10000);

struct TransportSetup {
  double mass = 1.0;
  double wavelength = 8.0;
  double U0 = 32.0;
  double distance = 40.0;
  // Schedule length; 0 selects the default T0 tau_HO sqrt(d / lambda).
  double duration = 0.0;
  double duration_scale = 6.8;  // T0
  std::size_t n_grid = 4096;
  double padding_wavelengths = 16.0;
  // 0 selects 1e-3 tau_HO.
  double dt = 0.0;
  std::size_t snapshot_every = 10;

  void validate() const;
  double resolved_duration() const;
  double resolved_dt() const;
};

struct TransportReport {
  double d = 0.0;
  double Dx = 0.0;
  double Dp = 0.0;
  double K2_max = 0.0;
  double DU_max = 0.0;
  double speed_direct_max = 0.0;
  double speed_formula_max = 0.0;
  double elapsed = 0.0;
  double tau_global = 0.0;          // measured route: (d / 2Dx) / max speed_direct
  double tau_global_formula = 0.0;  // (d / 2Dx) / max sqrt(K2 + DU^2)
  double tau_conveyor = 0.0;
  double tau_local = 0.0;
  double tau_qsl = 0.0;             // max(tau_global, tau_local)
  double bures_angle = 0.0;         // arccos |<psi(0)|psi(T)>|
  double max_offset = 0.0;          // max |<x> - x_control| over snapshots
  double max_norm_drift = 0.0;

  nlohmann::ordered_json to_json() const;
};

struct TransportRun {
  TransportSetup setup;
  PropagationResult propagation;
  TransportReport report;
};

/// Prepares the trap ground state at the start of the lattice, moves it by
/// a minimum-jerk schedule and evaluates the bounds.
TransportRun simulate_transport(const TransportSetup& setup);

}  // namespace qsl::transport
