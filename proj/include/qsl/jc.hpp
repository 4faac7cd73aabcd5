#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "qsl/bounds.hpp"

// Resonant damped Jaynes-Cummings qubit: a two-level atom in a leaky cavity
// with a Lorentzian reservoir of width lambda0 and coupling gamma0. The
// excited population rho11 obeys d rho11/dt = -gamma(t) rho11.
namespace qsl::jc {

enum class Regime { Weak, Critical, Strong };

std::string to_string(Regime r);

struct JcParams {
  double gamma0 = 1.0;
  double lambda0 = 1.0;
  double omega0 = 0.0;  // only enters the spectral density

  void validate() const;
  /// sqrt|lambda0^2 - 2 gamma0 lambda0|.
  double D() const;
  /// Critical when D < 1e-6 lambda0; otherwise weak iff 2 gamma0 < lambda0.
  Regime regime() const;
};

/// First zero of the strong-branch denominator,
/// 2 (pi - atan(D / lambda0)) / D; +infinity in the other regimes.
double domain_end(const JcParams& p);

/// gamma(t). Weak: 2 g l sinh(Dt/2) / (D cosh + l sinh); strong: the same with
/// sin/cos; critical: 2 g l t / (2 + l t). Diverges at the strong-branch poles
/// and changes sign after the first one.
double decay_rate(double t, const JcParams& p);

/// exp(-integral_0^t gamma) by adaptive Gauss-Kronrod quadrature. Throws
/// DomainEndError for t >= domain_end.
double rho11(double t, const JcParams& p);

/// e^{-l t} [cosh(Dt/2) + (l/D) sinh(Dt/2)]^2, with cos/sin in the strong
/// regime and e^{-l t}(1 + l t / 2)^2 at criticality. Valid for all t >= 0.
double rho11_closed_form(double t, const JcParams& p);

/// sigma_t = d rho11 / dt from the closed form.
double sigma_backflow(double t, const JcParams& p);

/// Bloch z = 2 rho11 - 1.
double bloch_z(double rho11_value);

// Density matrices use the ordered basis (excited, ground): rho(0,0) is the
// excited population rho11.
Eigen::Matrix2cd excited_state();
Eigen::Matrix2cd ground_state();
double excited_population(const Eigen::Matrix2cd& rho);

/// gamma [s- rho s+ - 1/2 {s+ s-, rho}].
Eigen::Matrix2cd lindblad_generator(const Eigen::Matrix2cd& rho, double gamma);

/// One RK4 step at constant gamma. Throws IntegrationToleranceError when the
/// result has an eigenvalue below -1e-9.
Eigen::Matrix2cd lindblad_step(const Eigen::Matrix2cd& rho, double gamma, double dt);
/// One RK4 step with gamma evaluated at the stage times.
Eigen::Matrix2cd lindblad_step(const Eigen::Matrix2cd& rho, const std::function<double(double)>& gamma,
                               double t, double dt);

struct LindbladSample {
  double t = 0.0;
  Eigen::Matrix2cd rho;
};

/// Evolves the excited state under gamma(t) on a uniform grid up to t_end.
/// Throws DomainEndError when t_end reaches the strong-branch domain end.
std::vector<LindbladSample> evolve_lindblad(const JcParams& p, double t_end, double dt);

/// Sum of the rho11 increases over the intervals of [0, t_max] with sigma > 0.
double non_markovianity(const JcParams& p, double t_max);

struct SigmaPeak {
  double t = 0.0;
  double value = 0.0;  // |sigma| at t
};

/// max |sigma_t|: 1e4-point scan of the search window, then golden-section
/// refinement to 1e-10 relative. The window is [0, domain_end] in the strong
/// regime and [0, 40/lambda0 + 4/gamma0] otherwise.
SigmaPeak max_sigma(const JcParams& p);

/// pi min_t sqrt(rho11 (1 - rho11)) / |sigma_t| on a 1e4-point grid over
/// [epsilon, window end]; this is the global bound with the t = 0 sample
/// left out.
double global_bound_excluding_start(const JcParams& p, double epsilon);

struct JcReport {
  JcParams params;
  Regime regime = Regime::Weak;
  double D = 0.0;
  double sigma_max = 0.0;
  double t_sigma_max = 0.0;
  double tau_local = 0.0;            // 1 / |sigma|max (full decay, rho11 chart)
  double tau_local_z = 0.0;          // 2 / (2 |sigma|max) on the z chart
  double global_bound = 0.0;         // 0: the speed diverges at rho11 = 1
  double global_bound_regular = 0.0; // global_bound_excluding_start at 1e-6 / lambda0
  double tau_qsl = 0.0;
  double tau_weak_formula = 0.0;     // 1 / gamma0
  double tau_strong_formula = 0.0;   // 2 / sqrt(2 g l - l^2); NaN outside the strong regime
  double non_markovianity = 0.0;
  double t_max = 0.0;

  nlohmann::ordered_json to_json() const;
};

/// QSL report; non-Markovianity is accumulated over [0, t_max].
JcReport qsl_jc(const JcParams& p, double t_max);

/// gamma0 lambda0 / (2 pi [(omega - omega0)^2 + lambda0^2]).
double lorentzian_spectral_density(double omega, const JcParams& p);

struct SweepRow {
  double gamma0 = 0.0;
  double lambda0 = 0.0;
  double tau_qsl = 0.0;
  double tau_weak_formula = 0.0;
  double tau_strong_formula = 0.0;
  double N = 0.0;
};

/// One row per (lambda0, gamma0) pair, lambda0-major.
std::vector<SweepRow> sweep_qsl(const std::vector<double>& gamma0s, const std::vector<double>& lambda0s,
                                double t_max);

enum class Chart { Rho11, BlochZ };

/// rho11 (or z) sampled on n points of [0, t_end] with analytic rates attached.
bounds::Trajectory sample_trajectory(const JcParams& p, double t_end, std::size_t n, Chart chart);

/// evaluate_bounds on sample_trajectory with the matching diagonal chart.
bounds::QslReport evaluate_jc_bounds(const JcParams& p, double t_end, std::size_t n, Chart chart);

struct CsvRow {
  double t, gamma, rho11, sigma, z;
};

/// Rows of the time-series export on n points of [0, t_end] (closed-form rho11).
std::vector<CsvRow> tabulate(const JcParams& p, double t_end, std::size_t n);

}  // namespace qsl::jc
