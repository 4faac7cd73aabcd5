#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace qsl::geometry {

using Complex = std::complex<double>;

/// Pure state written as sum_j p_j exp(i phi_j) |j>.
struct PureStateParam {
  std::vector<double> amplitudes;
  std::vector<double> phases;

  std::size_t dimension() const { return amplitudes.size(); }
  Eigen::VectorXcd to_vector() const;

  /// Throws ContractViolation unless sum p_j^2 = 1 (1e-12), p_j >= 0 and
  /// amplitudes/phases have equal length.
  void validate() const;
};

/// Mixed state rho = sum_j p_j |j><j|; eigenvectors are the columns.
struct MixedStateParam {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;

  std::size_t dimension() const { return static_cast<std::size_t>(eigenvalues.size()); }
  Eigen::MatrixXcd density_matrix() const;

  /// Throws ContractViolation unless the eigenvalues are a probability vector
  /// (1e-12) and the eigenvector Gram matrix is the identity (1e-10).
  void validate() const;
};

struct MetricTensor {
  Eigen::MatrixXd g;

  std::size_t dimension() const { return static_cast<std::size_t>(g.rows()); }
  double quadratic_form(std::span<const double> v) const;
  double asymmetry() const;
  double min_eigenvalue() const;
  bool is_symmetric(double tol = 1e-12) const { return asymmetry() <= tol; }
  bool is_psd(double floor = -1e-10) const { return min_eigenvalue() >= floor; }
};

/// First derivatives of a pure-state chart: dp[mu][j] = d p_j / d lambda_mu.
struct PureDerivatives {
  std::vector<std::vector<double>> amplitudes;
  std::vector<std::vector<double>> phases;
};

/// dp[mu](j) = d p~_j / d lambda_mu and dv[mu] = d(eigenvectors) / d lambda_mu.
struct MixedDerivatives {
  std::vector<Eigen::VectorXd> eigenvalues;
  std::vector<Eigen::MatrixXcd> eigenvectors;
};

inline constexpr double kDefaultFiniteDifferenceStep = 1e-6;

/// Chart lambda -> PureStateParam. Derivatives come from an analytic callback
/// when one is attached, otherwise from central differences with step h.
/// Phase differences are unwrapped into (-pi, pi] before dividing by 2h.
class PureChart {
 public:
  using Map = std::function<PureStateParam(std::span<const double>)>;
  using Jacobian = std::function<PureDerivatives(std::span<const double>)>;

  PureChart(std::size_t parameters, Map map, double step = kDefaultFiniteDifferenceStep);

  PureChart& with_derivatives(Jacobian jacobian);

  std::size_t parameters() const { return parameters_; }
  double step() const { return step_; }
  bool has_analytic_derivatives() const { return static_cast<bool>(jacobian_); }

  PureStateParam operator()(std::span<const double> lambda) const;
  PureDerivatives derivatives(std::span<const double> lambda) const;
  PureDerivatives finite_difference_derivatives(std::span<const double> lambda) const;

 private:
  void check_point(std::span<const double> lambda) const;

  std::size_t parameters_;
  Map map_;
  Jacobian jacobian_;
  double step_;
};

/// Chart lambda -> MixedStateParam. The eigenvector frame must be smooth in
/// lambda; no gauge fixing is attempted.
class MixedChart {
 public:
  using Map = std::function<MixedStateParam(std::span<const double>)>;
  using Jacobian = std::function<MixedDerivatives(std::span<const double>)>;

  MixedChart(std::size_t parameters, Map map, double step = kDefaultFiniteDifferenceStep);

  MixedChart& with_derivatives(Jacobian jacobian);

  std::size_t parameters() const { return parameters_; }
  double step() const { return step_; }
  bool has_analytic_derivatives() const { return static_cast<bool>(jacobian_); }

  MixedStateParam operator()(std::span<const double> lambda) const;
  MixedDerivatives derivatives(std::span<const double> lambda) const;
  MixedDerivatives finite_difference_derivatives(std::span<const double> lambda) const;

 private:
  void check_point(std::span<const double> lambda) const;

  std::size_t parameters_;
  Map map_;
  Jacobian jacobian_;
  double step_;
};

using ParameterChart = std::variant<PureChart, MixedChart>;

std::size_t chart_parameters(const ParameterChart& chart);

/// Largest relative discrepancy between analytic and finite-difference
/// derivatives at lambda (0 when no analytic callback is attached).
double derivative_discrepancy(const PureChart& chart, std::span<const double> lambda);
double derivative_discrepancy(const MixedChart& chart, std::span<const double> lambda);

/// Squared Fubini-Study line element for the displacement (dp, dphi).
double fs_increment(const PureStateParam& state, std::span<const double> dp,
                    std::span<const double> dphi);

MetricTensor metric_tensor_pure(const PureChart& chart, std::span<const double> lambda);

/// Bures metric in the eigen-decomposition coordinates. Pairs with
/// p~_j + p~_k = 0 are skipped; a vanishing eigenvalue whose derivative also
/// vanishes (both below 1e-12) contributes nothing; a vanishing eigenvalue
/// with a nonzero derivative throws SingularEigenvalue(j).
MetricTensor metric_tensor_mixed(const MixedChart& chart, std::span<const double> lambda);

MetricTensor metric_tensor(const ParameterChart& chart, std::span<const double> lambda);

/// arccos |<a|b>|, evaluated through the orthogonal component for accuracy at
/// small angles.
double bures_angle_pure(const PureStateParam& a, const PureStateParam& b);
double bures_angle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

/// arccos Tr sqrt(sqrt(rho0) rho_t sqrt(rho0)).
double bures_angle_mixed(const MixedStateParam& rho0, const MixedStateParam& rho_t);
double bures_angle_mixed(const Eigen::MatrixXcd& rho0, const Eigen::MatrixXcd& rho_t);

/// Bures angle between the states the chart assigns to two points.
double bures_angle(const ParameterChart& chart, std::span<const double> from,
                   std::span<const double> to);

/// sqrt(v^T g v) with v = d lambda / dt.
double global_speed(const ParameterChart& chart, std::span<const double> lambda,
                    std::span<const double> rates);

/// Bloch-sphere chart (chi, phi): p = (cos chi/2, sin chi/2),
/// phases = (-phi/2, +phi/2), with analytic derivatives.
PureChart bloch_chart();

/// Diagonal qubit chart lambda = rho11: eigenvalues (rho11, 1 - rho11) with a
/// fixed eigenbasis.
MixedChart diagonal_qubit_chart();

/// Bloch z chart: eigenvalues ((1+z)/2, (1-z)/2), fixed eigenbasis.
MixedChart bloch_z_chart();

}  // namespace qsl::geometry
