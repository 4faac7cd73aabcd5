#include "qsl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "qsl/errors.hpp"

namespace qsl::geometry {

namespace {

constexpr double kNormTolerance = 1e-12;
constexpr double kGramTolerance = 1e-10;
constexpr double kZeroEigenvalue = 1e-12;
constexpr double kHermitianTolerance = 1e-10;

std::vector<double> shifted(std::span<const double> lambda, std::size_t mu, double delta) {
  std::vector<double> out(lambda.begin(), lambda.end());
  out[mu] += delta;
  return out;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

void require_size(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw ContractViolation(std::string(what) + ": expected length " + std::to_string(n) +
                            ", got " + std::to_string(v.size()));
  }
}

Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

void check_density_matrix(const Eigen::MatrixXcd& rho, const char* name) {
  if (rho.rows() != rho.cols()) {
    throw ContractViolation(std::string(name) + " is not square");
  }
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance) {
    throw ContractViolation(std::string(name) + " is not Hermitian");
  }
  if (std::abs(rho.trace().real() - 1.0) > kHermitianTolerance) {
    throw ContractViolation(std::string(name) + " does not have unit trace");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// State parameterizations

Eigen::VectorXcd PureStateParam::to_vector() const {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(amplitudes.size()));
  for (std::size_t j = 0; j < amplitudes.size(); ++j) {
    v(static_cast<Eigen::Index>(j)) = std::polar(amplitudes[j], phases[j]);
  }
  return v;
}

void PureStateParam::validate() const {
  if (amplitudes.size() != phases.size()) {
    throw ContractViolation("pure state: amplitude and phase vectors differ in length");
  }
  if (amplitudes.empty()) throw ContractViolation("pure state: empty");
  double norm = 0.0;
  for (double p : amplitudes) {
    if (!(p >= 0.0)) throw ContractViolation("pure state: negative amplitude");
    norm += p * p;
  }
  if (std::abs(norm - 1.0) > kNormTolerance) {
    throw ContractViolation("pure state: sum p_j^2 = " + std::to_string(norm) + " != 1");
  }
}

Eigen::MatrixXcd MixedStateParam::density_matrix() const {
  return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
}

void MixedStateParam::validate() const {
  const auto n = eigenvalues.size();
  if (eigenvectors.rows() != n || eigenvectors.cols() != n) {
    throw ContractViolation("mixed state: eigenvector matrix has wrong shape");
  }
  if ((eigenvalues.array() < 0.0).any()) {
    throw ContractViolation("mixed state: negative eigenvalue");
  }
  if (std::abs(eigenvalues.sum() - 1.0) > kNormTolerance) {
    throw ContractViolation("mixed state: eigenvalues do not sum to 1");
  }
  const Eigen::MatrixXcd gram = eigenvectors.adjoint() * eigenvectors;
  if ((gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() > kGramTolerance) {
    throw ContractViolation("mixed state: eigenvectors are not orthonormal");
  }
}

// ---------------------------------------------------------------------------
// Metric tensor helpers

double MetricTensor::quadratic_form(std::span<const double> v) const {
  require_size(v, dimension(), "metric quadratic form");
  const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  return x.dot(g * x);
}

double MetricTensor::asymmetry() const {
  if (g.size() == 0) return 0.0;
  return (g - g.transpose()).cwiseAbs().maxCoeff();
}

double MetricTensor::min_eigenvalue() const {
  if (g.size() == 0) return 0.0;
  const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Charts

PureChart::PureChart(std::size_t parameters, Map map, double step)
    : parameters_(parameters), map_(std::move(map)), step_(step) {
  if (parameters_ == 0) throw ContractViolation("chart needs at least one parameter");
  if (!(step_ > 0.0)) throw ContractViolation("finite-difference step must be positive");
}

PureChart& PureChart::with_derivatives(Jacobian jacobian) {
  jacobian_ = std::move(jacobian);
  return *this;
}

void PureChart::check_point(std::span<const double> lambda) const {
  require_size(lambda, parameters_, "chart point");
}

PureStateParam PureChart::operator()(std::span<const double> lambda) const {
  check_point(lambda);
  return map_(lambda);
}

PureDerivatives PureChart::derivatives(std::span<const double> lambda) const {
  check_point(lambda);
  if (jacobian_) return jacobian_(lambda);
  return finite_difference_derivatives(lambda);
}

PureDerivatives PureChart::finite_difference_derivatives(std::span<const double> lambda) const {
  check_point(lambda);
  PureDerivatives d;
  d.amplitudes.resize(parameters_);
  d.phases.resize(parameters_);
  for (std::size_t mu = 0; mu < parameters_; ++mu) {
    const auto plus = map_(shifted(lambda, mu, step_));
    const auto minus = map_(shifted(lambda, mu, -step_));
    const std::size_t n = plus.amplitudes.size();
    d.amplitudes[mu].resize(n);
    d.phases[mu].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      d.amplitudes[mu][j] = (plus.amplitudes[j] - minus.amplitudes[j]) / (2.0 * step_);
      d.phases[mu][j] = wrap_angle(plus.phases[j] - minus.phases[j]) / (2.0 * step_);
    }
  }
  return d;
}

MixedChart::MixedChart(std::size_t parameters, Map map, double step)
    : parameters_(parameters), map_(std::move(map)), step_(step) {
  if (parameters_ == 0) throw ContractViolation("chart needs at least one parameter");
  if (!(step_ > 0.0)) throw ContractViolation("finite-difference step must be positive");
}

MixedChart& MixedChart::with_derivatives(Jacobian jacobian) {
  jacobian_ = std::move(jacobian);
  return *this;
}

void MixedChart::check_point(std::span<const double> lambda) const {
  require_size(lambda, parameters_, "chart point");
}

MixedStateParam MixedChart::operator()(std::span<const double> lambda) const {
  check_point(lambda);
  return map_(lambda);
}

MixedDerivatives MixedChart::derivatives(std::span<const double> lambda) const {
  check_point(lambda);
  if (jacobian_) return jacobian_(lambda);
  return finite_difference_derivatives(lambda);
}

MixedDerivatives MixedChart::finite_difference_derivatives(std::span<const double> lambda) const {
  check_point(lambda);
  MixedDerivatives d;
  d.eigenvalues.resize(parameters_);
  d.eigenvectors.resize(parameters_);
  for (std::size_t mu = 0; mu < parameters_; ++mu) {
    const auto plus = map_(shifted(lambda, mu, step_));
    const auto minus = map_(shifted(lambda, mu, -step_));
    d.eigenvalues[mu] = (plus.eigenvalues - minus.eigenvalues) / (2.0 * step_);
    d.eigenvectors[mu] = (plus.eigenvectors - minus.eigenvectors) / Complex(2.0 * step_, 0.0);
  }
  return d;
}

std::size_t chart_parameters(const ParameterChart& chart) {
  return std::visit([](const auto& c) { return c.parameters(); }, chart);
}

double derivative_discrepancy(const PureChart& chart, std::span<const double> lambda) {
  if (!chart.has_analytic_derivatives()) return 0.0;
  const auto a = chart.derivatives(lambda);
  const auto f = chart.finite_difference_derivatives(lambda);
  double diff = 0.0;
  double scale = 1.0;
  for (std::size_t mu = 0; mu < chart.parameters(); ++mu) {
    for (std::size_t j = 0; j < a.amplitudes[mu].size(); ++j) {
      diff = std::max({diff, std::abs(a.amplitudes[mu][j] - f.amplitudes[mu][j]),
                       std::abs(a.phases[mu][j] - f.phases[mu][j])});
      scale = std::max({scale, std::abs(a.amplitudes[mu][j]), std::abs(a.phases[mu][j])});
    }
  }
  return diff / scale;
}

double derivative_discrepancy(const MixedChart& chart, std::span<const double> lambda) {
  if (!chart.has_analytic_derivatives()) return 0.0;
  const auto a = chart.derivatives(lambda);
  const auto f = chart.finite_difference_derivatives(lambda);
  double diff = 0.0;
  double scale = 1.0;
  for (std::size_t mu = 0; mu < chart.parameters(); ++mu) {
    diff = std::max({diff, (a.eigenvalues[mu] - f.eigenvalues[mu]).cwiseAbs().maxCoeff(),
                     (a.eigenvectors[mu] - f.eigenvectors[mu]).cwiseAbs().maxCoeff()});
    scale = std::max({scale, a.eigenvalues[mu].cwiseAbs().maxCoeff(),
                      a.eigenvectors[mu].cwiseAbs().maxCoeff()});
  }
  return diff / scale;
}

// ---------------------------------------------------------------------------
// Fubini-Study / Bures

double fs_increment(const PureStateParam& state, std::span<const double> dp,
                    std::span<const double> dphi) {
  const std::size_t n = state.dimension();
  require_size(dp, n, "fs_increment dp");
  require_size(dphi, n, "fs_increment dphi");
  require_size(state.phases, n, "fs_increment phases");
  double amplitude_part = 0.0;
  double phase_square = 0.0;
  double phase_mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = state.amplitudes[j] * state.amplitudes[j];
    amplitude_part += dp[j] * dp[j];
    phase_square += w * dphi[j] * dphi[j];
    phase_mean += w * dphi[j];
  }
  return amplitude_part + (phase_square - phase_mean * phase_mean);
}

MetricTensor metric_tensor_pure(const PureChart& chart, std::span<const double> lambda) {
  const auto state = chart(lambda);
  state.validate();
  const auto d = chart.derivatives(lambda);
  const std::size_t r = chart.parameters();
  const std::size_t n = state.dimension();

  std::vector<double> weight(n);
  for (std::size_t j = 0; j < n; ++j) weight[j] = state.amplitudes[j] * state.amplitudes[j];

  std::vector<double> mean_phase_rate(r, 0.0);
  for (std::size_t mu = 0; mu < r; ++mu) {
    for (std::size_t j = 0; j < n; ++j) mean_phase_rate[mu] += weight[j] * d.phases[mu][j];
  }

  MetricTensor out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r))};
  for (std::size_t mu = 0; mu < r; ++mu) {
    for (std::size_t nu = mu; nu < r; ++nu) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += d.amplitudes[mu][j] * d.amplitudes[nu][j] +
             weight[j] * d.phases[mu][j] * d.phases[nu][j];
      }
      s -= mean_phase_rate[mu] * mean_phase_rate[nu];
      out.g(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(nu)) = s;
      out.g(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(mu)) = s;
    }
  }
  return out;
}

MetricTensor metric_tensor_mixed(const MixedChart& chart, std::span<const double> lambda) {
  const auto state = chart(lambda);
  state.validate();
  const auto d = chart.derivatives(lambda);
  const auto r = static_cast<Eigen::Index>(chart.parameters());
  const Eigen::Index n = state.eigenvalues.size();
  const Eigen::VectorXd& p = state.eigenvalues;

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(r, r);

  for (Eigen::Index j = 0; j < n; ++j) {
    if (p(j) < kZeroEigenvalue) {
      for (Eigen::Index mu = 0; mu < r; ++mu) {
        if (std::abs(d.eigenvalues[static_cast<std::size_t>(mu)](j)) >= kZeroEigenvalue) {
          throw SingularEigenvalue(static_cast<std::size_t>(j),
                                   "Bures metric: eigenvalue " + std::to_string(j) +
                                       " vanishes with nonzero derivative");
        }
      }
      continue;
    }
    for (Eigen::Index mu = 0; mu < r; ++mu) {
      for (Eigen::Index nu = 0; nu < r; ++nu) {
        g(mu, nu) += 0.25 * d.eigenvalues[static_cast<std::size_t>(mu)](j) *
                     d.eigenvalues[static_cast<std::size_t>(nu)](j) / p(j);
      }
    }
  }

  // connection[mu](j, k) = <j| d_mu |k>
  std::vector<Eigen::MatrixXcd> connection(static_cast<std::size_t>(r));
  for (Eigen::Index mu = 0; mu < r; ++mu) {
    connection[static_cast<std::size_t>(mu)] =
        state.eigenvectors.adjoint() * d.eigenvectors[static_cast<std::size_t>(mu)];
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double sum = p(j) + p(k);
      if (sum <= 0.0) continue;
      const double w = (p(j) - p(k)) * (p(j) - p(k)) / sum;
      if (w == 0.0) continue;
      for (Eigen::Index mu = 0; mu < r; ++mu) {
        for (Eigen::Index nu = 0; nu < r; ++nu) {
          const Complex term = connection[static_cast<std::size_t>(mu)](j, k) *
                               connection[static_cast<std::size_t>(nu)](k, j);
          g(mu, nu) -= w * term.real();
        }
      }
    }
  }
  return MetricTensor{0.5 * (g + g.transpose())};
}

MetricTensor metric_tensor(const ParameterChart& chart, std::span<const double> lambda) {
  return std::visit(
      [&](const auto& c) -> MetricTensor {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PureChart>) {
          return metric_tensor_pure(c, lambda);
        } else {
          return metric_tensor_mixed(c, lambda);
        }
      },
      chart);
}

double bures_angle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  if (a.size() != b.size()) throw ContractViolation("bures_angle: dimension mismatch");
  const Complex overlap = a.dot(b);  // a^dagger b
  const Eigen::VectorXcd orthogonal = b - overlap * a;
  return std::atan2(orthogonal.norm(), std::abs(overlap));
}

double bures_angle_pure(const PureStateParam& a, const PureStateParam& b) {
  a.validate();
  b.validate();
  return bures_angle(a.to_vector(), b.to_vector());
}

double bures_angle_mixed(const Eigen::MatrixXcd& rho0, const Eigen::MatrixXcd& rho_t) {
  check_density_matrix(rho0, "rho0");
  check_density_matrix(rho_t, "rho_t");
  if (rho0.rows() != rho_t.rows()) throw ContractViolation("bures_angle_mixed: dimension mismatch");
  const Eigen::MatrixXcd root = hermitian_sqrt(0.5 * (rho0 + rho0.adjoint()));
  Eigen::MatrixXcd m = root * rho_t * root;
  m = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  const double fidelity_root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::acos(std::clamp(fidelity_root, 0.0, 1.0));
}

double bures_angle_mixed(const MixedStateParam& rho0, const MixedStateParam& rho_t) {
  rho0.validate();
  rho_t.validate();
  return bures_angle_mixed(rho0.density_matrix(), rho_t.density_matrix());
}

double bures_angle(const ParameterChart& chart, std::span<const double> from,
                   std::span<const double> to) {
  return std::visit(
      [&](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PureChart>) {
          return bures_angle_pure(c(from), c(to));
        } else {
          return bures_angle_mixed(c(from), c(to));
        }
      },
      chart);
}

double global_speed(const ParameterChart& chart, std::span<const double> lambda,
                    std::span<const double> rates) {
  const auto g = metric_tensor(chart, lambda);
  return std::sqrt(std::max(0.0, g.quadratic_form(rates)));
}

// ---------------------------------------------------------------------------
// Standard charts

PureChart bloch_chart() {
  PureChart chart(2, [](std::span<const double> l) {
    const double chi = l[0];
    const double phi = l[1];
    return PureStateParam{{std::cos(chi / 2.0), std::sin(chi / 2.0)}, {-phi / 2.0, phi / 2.0}};
  });
  chart.with_derivatives([](std::span<const double> l) {
    const double chi = l[0];
    PureDerivatives d;
    d.amplitudes = {{-0.5 * std::sin(chi / 2.0), 0.5 * std::cos(chi / 2.0)}, {0.0, 0.0}};
    d.phases = {{0.0, 0.0}, {-0.5, 0.5}};
    return d;
  });
  return chart;
}

MixedChart diagonal_qubit_chart() {
  MixedChart chart(1, [](std::span<const double> l) {
    MixedStateParam s;
    s.eigenvalues = Eigen::Vector2d(l[0], 1.0 - l[0]);
    s.eigenvectors = Eigen::MatrixXcd::Identity(2, 2);
    return s;
  });
  chart.with_derivatives([](std::span<const double>) {
    MixedDerivatives d;
    d.eigenvalues = {Eigen::Vector2d(1.0, -1.0)};
    d.eigenvectors = {Eigen::MatrixXcd::Zero(2, 2)};
    return d;
  });
  return chart;
}

MixedChart bloch_z_chart() {
  MixedChart chart(1, [](std::span<const double> l) {
    MixedStateParam s;
    s.eigenvalues = Eigen::Vector2d(0.5 * (1.0 + l[0]), 0.5 * (1.0 - l[0]));
    s.eigenvectors = Eigen::MatrixXcd::Identity(2, 2);
    return s;
  });
  chart.with_derivatives([](std::span<const double>) {
    MixedDerivatives d;
    d.eigenvalues = {Eigen::Vector2d(0.5, -0.5)};
    d.eigenvectors = {Eigen::MatrixXcd::Zero(2, 2)};
    return d;
  });
  return chart;
}

}  // namespace qsl::geometry
