#pragma once

// Reference implementations used only by the tests. They share no code with
// the library: brute-force formulas, fixed-step integrators and dense linear
// algebra.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qsl/geometry.hpp"

namespace oracle {

using cd = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

inline Eigen::MatrixXcd sqrtm_psd(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (a + a.adjoint()));
  const Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

/// arccos of the Uhlmann fidelity root, evaluated with dense square roots.
inline double bures_angle(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const Eigen::MatrixXcd s = sqrtm_psd(a);
  const Eigen::MatrixXcd inner = sqrtm_psd(s * b * s);
  return std::acos(std::min(1.0, inner.trace().real()));
}

/// Bures angle in extended precision. Differencing at small steps needs it:
/// 1 - F is of order the squared angle and double rounding of F dominates.
inline long double bures_angle_extended(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  using M = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;
  auto sqrtm = [](const M& x) {
    Eigen::SelfAdjointEigenSolver<M> es(M((x + x.adjoint()) / 2.0L));
    const auto w = es.eigenvalues().cwiseMax(0.0L).cwiseSqrt().eval();
    return M(es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint());
  };
  // Unit trace in extended precision; a trace off by 1e-16 shifts F linearly.
  auto unit = [](const Eigen::MatrixXcd& x) {
    const M y = x.cast<std::complex<long double>>();
    return M(y / y.trace().real());
  };
  const M s = sqrtm(unit(a));
  const M inner = sqrtm(M(s * unit(b) * s));
  return std::acos(std::min(1.0L, inner.trace().real()));
}

inline double bures_angle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return std::acos(std::min(1.0, std::abs(a.dot(b)) / (a.norm() * b.norm())));
}

/// Fubini-Study metric of a vector-valued map by central differences:
/// Re<d psi|d psi> - Re(<d psi|psi><psi|d psi>).
inline Eigen::MatrixXd fs_metric(const std::function<Eigen::VectorXcd(std::span<const double>)>& psi,
                                 std::vector<double> lambda, double h = 1e-5) {
  const auto n = lambda.size();
  const Eigen::VectorXcd p0 = psi(lambda);
  std::vector<Eigen::VectorXcd> d(n);
  for (std::size_t mu = 0; mu < n; ++mu) {
    auto lp = lambda;
    auto lm = lambda;
    lp[mu] += h;
    lm[mu] -= h;
    d[mu] = (psi(lp) - psi(lm)) / (2.0 * h);
  }
  Eigen::MatrixXd g(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      g(a, b) = d[a].dot(d[b]).real() - (d[a].dot(p0) * p0.dot(d[b])).real();
    }
  }
  return g;
}

/// Unitary exp(i H) for Hermitian H.
inline Eigen::MatrixXcd expi(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  Eigen::VectorXcd ph(es.eigenvalues().size());
  for (Eigen::Index j = 0; j < ph.size(); ++j) ph[j] = std::polar(1.0, es.eigenvalues()[j]);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline Eigen::MatrixXcd random_hermitian(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = cd(g(rng), g(rng));
  }
  return 0.5 * (a + a.adjoint());
}

/// Random smooth pure chart on C^dim with `params` parameters:
/// amplitudes from a normalized exp(sin(.)) profile, phases from smooth maps.
struct RandomPureChart {
  int dim;
  int params;
  Eigen::MatrixXd w_amp, w_phase;
  Eigen::VectorXd b_amp, b_phase;

  RandomPureChart(std::mt19937_64& rng, int dim_, int params_) : dim(dim_), params(params_) {
    std::normal_distribution<double> g(0.0, 1.0);
    w_amp = Eigen::MatrixXd(dim, params);
    w_phase = Eigen::MatrixXd(dim, params);
    b_amp = Eigen::VectorXd(dim);
    b_phase = Eigen::VectorXd(dim);
    for (int j = 0; j < dim; ++j) {
      for (int m = 0; m < params; ++m) {
        w_amp(j, m) = g(rng);
        w_phase(j, m) = g(rng);
      }
      b_amp[j] = g(rng);
      b_phase[j] = g(rng);
    }
  }

  qsl::geometry::PureStateParam operator()(std::span<const double> l) const {
    qsl::geometry::PureStateParam s;
    double norm = 0.0;
    for (int j = 0; j < dim; ++j) {
      double arg = b_amp[j];
      double ph = b_phase[j];
      for (int m = 0; m < params; ++m) {
        arg += w_amp(j, m) * l[m];
        ph += w_phase(j, m) * l[m] + 0.3 * std::sin(l[m] * (j + 1));
      }
      const double a = std::exp(std::sin(arg));
      s.amplitudes.push_back(a);
      s.phases.push_back(ph);
      norm += a * a;
    }
    for (auto& a : s.amplitudes) a /= std::sqrt(norm);
    return s;
  }

  Eigen::VectorXcd vector(std::span<const double> l) const { return (*this)(l).to_vector(); }
};

/// Random smooth mixed chart: softmax eigenvalues, eigenvectors exp(i H(lambda)).
struct RandomMixedChart {
  int dim;
  int params;
  std::vector<Eigen::MatrixXcd> generators;  // params + 1 (last is constant)
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
  double floor = 0.0;  // eigenvalue floor weight; small values approach a pure state

  RandomMixedChart(std::mt19937_64& rng, int dim_, int params_) : dim(dim_), params(params_) {
    for (int m = 0; m <= params; ++m) generators.push_back(random_hermitian(rng, dim, m == params ? 1.0 : 0.6));
    std::normal_distribution<double> g(0.0, 1.0);
    w = Eigen::MatrixXd(dim, params);
    b = Eigen::VectorXd(dim);
    for (int j = 0; j < dim; ++j) {
      for (int m = 0; m < params; ++m) w(j, m) = g(rng);
      b[j] = g(rng);
    }
  }

  Eigen::MatrixXcd frame(std::span<const double> l) const {
    Eigen::MatrixXcd h = generators[static_cast<std::size_t>(params)];
    for (int m = 0; m < params; ++m) h += l[m] * generators[static_cast<std::size_t>(m)];
    return expi(h);
  }

  qsl::geometry::MixedStateParam operator()(std::span<const double> l) const {
    qsl::geometry::MixedStateParam s;
    Eigen::VectorXd e(dim);
    for (int j = 0; j < dim; ++j) {
      double arg = b[j];
      for (int m = 0; m < params; ++m) arg += w(j, m) * std::sin(l[m] + j);
      e[j] = std::exp(arg);
    }
    s.eigenvalues = e / e.sum();
    s.eigenvectors = frame(l);
    return s;
  }
};

/// Classical RK4 for the Bloch angles with a bias Gamma(t, chi).
struct BlochPath {
  std::vector<double> t, chi, phi;
};

inline BlochPath rk4_bloch(double v, double c, const std::function<double(double, double)>& gamma, double chi0,
                           double phi0, double t_end, double h) {
  auto f = [&](double t, double x, double y, double& dx, double& dy) {
    dx = -v * std::sin(y);
    dy = gamma(t, x) - std::cos(x) * (c + v * std::cos(y) / std::sin(x));
  };
  BlochPath p;
  double x = chi0, y = phi0, t = 0.0;
  const int n = static_cast<int>(std::round(t_end / h));
  p.t.push_back(t);
  p.chi.push_back(x);
  p.phi.push_back(y);
  for (int k = 0; k < n; ++k) {
    double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
    f(t, x, y, k1x, k1y);
    f(t + h / 2, x + h / 2 * k1x, y + h / 2 * k1y, k2x, k2y);
    f(t + h / 2, x + h / 2 * k2x, y + h / 2 * k2y, k3x, k3y);
    f(t + h, x + h * k3x, y + h * k3y, k4x, k4y);
    x += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
    t = (k + 1) * h;
    p.t.push_back(t);
    p.chi.push_back(x);
    p.phi.push_back(y);
  }
  return p;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    num += dx * (std::log(y[i]) - my);
    den += dx * dx;
  }
  return num / den;
}

}  // namespace oracle
