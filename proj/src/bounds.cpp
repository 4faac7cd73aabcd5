#include "qsl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsl/errors.hpp"

namespace qsl::bounds {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();
constexpr double kBoundSlack = 1e-6;

nlohmann::ordered_json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

Trajectory::Trajectory(std::vector<double> times, Eigen::MatrixXd samples,
                       std::vector<std::string> names)
    : times_(std::move(times)), samples_(std::move(samples)), names_(std::move(names)) {
  if (times_.empty()) throw ContractViolation("trajectory: empty time grid");
  if (static_cast<Eigen::Index>(times_.size()) != samples_.rows()) {
    throw ContractViolation("trajectory: sample rows do not match time grid");
  }
  if (samples_.cols() == 0) throw ContractViolation("trajectory: no parameters");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      throw ContractViolation("trajectory: time grid not strictly increasing at index " +
                              std::to_string(k));
    }
  }
  if (names_.empty()) {
    for (Eigen::Index i = 0; i < samples_.cols(); ++i) names_.push_back("lambda" + std::to_string(i));
  }
  if (static_cast<Eigen::Index>(names_.size()) != samples_.cols()) {
    throw ContractViolation("trajectory: parameter name count mismatch");
  }
}

std::vector<double> Trajectory::point(std::size_t k) const {
  std::vector<double> out(parameters());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = samples_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
  }
  return out;
}

void Trajectory::attach_rates(Eigen::MatrixXd rates) {
  if (rates.rows() != samples_.rows() || rates.cols() != samples_.cols()) {
    throw ContractViolation("trajectory: rate matrix shape mismatch");
  }
  rates_ = std::move(rates);
}

double Trajectory::rate(std::size_t k, std::size_t i) const {
  const auto row = static_cast<Eigen::Index>(k);
  const auto col = static_cast<Eigen::Index>(i);
  if (rates_) return (*rates_)(row, col);
  const std::size_t n = size();
  if (n < 2) return 0.0;
  const std::size_t lo = (k == 0) ? 0 : k - 1;
  const std::size_t hi = (k + 1 == n) ? k : k + 1;
  return (samples_(static_cast<Eigen::Index>(hi), col) - samples_(static_cast<Eigen::Index>(lo), col)) /
         (times_[hi] - times_[lo]);
}

std::vector<double> Trajectory::rate(std::size_t k) const {
  std::vector<double> out(parameters());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rate(k, i);
  return out;
}

double local_geodesic(const Trajectory& traj, std::size_t i) {
  if (i >= traj.parameters()) throw ContractViolation("local_geodesic: parameter index out of range");
  const auto col = static_cast<Eigen::Index>(i);
  const auto last = static_cast<Eigen::Index>(traj.size() - 1);
  return std::abs(traj.samples()(last, col) - traj.samples()(0, col));
}

double local_speed_max(const Trajectory& traj, std::size_t i) {
  if (i >= traj.parameters()) throw ContractViolation("local_speed_max: parameter index out of range");
  double vmax = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) vmax = std::max(vmax, std::abs(traj.rate(k, i)));
  return vmax;
}

double bound_ratio(double geodesic, double speed) {
  if (geodesic == 0.0) return 0.0;
  if (std::isinf(speed)) return 0.0;
  if (speed == 0.0) return kInfinity;
  return geodesic / speed;
}

bool QslReport::has_unbounded() const {
  return std::any_of(unbounded.begin(), unbounded.end(), [](bool b) { return b; });
}

QslReport evaluate_bounds(const Trajectory& traj, const geometry::ParameterChart& chart) {
  const std::size_t r = traj.parameters();
  if (geometry::chart_parameters(chart) != r) {
    throw ContractViolation("evaluate_bounds: chart and trajectory disagree on parameter count");
  }

  QslReport rep;
  rep.parameter_names = traj.names();
  rep.elapsed = traj.elapsed();
  rep.global_geodesic = geometry::bures_angle(chart, traj.point(0), traj.point(traj.size() - 1));

  double vmax_regular = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    try {
      vmax_regular = std::max(vmax_regular, geometry::global_speed(chart, traj.point(k), traj.rate(k)));
    } catch (const SingularEigenvalue&) {
      ++rep.singular_samples;
    }
  }
  rep.global_speed_max = rep.singular_samples > 0 ? kInfinity : vmax_regular;
  rep.global_bound = bound_ratio(rep.global_geodesic, rep.global_speed_max);
  rep.global_bound_regular = bound_ratio(rep.global_geodesic, vmax_regular);
  rep.global_unbounded = std::isinf(rep.global_bound);

  rep.local_geodesics.resize(r);
  rep.local_speed_max.resize(r);
  rep.local_bounds.resize(r);
  rep.unbounded.resize(r);
  bool found = false;
  for (std::size_t i = 0; i < r; ++i) {
    rep.local_geodesics[i] = local_geodesic(traj, i);
    rep.local_speed_max[i] = local_speed_max(traj, i);
    rep.local_bounds[i] = bound_ratio(rep.local_geodesics[i], rep.local_speed_max[i]);
    rep.unbounded[i] = std::isinf(rep.local_bounds[i]);
    if (rep.unbounded[i]) continue;
    if (!found || rep.local_bounds[i] > rep.best_local_bound) {
      rep.best_local_bound = rep.local_bounds[i];
      rep.critical_parameter = i;
      found = true;
    }
  }
  const double global_part = rep.global_unbounded ? 0.0 : rep.global_bound;
  rep.tau_qsl = std::max(global_part, rep.best_local_bound);
  return rep;
}

BoundCheck verify_bound(double elapsed, double tau_qsl) {
  BoundCheck check;
  check.holds = tau_qsl <= elapsed * (1.0 + kBoundSlack);
  check.margin = elapsed - tau_qsl;
  return check;
}

BoundCheck verify_bound(const Trajectory& traj, const QslReport& report) {
  return verify_bound(traj.elapsed(), report.tau_qsl);
}

nlohmann::ordered_json QslReport::to_json() const {
  nlohmann::ordered_json j;
  j["parameter_names"] = parameter_names;
  j["elapsed"] = elapsed;
  j["global_geodesic"] = global_geodesic;
  j["global_speed_max"] = finite_or_null(global_speed_max);
  j["global_bound"] = finite_or_null(global_bound);
  j["global_bound_regular"] = finite_or_null(global_bound_regular);
  j["singular_samples"] = singular_samples;
  j["local_geodesics"] = local_geodesics;
  j["local_speed_max"] = local_speed_max;
  auto local = nlohmann::ordered_json::array();
  auto flagged = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < local_bounds.size(); ++i) {
    local.push_back(finite_or_null(local_bounds[i]));
    if (unbounded[i]) flagged.push_back(i);
  }
  j["local_bounds"] = local;
  j["unbounded_parameters"] = flagged;
  j["best_local_bound"] = best_local_bound;
  j["critical_parameter"] = critical_parameter;
  if (critical_parameter < parameter_names.size()) {
    j["critical_parameter_name"] = parameter_names[critical_parameter];
  }
  j["tau_qsl"] = tau_qsl;
  return j;
}

}  // namespace qsl::bounds
