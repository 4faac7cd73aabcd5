#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "qsl/geometry.hpp"

namespace qsl::bounds {

/// Time-sampled parameter path lambda(t). Rows of `samples` are time points,
/// columns are parameters. Optional `rates` (same shape) carry analytic
/// d lambda / dt and replace finite differencing when present.
class Trajectory {
 public:
  Trajectory(std::vector<double> times, Eigen::MatrixXd samples, std::vector<std::string> names);

  std::size_t size() const { return times_.size(); }
  std::size_t parameters() const { return static_cast<std::size_t>(samples_.cols()); }
  double elapsed() const { return times_.back() - times_.front(); }

  const std::vector<double>& times() const { return times_; }
  const Eigen::MatrixXd& samples() const { return samples_; }
  const std::vector<std::string>& names() const { return names_; }

  std::vector<double> point(std::size_t k) const;

  void attach_rates(Eigen::MatrixXd rates);
  bool has_rates() const { return rates_.has_value(); }

  /// d lambda / dt at sample k: attached rates if any, otherwise central
  /// differences (one-sided at the ends).
  std::vector<double> rate(std::size_t k) const;
  double rate(std::size_t k, std::size_t i) const;

 private:
  std::vector<double> times_;
  Eigen::MatrixXd samples_;
  std::vector<std::string> names_;
  std::optional<Eigen::MatrixXd> rates_;
};

struct QslReport {
  std::vector<std::string> parameter_names;
  double elapsed = 0.0;

  double global_geodesic = 0.0;
  double global_speed_max = 0.0;
  double global_bound = 0.0;
  // Samples where the metric raised SingularEigenvalue; the global speed is
  // taken as infinite there, which sends global_bound to 0.
  std::size_t singular_samples = 0;
  // L / max V over the non-singular samples only (equals global_bound when
  // singular_samples == 0).
  double global_bound_regular = 0.0;

  std::vector<double> local_geodesics;
  std::vector<double> local_speed_max;
  std::vector<double> local_bounds;  // +infinity marks x/0 with x > 0
  std::vector<bool> unbounded;

  bool global_unbounded = false;  // L > 0 with zero global speed everywhere

  double best_local_bound = 0.0;
  std::size_t critical_parameter = 0;
  double tau_qsl = 0.0;

  bool has_unbounded() const;
  nlohmann::ordered_json to_json() const;
};

double local_geodesic(const Trajectory& traj, std::size_t i);
double local_speed_max(const Trajectory& traj, std::size_t i);

/// Ratio convention shared by every bound: 0/0 -> 0, x/0 -> +infinity.
double bound_ratio(double geodesic, double speed);

QslReport evaluate_bounds(const Trajectory& traj, const geometry::ParameterChart& chart);

struct BoundCheck {
  bool holds = true;
  double margin = 0.0;
};

/// tau_qsl <= elapsed * (1 + 1e-6); margin = elapsed - tau_qsl.
BoundCheck verify_bound(const Trajectory& traj, const QslReport& report);
BoundCheck verify_bound(double elapsed, double tau_qsl);

}  // namespace qsl::bounds
