#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cli/config.hpp"
#include "cli/svg.hpp"

namespace qsl::cli {

struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// RFC 4180 text: CRLF line ends, 17 significant digits, NaN as an empty field.
  std::string to_string() const;
};

struct PlotSpec {
  std::string file;
  std::vector<Series> series;
  ChartOptions options;
};

struct ScenarioResult {
  Json result;   // scenario report body
  Json summary;  // flat numeric row used by sweeps
  std::vector<CsvTable> tables;
  std::vector<PlotSpec> plots;
};

/// Runs one scenario point. `detailed` adds time-series tables and plots.
/// Numerical failures propagate as qsl::Error.
ScenarioResult run_scenario(Scenario scenario, const Json& params, bool detailed);

/// Runs a validated, defaulted configuration and writes its artifacts.
/// Returns the process exit status (0, 2 or 3).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Evaluates sweep points on a worker pool; results come back in index order.
std::vector<ScenarioResult> run_sweep_points(Scenario scenario, const std::vector<Json>& points,
                                             std::size_t threads);

/// Parameter blocks of the sweep grid, first spec varying slowest.
std::vector<Json> expand_sweep(const RunConfig& config);

}  // namespace qsl::cli
