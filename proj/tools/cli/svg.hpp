#pragma once

#include <string>
#include <vector>

namespace qsl::cli {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Line chart with axes, ticks, one polyline per series and a legend.
/// Non-finite points (and non-positive ones on log axes) break the line.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

}  // namespace qsl::cli
