#include "cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace qsl::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v) const {
    const double t = log ? std::log10(v) : v;
    return (t - lo) / (hi - lo);
  }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

Axis make_axis(const std::vector<Series>& series, bool use_x, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    const auto& v = use_x ? s.x : s.y;
    for (double x : v) {
      if (!a.usable(x)) continue;
      const double t = log ? std::log10(x) : x;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  } else if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> out;
  if (a.log) {
    for (double e = std::ceil(a.lo); e <= a.hi + 1e-12; e += 1.0) out.push_back(std::pow(10.0, e));
    if (out.size() < 2) {
      out = {std::pow(10.0, a.lo), std::pow(10.0, a.hi)};
    }
    return out;
  }
  const double raw = (a.hi - a.lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  for (double v = std::ceil(a.lo / step) * step; v <= a.hi + 1e-9 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& options) {
  const Axis ax = make_axis(series, true, options.log_x);
  const Axis ay = make_axis(series, false, options.log_y);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.map(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.map(v)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << coord(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(options.title) << "</text>\n";
  os << "<rect x=\"" << coord(kLeft) << "\" y=\"" << coord(kTop) << "\" width=\"" << coord(pw) << "\" height=\""
     << coord(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ticks(ax)) {
    const double x = px(t);
    os << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(kTop + ph) << "\" x2=\"" << coord(x) << "\" y2=\""
       << coord(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << coord(x) << "\" y=\"" << coord(kTop + ph + 18) << "\" text-anchor=\"middle\">" << fmt(t)
       << "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double y = py(t);
    os << "<line x1=\"" << coord(kLeft - 5) << "\" y1=\"" << coord(y) << "\" x2=\"" << coord(kLeft) << "\" y2=\""
       << coord(y) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << coord(kLeft - 8) << "\" y=\"" << coord(y + 4) << "\" text-anchor=\"end\">" << fmt(t)
       << "</text>\n";
  }
  os << "<text x=\"" << coord(kLeft + pw / 2) << "\" y=\"" << coord(kHeight - 12)
     << "\" text-anchor=\"middle\">" << escape(options.x_label) << "</text>\n";
  os << "<text transform=\"translate(16 " << coord(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(options.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    std::string points;
    auto flush = [&]() {
      if (!points.empty()) {
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points
           << "\"/>\n";
      }
      points.clear();
    };
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!ax.usable(s.x[k]) || !ay.usable(s.y[k])) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += coord(px(s.x[k])) + "," + coord(py(s.y[k]));
    }
    flush();
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(i);
    const double lx = kLeft + pw + 12.0;
    os << "<line x1=\"" << coord(lx) << "\" y1=\"" << coord(ly) << "\" x2=\"" << coord(lx + 20) << "\" y2=\""
       << coord(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << coord(lx + 26) << "\" y=\"" << coord(ly + 4) << "\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace qsl::cli
