#include "cli/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace qsl::cli {

namespace {

constexpr double kPi = std::numbers::pi;

ParamSpec number(std::string key, Json def, std::string help, bool required = false) {
  return ParamSpec{std::move(key), ParamKind::Number, required, std::move(def), std::move(help)};
}
ParamSpec integer(std::string key, Json def, std::string help) {
  return ParamSpec{std::move(key), ParamKind::Integer, false, std::move(def), std::move(help)};
}
ParamSpec text(std::string key, Json def, std::string help) {
  return ParamSpec{std::move(key), ParamKind::String, false, std::move(def), std::move(help)};
}
ParamSpec list(std::string key, std::string help, bool required = false) {
  return ParamSpec{std::move(key), ParamKind::NumberList, required, nullptr, std::move(help)};
}

const std::vector<ParamSpec>& lz_specs() {
  static const std::vector<ParamSpec> specs{
      number("v", nullptr, "coupling strength (> 0)", true),
      number("c", 0.0, "nonlinear interaction"),
      number("chi0", nullptr, "initial polar angle in [0, pi]", true),
      number("phi0", 0.0, "initial azimuth"),
      number("chitau", nullptr, "target polar angle in [0, pi]"),
      text("protocol", "optimal", "optimal | constant | ramp"),
      number("gamma", 0.0, "bias value (constant) or start value (ramp)"),
      number("slope", 0.0, "bias slope for the ramp protocol"),
      number("final_phi", nullptr, "azimuth after the end kick (optimal protocol)"),
      number("tmax", nullptr, "integration horizon; default 2|chitau - chi0|/v + 1, or 10"),
      number("dt", 1e-4, "output sampling step"),
  };
  return specs;
}

const std::vector<ParamSpec>& transport_specs() {
  static const std::vector<ParamSpec> specs{
      text("mode", "simulate", "simulate | formula"),
      number("mass", 1.0, "particle mass"),
      number("wavelength", 8.0, "lattice wavelength"),
      number("U0", 32.0, "trap depth (> 0)"),
      number("d", 40.0, "transport distance (> 0)"),
      number("Dx", nullptr, "position spread for formula mode; default harmonic ground state"),
      number("duration", 0.0, "schedule length; 0 selects T0 tau_HO sqrt(d / wavelength)"),
      number("duration_scale", 6.8, "T0 in units of tau_HO"),
      integer("n_grid", 4096, "grid points (power of two)"),
      number("padding", 16.0, "grid padding in wavelengths"),
      number("dt", 0.0, "time step; 0 selects 1e-3 tau_HO"),
      integer("snapshot_every", 10, "steps between CSV snapshots"),
      list("K2", "given <K^2> values for the (d, K2, tau) table"),
  };
  return specs;
}

const std::vector<ParamSpec>& jc_specs() {
  static const std::vector<ParamSpec> specs{
      number("gamma0", nullptr, "system-reservoir coupling (> 0)", true),
      number("lambda0", 1.0, "reservoir spectral width (> 0)"),
      number("omega0", 0.0, "transition frequency (spectral density only)"),
      number("tmax", nullptr, "horizon for the time series and N; default 20 / lambda0"),
      integer("samples", 2001, "time-series rows"),
  };
  return specs;
}

const std::vector<ParamSpec>& metric_specs() {
  static const std::vector<ParamSpec> specs{
      text("chart", "bloch", "bloch | diagonal | bloch_z"),
      list("point", "chart coordinates", true),
      list("rates", "d lambda / dt for the global speed"),
  };
  return specs;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (errno != 0 || end != t.c_str() + t.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool is_number(const Json& j) { return j.is_number() && std::isfinite(j.get<double>()); }

int line_of_offset(const std::string& textual, std::size_t offset) {
  const std::size_t end = std::min(offset, textual.size());
  return 1 + static_cast<int>(std::count(textual.begin(), textual.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

bool is_swept(const RunConfig& c, const std::string& key) {
  return std::any_of(c.sweeps.begin(), c.sweeps.end(), [&](const SweepSpec& s) { return s.parameter == key; });
}

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Lz: return "lz";
    case Scenario::Transport: return "transport";
    case Scenario::Jc: return "jc";
    case Scenario::Metric: return "metric";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(const std::string& name) {
  for (auto s : {Scenario::Lz, Scenario::Transport, Scenario::Jc, Scenario::Metric}) {
    if (scenario_name(s) == name) return s;
  }
  return std::nullopt;
}

const std::vector<ParamSpec>& param_specs(Scenario s) {
  switch (s) {
    case Scenario::Lz: return lz_specs();
    case Scenario::Transport: return transport_specs();
    case Scenario::Jc: return jc_specs();
    case Scenario::Metric: return metric_specs();
  }
  return lz_specs();
}

const ParamSpec* find_param(Scenario s, const std::string& key) {
  const auto& specs = param_specs(s);
  const auto it = std::find_if(specs.begin(), specs.end(), [&](const ParamSpec& p) { return p.key == key; });
  return it == specs.end() ? nullptr : &*it;
}

std::vector<double> SweepSpec::values() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = log ? min * std::pow(max / min, u) : min + u * (max - min);
  }
  if (count > 1) out.back() = max;
  return out;
}

std::string SweepSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << parameter << '=' << min << ':' << max << ':' << count << ':' << (log ? "log" : "linear");
  return os.str();
}

std::string Diagnostic::to_string() const {
  std::string out = field.empty() ? "config" : field;
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  return out + ": " + message;
}

std::optional<SweepSpec> parse_sweep(const std::string& textual, std::vector<Diagnostic>& diags) {
  const auto eq = textual.find('=');
  if (eq == std::string::npos || eq == 0) {
    diags.push_back({"sweep", "expected name=min:max:count[:linear|log], got '" + textual + "'"});
    return std::nullopt;
  }
  SweepSpec spec;
  spec.parameter = trim(textual.substr(0, eq));
  const auto parts = split(textual.substr(eq + 1), ':');
  if (parts.size() < 3 || parts.size() > 4) {
    diags.push_back({"sweep." + spec.parameter, "expected min:max:count[:linear|log]"});
    return std::nullopt;
  }
  const auto lo = parse_double(parts[0]);
  const auto hi = parse_double(parts[1]);
  const auto n = parse_double(parts[2]);
  if (!lo || !hi || !n || *n < 1.0 || std::floor(*n) != *n) {
    diags.push_back({"sweep." + spec.parameter, "min and max must be numbers and count a positive integer"});
    return std::nullopt;
  }
  spec.min = *lo;
  spec.max = *hi;
  spec.count = static_cast<std::size_t>(*n);
  if (parts.size() == 4) {
    const std::string scale = trim(parts[3]);
    if (scale == "log") {
      spec.log = true;
    } else if (scale != "linear") {
      diags.push_back({"sweep." + spec.parameter, "scale must be 'linear' or 'log'"});
      return std::nullopt;
    }
  }
  if (spec.log && !(spec.min > 0.0 && spec.max > 0.0)) {
    diags.push_back({"sweep." + spec.parameter, "log sweep needs positive bounds"});
    return std::nullopt;
  }
  return spec;
}

std::optional<EmitFlags> parse_emit(const std::string& textual, std::vector<Diagnostic>& diags) {
  EmitFlags flags{false, false, false};
  if (trim(textual) == "none") return flags;
  for (const auto& raw : split(textual, ',')) {
    const std::string item = trim(raw);
    if (item == "csv") {
      flags.csv = true;
    } else if (item == "json") {
      flags.json = true;
    } else if (item == "svg") {
      flags.svg = true;
    } else {
      diags.push_back({"emit", "unknown format '" + item + "' (expected csv, json, svg or none)"});
      return std::nullopt;
    }
  }
  return flags;
}

std::optional<Json> load_json_file(const std::string& path, std::vector<Diagnostic>& diags) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    diags.push_back({"config", "cannot open '" + path + "'"});
    return std::nullopt;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();
  try {
    return Json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    diags.push_back({"config", std::string("invalid JSON: ") + e.what(), line_of_offset(content, e.byte)});
    return std::nullopt;
  }
}

void apply_document(RunConfig& config, const Json& doc_in, bool scenario_fixed,
                    std::vector<Diagnostic>& diags) {
  if (!doc_in.is_object()) {
    diags.push_back({"config", "top level must be a JSON object"});
    return;
  }
  const Json& doc = doc_in.contains("config") && doc_in["config"].is_object() ? doc_in["config"] : doc_in;

  if (doc.contains("scenario")) {
    const auto& s = doc["scenario"];
    const auto parsed = s.is_string() ? parse_scenario(s.get<std::string>()) : std::nullopt;
    if (!parsed) {
      diags.push_back({"scenario", "must be one of lz, transport, jc, metric"});
      return;
    }
    if (scenario_fixed && *parsed != config.scenario) {
      diags.push_back({"scenario", "file describes '" + scenario_name(*parsed) + "' but the command is '" +
                                       scenario_name(config.scenario) + "'"});
      return;
    }
    config.scenario = *parsed;
  }
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) {
      diags.push_back({"params", "must be an object"});
    } else {
      for (const auto& [key, value] : doc["params"].items()) config.params[key] = value;
    }
  }
  if (doc.contains("out")) {
    if (doc["out"].is_string()) {
      config.out_dir = doc["out"].get<std::string>();
    } else {
      diags.push_back({"out", "must be a string"});
    }
  }
  if (doc.contains("emit")) {
    const auto& e = doc["emit"];
    if (e.is_object()) {
      for (const auto& [key, value] : e.items()) {
        if (!value.is_boolean()) {
          diags.push_back({"emit." + key, "must be a boolean"});
          continue;
        }
        if (key == "csv") {
          config.emit.csv = value.get<bool>();
        } else if (key == "json") {
          config.emit.json = value.get<bool>();
        } else if (key == "svg") {
          config.emit.svg = value.get<bool>();
        } else {
          diags.push_back({"emit." + key, "unknown format"});
        }
      }
    } else if (e.is_string()) {
      if (auto f = parse_emit(e.get<std::string>(), diags)) config.emit = *f;
    } else {
      diags.push_back({"emit", "must be an object or a comma list"});
    }
  }
  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    auto add = [&](const Json& item) {
      if (item.is_string()) {
        if (auto spec = parse_sweep(item.get<std::string>(), diags)) config.sweeps.push_back(*spec);
      } else {
        diags.push_back({"sweep", "entries must be strings name=min:max:count[:linear|log]"});
      }
    };
    if (s.is_array()) {
      config.sweeps.clear();
      for (const auto& item : s) add(item);
    } else if (!s.is_null()) {
      config.sweeps.clear();
      add(s);
    }
  }
  if (doc.contains("threads")) {
    if (doc["threads"].is_number_unsigned()) {
      config.threads = doc["threads"].get<std::size_t>();
    } else {
      diags.push_back({"threads", "must be a non-negative integer"});
    }
  }
}

void set_param_text(RunConfig& config, const std::string& key, const std::string& value,
                    std::vector<Diagnostic>& diags) {
  const ParamSpec* spec = find_param(config.scenario, key);
  if (!spec) {
    diags.push_back({key, "unknown parameter for scenario " + scenario_name(config.scenario)});
    return;
  }
  switch (spec->kind) {
    case ParamKind::String: config.params[key] = value; return;
    case ParamKind::Number:
    case ParamKind::Integer: {
      const auto v = parse_double(value);
      if (!v) {
        diags.push_back({key, "expected a number, got '" + value + "'"});
        return;
      }
      if (spec->kind == ParamKind::Integer) {
        if (std::floor(*v) != *v || *v < 0.0) {
          diags.push_back({key, "expected a non-negative integer, got '" + value + "'"});
          return;
        }
        config.params[key] = static_cast<std::uint64_t>(*v);
      } else {
        config.params[key] = *v;
      }
      return;
    }
    case ParamKind::NumberList: {
      Json arr = Json::array();
      for (const auto& item : split(value, ',')) {
        const auto v = parse_double(item);
        if (!v) {
          diags.push_back({key, "expected a comma-separated number list, got '" + value + "'"});
          return;
        }
        arr.push_back(*v);
      }
      config.params[key] = arr;
      return;
    }
  }
}

void fill_defaults(RunConfig& config) {
  for (const auto& spec : param_specs(config.scenario)) {
    if (!config.params.contains(spec.key) && !spec.default_value.is_null()) {
      config.params[spec.key] = spec.default_value;
    }
  }
}

std::vector<Diagnostic> validate(const RunConfig& config) {
  std::vector<Diagnostic> diags;
  const auto& p = config.params;
  if (!p.is_object()) {
    diags.push_back({"params", "must be an object"});
    return diags;
  }

  for (const auto& [key, value] : p.items()) {
    const ParamSpec* spec = find_param(config.scenario, key);
    if (!spec) {
      diags.push_back({key, "unknown parameter for scenario " + scenario_name(config.scenario)});
      continue;
    }
    if (value.is_null()) continue;
    switch (spec->kind) {
      case ParamKind::Number:
        if (!is_number(value)) diags.push_back({key, "must be a finite number"});
        break;
      case ParamKind::Integer:
        if (!value.is_number_unsigned() &&
            !(is_number(value) && value.get<double>() >= 0.0 && std::floor(value.get<double>()) == value.get<double>())) {
          diags.push_back({key, "must be a non-negative integer"});
        }
        break;
      case ParamKind::String:
        if (!value.is_string()) diags.push_back({key, "must be a string"});
        break;
      case ParamKind::NumberList:
        if (!value.is_array() || value.empty() || !std::all_of(value.begin(), value.end(), is_number)) {
          diags.push_back({key, "must be a non-empty list of numbers"});
        }
        break;
    }
  }
  for (const auto& spec : param_specs(config.scenario)) {
    const bool present = p.contains(spec.key) && !p[spec.key].is_null();
    if (spec.required && !present && !is_swept(config, spec.key)) {
      diags.push_back({spec.key, "required parameter is missing"});
    }
  }
  for (const auto& s : config.sweeps) {
    const ParamSpec* spec = find_param(config.scenario, s.parameter);
    if (!spec) {
      diags.push_back({"sweep." + s.parameter, "not a parameter of scenario " + scenario_name(config.scenario)});
    } else if (spec->kind != ParamKind::Number && spec->kind != ParamKind::Integer) {
      diags.push_back({"sweep." + s.parameter, "only numeric parameters can be swept"});
    }
  }
  if (!diags.empty()) return diags;

  // Range checks on the effective values: a swept parameter is checked at
  // both ends of its range.
  auto values_of = [&](const std::string& key) -> std::vector<double> {
    for (const auto& s : config.sweeps) {
      if (s.parameter == key) return {s.min, s.max};
    }
    if (p.contains(key) && p[key].is_number()) return {p[key].get<double>()};
    return {};
  };
  auto positive = [&](const std::string& key) {
    for (double v : values_of(key)) {
      if (!(v > 0.0)) {
        diags.push_back({key, "must be positive (got " + std::to_string(v) + ")"});
        return;
      }
    }
  };
  auto non_negative = [&](const std::string& key) {
    for (double v : values_of(key)) {
      if (!(v >= 0.0)) {
        diags.push_back({key, "must be non-negative (got " + std::to_string(v) + ")"});
        return;
      }
    }
  };
  auto in_range = [&](const std::string& key, double lo, double hi) {
    for (double v : values_of(key)) {
      if (v < lo || v > hi) {
        diags.push_back({key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"});
        return;
      }
    }
  };
  auto one_of = [&](const std::string& key, std::initializer_list<const char*> allowed) {
    if (!p.contains(key) || !p[key].is_string()) return;
    const auto v = p[key].get<std::string>();
    for (const char* a : allowed) {
      if (v == a) return;
    }
    std::string msg = "must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    diags.push_back({key, msg});
  };

  switch (config.scenario) {
    case Scenario::Lz: {
      positive("v");
      in_range("chi0", 0.0, kPi);
      in_range("chitau", 0.0, kPi);
      positive("tmax");
      positive("dt");
      one_of("protocol", {"optimal", "constant", "ramp"});
      const std::string protocol = p.contains("protocol") ? p["protocol"].get<std::string>() : "optimal";
      const bool has_target = (p.contains("chitau") && !p["chitau"].is_null()) || is_swept(config, "chitau");
      if (protocol == "optimal" && !has_target) {
        diags.push_back({"chitau", "required by the optimal protocol"});
      }
      if (protocol == "optimal" && has_target && !is_swept(config, "chitau") && !is_swept(config, "chi0") &&
          p.contains("chi0") && p["chi0"] == p["chitau"]) {
        diags.push_back({"chitau", "must differ from chi0 for the optimal protocol"});
      }
      break;
    }
    case Scenario::Transport: {
      one_of("mode", {"simulate", "formula"});
      positive("mass");
      positive("wavelength");
      positive("U0");
      positive("d");
      positive("Dx");
      non_negative("duration");
      positive("duration_scale");
      non_negative("dt");
      positive("snapshot_every");
      for (double v : values_of("padding")) {
        if (v < 2.0) diags.push_back({"padding", "must be at least 2 wavelengths"});
      }
      for (double v : values_of("n_grid")) {
        const auto n = static_cast<std::uint64_t>(v);
        if (n < 16 || (n & (n - 1)) != 0) diags.push_back({"n_grid", "must be a power of two >= 16"});
      }
      if (p.contains("K2")) {
        for (const auto& k : p["K2"]) {
          if (!(k.get<double>() > 0.0)) {
            diags.push_back({"K2", "values must be positive"});
            break;
          }
        }
      }
      break;
    }
    case Scenario::Jc: {
      positive("gamma0");
      positive("lambda0");
      positive("tmax");
      for (double v : values_of("samples")) {
        if (v < 2.0) diags.push_back({"samples", "must be at least 2"});
      }
      break;
    }
    case Scenario::Metric: {
      one_of("chart", {"bloch", "diagonal", "bloch_z"});
      const std::string chart = p.contains("chart") ? p["chart"].get<std::string>() : "bloch";
      const std::size_t dim = chart == "bloch" ? 2 : 1;
      if (p.contains("point") && p["point"].size() != dim) {
        diags.push_back({"point", "chart '" + chart + "' takes " + std::to_string(dim) + " coordinate(s)"});
      }
      if (p.contains("rates") && p["rates"].size() != dim) {
        diags.push_back({"rates", "must match the point dimension"});
      }
      if (!config.sweeps.empty()) diags.push_back({"sweep", "the metric scenario does not support sweeps"});
      break;
    }
  }
  return diags;
}

Json RunConfig::to_json() const {
  Json j;
  j["scenario"] = scenario_name(scenario);
  Json ordered = Json::object();
  for (const auto& spec : param_specs(scenario)) {
    if (params.contains(spec.key)) ordered[spec.key] = params[spec.key];
  }
  j["params"] = ordered;
  j["out"] = out_dir;
  j["emit"] = Json{{"csv", emit.csv}, {"json", emit.json}, {"svg", emit.svg}};
  Json sw = Json::array();
  for (const auto& s : sweeps) sw.push_back(s.to_string());
  j["sweep"] = sw;
  j["threads"] = threads;
  return j;
}

}  // namespace qsl::cli
