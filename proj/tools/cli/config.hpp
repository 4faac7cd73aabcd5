#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qsl::cli {

using Json = nlohmann::ordered_json;

enum class Scenario { Lz, Transport, Jc, Metric };

std::string scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(const std::string& name);

enum class ParamKind { Number, Integer, String, NumberList };

struct ParamSpec {
  std::string key;
  ParamKind kind = ParamKind::Number;
  bool required = false;
  Json default_value;  // null: no default
  std::string help;
};

/// Parameter schema of a scenario block, in declaration order.
const std::vector<ParamSpec>& param_specs(Scenario s);
const ParamSpec* find_param(Scenario s, const std::string& key);

struct SweepSpec {
  std::string parameter;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;
  bool log = false;

  std::vector<double> values() const;
  std::string to_string() const;
};

struct EmitFlags {
  bool csv = true;
  bool json = true;
  bool svg = true;
};

struct RunConfig {
  Scenario scenario = Scenario::Lz;
  Json params = Json::object();
  std::string out_dir = ".";
  EmitFlags emit;
  // Several specs form a Cartesian grid; the first spec varies slowest.
  std::vector<SweepSpec> sweeps;
  std::size_t threads = 0;  // 0: hardware concurrency

  /// Fully resolved form: defaults filled in, stable key order.
  Json to_json() const;
};

struct Diagnostic {
  std::string field;
  std::string message;
  int line = 0;  // 1-based source line for file errors, 0 otherwise

  std::string to_string() const;
};

/// Parses "name=min:max:count[:linear|log]".
std::optional<SweepSpec> parse_sweep(const std::string& text, std::vector<Diagnostic>& diags);

/// Parses "csv,json,svg" (any subset; "none" disables all).
std::optional<EmitFlags> parse_emit(const std::string& text, std::vector<Diagnostic>& diags);

/// Reads a JSON file. Parse errors become diagnostics carrying the line.
std::optional<Json> load_json_file(const std::string& path, std::vector<Diagnostic>& diags);

/// Merges a config document into `config`. A report.json is accepted too: its
/// embedded "config" object is used. The document's scenario is adopted unless
/// `scenario_fixed` is set, in which case a mismatch is diagnosed.
void apply_document(RunConfig& config, const Json& doc, bool scenario_fixed,
                    std::vector<Diagnostic>& diags);

/// Sets one scenario parameter from its text form, converting by schema.
void set_param_text(RunConfig& config, const std::string& key, const std::string& text,
                    std::vector<Diagnostic>& diags);

/// Fills schema defaults for absent keys.
void fill_defaults(RunConfig& config);

/// Schema and range checks. Empty iff run() would not exit with status 2.
std::vector<Diagnostic> validate(const RunConfig& config);

}  // namespace qsl::cli
