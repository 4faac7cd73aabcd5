// qsl: quantum speed limit calculator.
//
//   qsl lz        --v 1 --c 0.5 --chi0 0.7854 --chitau 2.3562 --protocol optimal
//   qsl jc        --gamma0 0.01 --lambda0 1 --tmax 500
//   qsl transport --sweep d=40:240:6:linear
//   qsl metric    --chart bloch --point 1.0,0.3
//   qsl sweep     --config sweep.json
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical domain error.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli/config.hpp"
#include "cli/run.hpp"

namespace {

using namespace qsl::cli;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string emit;
  std::vector<std::string> sweeps;
  std::vector<std::string> sets;
  std::optional<std::size_t> threads;
  std::string scenario;  // sweep subcommand only
  std::map<std::string, std::string> params;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config (or a previous report.json)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--emit", f.emit, "comma list of csv,json,svg or none");
  cmd->add_option("--sweep", f.sweeps, "name=min:max:count[:linear|log]; repeat for a grid");
  cmd->add_option("--set", f.sets, "key=value parameter override");
  cmd->add_option("--threads", f.threads, "sweep worker threads (0: all cores)");
}

int execute(std::optional<Scenario> fixed, CommonFlags& f) {
  std::vector<Diagnostic> diags;
  RunConfig config;
  if (fixed) config.scenario = *fixed;
  if (!f.scenario.empty()) {
    if (auto s = parse_scenario(f.scenario)) {
      config.scenario = *s;
      fixed = s;
    } else {
      diags.push_back({"scenario", "must be one of lz, transport, jc, metric"});
    }
  }
  if (!f.config_path.empty()) {
    if (auto doc = load_json_file(f.config_path, diags)) apply_document(config, *doc, fixed.has_value(), diags);
  } else if (!fixed) {
    diags.push_back({"scenario", "sweep needs --scenario or a --config naming one"});
  }
  for (const auto& [key, value] : f.params) set_param_text(config, key, value, diags);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      diags.push_back({"set", "expected key=value, got '" + s + "'"});
      continue;
    }
    set_param_text(config, s.substr(0, eq), s.substr(eq + 1), diags);
  }
  if (!f.sweeps.empty()) {
    config.sweeps.clear();
    for (const auto& s : f.sweeps) {
      if (auto spec = parse_sweep(s, diags)) config.sweeps.push_back(*spec);
    }
  }
  if (!f.out_dir.empty()) config.out_dir = f.out_dir;
  if (!f.emit.empty()) {
    if (auto e = parse_emit(f.emit, diags)) config.emit = *e;
  }
  if (f.threads) config.threads = *f.threads;
  if (!f.scenario.empty() || (!fixed && !f.config_path.empty())) {
    if (config.sweeps.empty()) diags.push_back({"sweep", "the sweep command needs at least one --sweep"});
  }
  if (!diags.empty()) {
    for (const auto& d : diags) std::cerr << "config error: " << d.to_string() << '\n';
    return 2;
  }
  fill_defaults(config);
  return run(config, std::cout, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum speed limit calculator"};
  app.require_subcommand(1);

  struct Entry {
    CLI::App* cmd;
    CommonFlags flags;
    std::optional<Scenario> scenario;
  };
  std::vector<Entry> entries;
  entries.reserve(5);
  const std::pair<const char*, const char*> scenarios[] = {
      {"lz", "nonlinear Landau-Zener brachistochrone"},
      {"transport", "wavepacket transport in a moving lattice"},
      {"jc", "damped Jaynes-Cummings qubit"},
      {"metric", "metric tensor of a chart at a point"},
  };
  for (const auto& [name, help] : scenarios) {
    entries.push_back({app.add_subcommand(name, help), {}, parse_scenario(name)});
  }
  entries.push_back({app.add_subcommand("sweep", "parameter sweep of any scenario"), {}, std::nullopt});

  for (auto& e : entries) {
    add_common(e.cmd, e.flags);
    if (e.scenario) {
      for (const auto& spec : param_specs(*e.scenario)) {
        const std::string key = spec.key;
        auto* flags = &e.flags;
        e.cmd->add_option_function<std::string>(
            "--" + key, [flags, key](const std::string& v) { flags->params[key] = v; }, spec.help);
      }
    } else {
      e.cmd->add_option("--scenario", e.flags.scenario, "lz | transport | jc | metric");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (auto& e : entries) {
    if (e.cmd->parsed()) return execute(e.scenario, e.flags);
  }
  return 2;
}
