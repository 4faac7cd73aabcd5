#include "cli/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "qsl/errors.hpp"
#include "qsl/geometry.hpp"
#include "qsl/jc.hpp"
#include "qsl/lz.hpp"
#include "qsl/transport.hpp"

namespace qsl::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double num(const Json& p, const std::string& key) { return p.at(key).get<double>(); }

std::optional<double> opt_num(const Json& p, const std::string& key) {
  if (!p.contains(key) || p[key].is_null()) return std::nullopt;
  return p[key].get<double>();
}

std::vector<double> num_list(const Json& p, const std::string& key) {
  std::vector<double> out;
  if (p.contains(key) && p[key].is_array()) {
    for (const auto& v : p[key]) out.push_back(v.get<double>());
  }
  return out;
}

Json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

double as_number(const Json& j) { return j.is_number() ? j.get<double>() : kNaN; }

// ---------------------------------------------------------------- lz

ScenarioResult run_lz(const Json& p, bool detailed) {
  lz::LzParams base;
  base.v = num(p, "v");
  base.c = num(p, "c");
  const double chi0 = num(p, "chi0");
  const double phi0 = num(p, "phi0");
  const auto chitau = opt_num(p, "chitau");
  const std::string protocol = p.at("protocol").get<std::string>();

  lz::LzParams params = base;
  if (protocol == "optimal") {
    params = lz::optimal_protocol(base, chi0, *chitau, phi0, opt_num(p, "final_phi"));
  } else if (protocol == "constant") {
    params.protocol = lz::Constant{num(p, "gamma")};
  } else {
    params.protocol = lz::LinearRamp{num(p, "gamma"), num(p, "slope")};
  }
  lz::IntegrationOptions opts;
  opts.chi_target = chitau;
  double t_max = 10.0;
  if (auto t = opt_num(p, "tmax")) {
    t_max = *t;
  } else if (chitau) {
    t_max = 2.0 * std::abs(*chitau - chi0) / base.v + 1.0;
  }
  const double dt = num(p, "dt");

  const auto run = lz::integrate(params, chi0, phi0, t_max, dt, opts);
  const auto report = lz::evaluate_lz_bounds(run);
  const auto rows = lz::tabulate(run, params);
  double residual = 0.0;
  for (const auto& r : rows) residual = std::max(residual, r.residual);
  const double tau_formula = chitau ? lz::qsl_time_lz(base.v, chi0, *chitau) : kNaN;

  ScenarioResult out;
  out.result["tau_qsl"] = report.tau_qsl;
  out.result["tau_formula"] = finite_or_null(tau_formula);
  out.result["arrived"] = run.arrived;
  out.result["stop_time"] = run.stop_time;
  out.result["conserved_residual"] = residual;
  out.result["bound_holds"] = bounds::verify_bound(run.trajectory, report).holds;
  out.result["bounds"] = report.to_json();

  out.summary["tau_qsl"] = report.tau_qsl;
  out.summary["tau_formula"] = finite_or_null(tau_formula);
  out.summary["elapsed"] = report.elapsed;
  out.summary["arrived"] = run.arrived ? 1 : 0;
  out.summary["global_bound"] = report.global_bound;
  out.summary["best_local_bound"] = report.best_local_bound;
  out.summary["residual"] = residual;

  if (detailed) {
    CsvTable t{"traj.csv", {"t", "chi", "phi", "eta", "v_global", "v_chi", "v_phi", "residual"}, {}};
    Series chi{"chi", {}, {}};
    Series speed{"global speed", {}, {}};
    for (const auto& r : rows) {
      t.rows.push_back({r.t, r.chi, r.phi, r.eta, r.v_global, r.v_chi, r.v_phi, r.residual});
      chi.x.push_back(r.t);
      chi.y.push_back(r.chi);
      speed.x.push_back(r.t);
      speed.y.push_back(r.v_global);
    }
    out.tables.push_back(std::move(t));
    out.plots.push_back({"traj.svg", {chi, speed}, {"Bloch trajectory", "t", "chi, speed"}});
  }
  return out;
}

// ---------------------------------------------------------------- transport

transport::TransportSetup setup_from(const Json& p) {
  transport::TransportSetup s;
  s.mass = num(p, "mass");
  s.wavelength = num(p, "wavelength");
  s.U0 = num(p, "U0");
  s.distance = num(p, "d");
  s.duration = num(p, "duration");
  s.duration_scale = num(p, "duration_scale");
  s.n_grid = p.at("n_grid").get<std::size_t>();
  s.padding_wavelengths = num(p, "padding");
  s.dt = num(p, "dt");
  s.snapshot_every = p.at("snapshot_every").get<std::size_t>();
  return s;
}

ScenarioResult run_transport(const Json& p, bool detailed) {
  const auto setup = setup_from(p);
  const std::string mode = p.at("mode").get<std::string>();
  const double omega = transport::harmonic_frequency(setup.U0, setup.mass, setup.wavelength);
  ScenarioResult out;

  double dx_spread = 0.0;
  if (mode == "formula") {
    dx_spread = opt_num(p, "Dx").value_or(1.0 / std::sqrt(2.0 * setup.mass * omega));
    const double tau_conveyor =
        transport::qsl_conveyor(setup.mass, setup.wavelength, setup.U0, dx_spread, setup.distance);
    const double tau_local = transport::local_bound_transport(setup.mass, setup.wavelength, setup.U0);
    out.result["mode"] = mode;
    out.result["d"] = setup.distance;
    out.result["Dx"] = dx_spread;
    out.result["omega_HO"] = omega;
    out.result["tau_HO"] = 2.0 * std::acos(-1.0) / omega;
    out.result["tau_conveyor"] = tau_conveyor;
    out.result["tau_local"] = tau_local;
    out.result["tau_qsl"] = std::max(tau_conveyor, tau_local);
    out.result["experiment_prefactor"] = transport::experiment_prefactor(setup.wavelength, dx_spread);

    out.summary["d"] = setup.distance;
    out.summary["Dx"] = dx_spread;
    out.summary["elapsed"] = nullptr;
    out.summary["speed_direct_max"] = nullptr;
    out.summary["tau_global"] = nullptr;
    out.summary["tau_global_formula"] = nullptr;
    out.summary["tau_conveyor"] = tau_conveyor;
    out.summary["tau_local"] = tau_local;
    out.summary["tau_qsl"] = std::max(tau_conveyor, tau_local);
  } else {
    const auto run = transport::simulate_transport(setup);
    const auto& r = run.report;
    dx_spread = r.Dx;
    out.result["mode"] = mode;
    out.result["omega_HO"] = omega;
    out.result["report"] = r.to_json();
    out.result["tau_qsl"] = r.tau_qsl;
    out.result["warnings"] = run.propagation.warnings;

    out.summary["d"] = r.d;
    out.summary["Dx"] = r.Dx;
    out.summary["elapsed"] = r.elapsed;
    out.summary["speed_direct_max"] = r.speed_direct_max;
    out.summary["tau_global"] = r.tau_global;
    out.summary["tau_global_formula"] = r.tau_global_formula;
    out.summary["tau_conveyor"] = r.tau_conveyor;
    out.summary["tau_local"] = r.tau_local;
    out.summary["tau_qsl"] = r.tau_qsl;

    if (detailed) {
      CsvTable t{"snapshots.csv",
                 {"t", "x_control", "Dx", "Dp", "K2", "DU", "fs_speed_direct", "fs_speed_formula"},
                 {}};
      Series direct{"direct", {}, {}};
      Series formula{"sqrt(K2+DU^2)", {}, {}};
      for (const auto& s : run.propagation.snapshots) {
        t.rows.push_back({s.t, s.x_control, s.obs.Dx, s.obs.Dp, s.obs.K2, s.obs.DU, s.speed_direct,
                          s.speed_formula});
        if (s.t > 0.0) {
          direct.x.push_back(s.t);
          direct.y.push_back(s.speed_direct);
        }
        formula.x.push_back(s.t);
        formula.y.push_back(s.speed_formula);
      }
      out.tables.push_back(std::move(t));
      out.plots.push_back({"speed.svg", {direct, formula}, {"Fubini-Study speed", "t", "speed"}});
    }
  }

  const auto k2 = num_list(p, "K2");
  if (!k2.empty()) {
    // Given-<K^2> mode: the measured speed is replaced by sqrt(K2).
    Json given = Json::array();
    CsvTable t{"heatmap.csv", {"d", "K2", "tau"}, {}};
    for (double k : k2) {
      const double tau = transport::qsl_transport_global(setup.distance, dx_spread, std::sqrt(k));
      t.rows.push_back({setup.distance, k, tau});
      given.push_back(Json{{"K2", k}, {"tau", tau}});
    }
    out.result["given_K2"] = given;
    out.summary["given_K2"] = given;
    if (detailed) out.tables.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------- jc

ScenarioResult run_jc(const Json& p, bool detailed) {
  jc::JcParams params{num(p, "gamma0"), num(p, "lambda0"), num(p, "omega0")};
  const double t_max = opt_num(p, "tmax").value_or(20.0 / params.lambda0);
  const auto rep = jc::qsl_jc(params, t_max);

  ScenarioResult out;
  out.result = rep.to_json();
  out.summary["gamma0"] = params.gamma0;
  out.summary["lambda0"] = params.lambda0;
  out.summary["tau_qsl"] = rep.tau_qsl;
  out.summary["tau_weak_formula"] = rep.tau_weak_formula;
  out.summary["tau_strong_formula"] = finite_or_null(rep.tau_strong_formula);
  out.summary["N"] = rep.non_markovianity;

  if (detailed) {
    const auto rows = jc::tabulate(params, t_max, p.at("samples").get<std::size_t>());
    CsvTable t{"jc.csv", {"t", "gamma", "rho11", "sigma", "z"}, {}};
    Series rho{"rho11", {}, {}};
    Series sigma{"sigma", {}, {}};
    for (const auto& r : rows) {
      t.rows.push_back({r.t, r.gamma, r.rho11, r.sigma, r.z});
      rho.x.push_back(r.t);
      rho.y.push_back(r.rho11);
      sigma.x.push_back(r.t);
      sigma.y.push_back(r.sigma);
    }
    out.tables.push_back(std::move(t));
    out.plots.push_back({"jc.svg", {rho, sigma}, {"Excited population and backflow rate", "t", "value"}});
  }
  return out;
}

// ---------------------------------------------------------------- metric

ScenarioResult run_metric(const Json& p) {
  const std::string name = p.at("chart").get<std::string>();
  const geometry::ParameterChart chart =
      name == "bloch" ? geometry::ParameterChart{geometry::bloch_chart()}
      : name == "diagonal" ? geometry::ParameterChart{geometry::diagonal_qubit_chart()}
                           : geometry::ParameterChart{geometry::bloch_z_chart()};
  const auto point = num_list(p, "point");
  const auto g = geometry::metric_tensor(chart, point);

  ScenarioResult out;
  out.result["chart"] = name;
  out.result["point"] = point;
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < g.g.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < g.g.cols(); ++j) row.push_back(g.g(i, j));
    rows.push_back(row);
  }
  out.result["metric"] = rows;
  out.result["min_eigenvalue"] = g.min_eigenvalue();
  out.result["symmetric"] = g.is_symmetric();
  out.result["psd"] = g.is_psd();
  const auto rates = num_list(p, "rates");
  if (!rates.empty()) out.result["global_speed"] = geometry::global_speed(chart, point, rates);
  out.summary["min_eigenvalue"] = g.min_eigenvalue();
  return out;
}

// ---------------------------------------------------------------- output

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> summary_columns(Scenario scenario, const RunConfig& config, const Json& summary) {
  std::vector<std::string> cols;
  if (scenario != Scenario::Jc) {
    for (const auto& s : config.sweeps) {
      if (!summary.contains(s.parameter)) cols.push_back(s.parameter);
    }
  }
  for (const auto& [key, value] : summary.items()) {
    if (value.is_number() || value.is_null()) cols.push_back(key);
  }
  return cols;
}

}  // namespace

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += "\r\n";
  char buf[40];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (std::isfinite(row[i])) {
        std::snprintf(buf, sizeof buf, "%.17g", row[i]);
        out += buf;
      } else if (std::isinf(row[i])) {
        out += row[i] > 0 ? "inf" : "-inf";
      }
    }
    out += "\r\n";
  }
  return out;
}

ScenarioResult run_scenario(Scenario scenario, const Json& params, bool detailed) {
  switch (scenario) {
    case Scenario::Lz: return run_lz(params, detailed);
    case Scenario::Transport: return run_transport(params, detailed);
    case Scenario::Jc: return run_jc(params, detailed);
    case Scenario::Metric: return run_metric(params);
  }
  throw ContractViolation("unknown scenario");
}

std::vector<Json> expand_sweep(const RunConfig& config) {
  std::vector<Json> points{config.params};
  for (const auto& spec : config.sweeps) {
    const auto values = spec.values();
    const ParamSpec* ps = find_param(config.scenario, spec.parameter);
    std::vector<Json> next;
    next.reserve(points.size() * values.size());
    for (const auto& base : points) {
      for (double v : values) {
        Json p = base;
        if (ps && ps->kind == ParamKind::Integer) {
          p[spec.parameter] = static_cast<std::uint64_t>(std::llround(v));
        } else {
          p[spec.parameter] = v;
        }
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

std::vector<ScenarioResult> run_sweep_points(Scenario scenario, const std::vector<Json>& points,
                                             std::size_t threads) {
  const std::size_t n = points.size();
  std::vector<std::optional<ScenarioResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        results[i] = run_scenario(scenario, points[i], false);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t count = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  count = std::min(count, std::max<std::size_t>(1, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  // Lowest failing index wins so the reported error does not depend on timing.
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const qsl::Error& e) {
      throw qsl::Error("sweep point " + std::to_string(i) + ": " + e.what());
    }
  }
  std::vector<ScenarioResult> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto diags = validate(config);
  if (!diags.empty()) {
    for (const auto& d : diags) err << "config error: " << d.to_string() << '\n';
    return 2;
  }
  const std::string scenario = scenario_name(config.scenario);
  namespace fs = std::filesystem;
  const fs::path dir(config.out_dir);
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    err << "config error: out: " << e.what() << '\n';
    return 2;
  }

  try {
    if (config.sweeps.empty()) {
      const auto result = run_scenario(config.scenario, config.params, true);
      if (config.emit.csv) {
        for (const auto& t : result.tables) write_file(dir / t.file, t.to_string());
      }
      if (config.emit.svg) {
        for (const auto& p : result.plots) write_file(dir / p.file, line_chart(p.series, p.options));
      }
      Json report;
      report["config"] = config.to_json();
      report["scenario"] = scenario;
      report["result"] = result.result;
      if (config.emit.json) write_file(dir / "report.json", dump(report));
      if (result.result.contains("tau_qsl")) {
        out << scenario << ": tau_qsl = " << result.result["tau_qsl"].dump() << '\n';
      }
      return 0;
    }

    const auto points = expand_sweep(config);
    const auto results = run_sweep_points(config.scenario, points, config.threads);
    const auto columns = summary_columns(config.scenario, config, results.front().summary);
    CsvTable table{"sweep.csv", columns, {}};
    CsvTable heatmap{"heatmap.csv", {"d", "K2", "tau"}, {}};
    Json rows = Json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& s = results[i].summary;
      std::vector<double> row;
      Json jrow;
      for (const auto& c : columns) {
        const double v = s.contains(c) ? as_number(s[c]) : as_number(points[i][c]);
        row.push_back(v);
        jrow[c] = finite_or_null(v);
      }
      table.rows.push_back(std::move(row));
      rows.push_back(std::move(jrow));
      if (s.contains("given_K2")) {
        for (const auto& g : s["given_K2"]) {
          heatmap.rows.push_back({as_number(s["d"]), g["K2"].get<double>(), g["tau"].get<double>()});
        }
      }
    }
    if (config.emit.csv) {
      write_file(dir / table.file, table.to_string());
      if (!heatmap.rows.empty()) write_file(dir / heatmap.file, heatmap.to_string());
    }
    if (config.emit.svg && std::find(columns.begin(), columns.end(), "tau_qsl") != columns.end()) {
      // tau_qsl against the fastest-varying swept parameter, one line per
      // combination of the others.
      const auto& inner = config.sweeps.back();
      const std::size_t per_line = inner.count;
      const auto col = static_cast<std::size_t>(std::find(columns.begin(), columns.end(), "tau_qsl") - columns.begin());
      std::vector<Series> series;
      for (std::size_t start = 0; start < results.size(); start += per_line) {
        Series s;
        for (std::size_t o = 0; o + 1 < config.sweeps.size(); ++o) {
          const auto& key = config.sweeps[o].parameter;
          char buf[64];
          std::snprintf(buf, sizeof buf, "%s%s=%.4g", o ? " " : "", key.c_str(), as_number(points[start][key]));
          s.name += buf;
        }
        if (s.name.empty()) s.name = "tau_qsl";
        for (std::size_t k = start; k < std::min(results.size(), start + per_line); ++k) {
          s.x.push_back(as_number(points[k][inner.parameter]));
          s.y.push_back(table.rows[k][col]);
        }
        series.push_back(std::move(s));
      }
      write_file(dir / "sweep.svg",
                 line_chart(series, {"QSL time sweep (" + scenario + ")", inner.parameter, "tau_qsl", inner.log,
                                     inner.log}));
    }
    Json report;
    report["config"] = config.to_json();
    report["scenario"] = scenario;
    report["rows"] = rows;
    if (config.emit.json) write_file(dir / "sweep.json", dump(report));
    out << scenario << ": " << results.size() << " sweep points written to " << config.out_dir << '\n';
    return 0;
  } catch (const qsl::Error& e) {
    err << "numerical error [" << scenario << "]: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace qsl::cli
