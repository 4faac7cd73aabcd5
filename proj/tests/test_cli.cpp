#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "cli/run.hpp"
#include "oracles.hpp"

using namespace qsl::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qsl_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_qsl(const std::string& args) {
  const std::string cmd = std::string(QSL_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(slurp(p));
  std::string line;
  while (std::getline(ss, line)) {
    REQUIRE(!line.empty());
    REQUIRE(line.back() == '\r');
    line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

RunConfig config_for(Scenario s, Json params) {
  RunConfig c;
  c.scenario = s;
  c.params = std::move(params);
  fill_defaults(c);
  return c;
}

bool has_field(const std::vector<Diagnostic>& d, const std::string& field) {
  for (const auto& x : d) {
    if (x.field == field) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("validation diagnostics") {
  CHECK(has_field(validate(config_for(Scenario::Lz, {{"chi0", 1.0}, {"chitau", 2.0}})), "v"));
  CHECK(has_field(validate(config_for(Scenario::Transport, {{"U0", -1.0}})), "U0"));
  CHECK(has_field(validate(config_for(Scenario::Transport, {{"n_grid", 1000}})), "n_grid"));
  CHECK(has_field(validate(config_for(Scenario::Jc, {{"gamma0", 0.0}})), "gamma0"));
  CHECK(validate(config_for(Scenario::Jc, {{"gamma0", 0.3}})).empty());
  CHECK(validate(config_for(Scenario::Lz, {{"v", 1.0}, {"chi0", 0.5}, {"chitau", 2.0}})).empty());
  auto unknown = config_for(Scenario::Jc, {{"gamma0", 0.3}, {"gamma", 1.0}});
  CHECK_FALSE(validate(unknown).empty());
}

TEST_CASE("sweep and emit parsing") {
  std::vector<Diagnostic> d;
  const auto s = parse_sweep("d=8:128:5:log", d);
  REQUIRE(s);
  CHECK(d.empty());
  const auto v = s->values();
  REQUIRE(v.size() == 5);
  CHECK(v.front() == 8.0);
  CHECK(v[2] == doctest::Approx(32.0).epsilon(1e-15));
  CHECK(v.back() == 128.0);
  CHECK(parse_sweep(s->to_string(), d)->values() == v);
  CHECK_FALSE(parse_sweep("d=1:2", d));
  CHECK_FALSE(parse_sweep("d=1:2:0", d));
  CHECK_FALSE(d.empty());
  d.clear();
  const auto e = parse_emit("csv,svg", d);
  REQUIRE(e);
  CHECK(e->csv);
  CHECK(e->svg);
  CHECK_FALSE(e->json);
  CHECK_FALSE(parse_emit("pdf", d));
}

TEST_CASE("csv formatting") {
  CsvTable t{"x.csv", {"a", "b"}, {{0.1, std::nan("")}, {1e300, -2.0}}};
  CHECK(t.to_string() == "a,b\r\n0.10000000000000001,\r\n1.0000000000000001e+300,-2\r\n");
}

TEST_CASE("sweep grid expansion: first spec varies slowest") {
  auto c = config_for(Scenario::Jc, {{"gamma0", 1.0}});
  std::vector<Diagnostic> d;
  c.sweeps.push_back(*parse_sweep("gamma0=1:3:3", d));
  c.sweeps.push_back(*parse_sweep("lambda0=1:2:2", d));
  const auto pts = expand_sweep(c);
  REQUIRE(pts.size() == 6);
  CHECK(pts[0]["gamma0"] == 1.0);
  CHECK(pts[1]["gamma0"] == 1.0);
  CHECK(pts[1]["lambda0"] == 2.0);
  CHECK(pts[2]["gamma0"] == 2.0);
}

TEST_CASE("exit codes") {
  const auto out = scratch("codes");
  CHECK(run_qsl("jc --gamma0 0.3 --out " + out.string()) == 0);
  CHECK(run_qsl("lz --c 1 --out " + out.string()) == 2);
  CHECK(run_qsl("transport --U0 -1 --out " + out.string()) == 2);
  CHECK(run_qsl("jc --gamma0 abc --out " + out.string()) == 2);
  CHECK(run_qsl("frobnicate") == 2);
  CHECK(run_qsl("sweep --scenario jc --out " + out.string()) == 2);
  // Starting on the pole with a drift term is a numerical domain error.
  CHECK(run_qsl("lz --v 1 --chi0 0 --phi0 0 --protocol constant --tmax 1 --out " + out.string()) == 3);

  const auto bad = out / "bad.json";
  fs::create_directories(out);
  std::ofstream(bad) << "{\n  \"scenario\": \"jc\",\n  \"params\": {\"gamma0\": 1,,}\n}\n";
  CHECK(run_qsl("sweep --config " + bad.string()) == 2);
}

TEST_CASE("optimal Landau-Zener run reaches the speed limit") {
  const auto out = scratch("lz");
  REQUIRE(run_qsl("lz --v 1 --c 0.5 --chi0 0.7853981633974483 --chitau 2.356194490192345 --out " + out.string()) == 0);
  const auto rep = read_json(out / "report.json");
  CHECK(rep["scenario"] == "lz");
  CHECK(rep["result"]["tau_qsl"].get<double>() == doctest::Approx(oracle::pi / 2).epsilon(1e-7));
  CHECK(rep["result"]["bound_holds"] == true);
  const auto rows = read_csv(out / "traj.csv");
  CHECK(rows[0][0] == "t");
  CHECK(rows.size() > 100);
  CHECK(fs::exists(out / "traj.svg"));
  CHECK(slurp(out / "traj.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("damped qubit run") {
  const auto out = scratch("jc");
  REQUIRE(run_qsl("jc --gamma0 0.01 --lambda0 1 --out " + out.string()) == 0);
  const auto rep = read_json(out / "report.json");
  CHECK(rep["result"]["tau_qsl"].get<double>() == doctest::Approx(104.257149617095).epsilon(1e-9));
  // Weak coupling sits within 5% of 1 / gamma0.
  CHECK(std::abs(rep["result"]["tau_qsl"].get<double>() / 100.0 - 1.0) < 0.05);
  CHECK(rep["result"]["global_bound"] == 0.0);
  CHECK(read_csv(out / "jc.csv").size() == 2002);
}

TEST_CASE("report round trip and determinism") {
  const auto a = scratch("rt_a");
  const auto b = scratch("rt_b");
  const auto c = scratch("rt_c");
  const std::string args = "jc --gamma0 2.5 --lambda0 0.7 --tmax 12 --samples 301 --out ";
  REQUIRE(run_qsl(args + a.string()) == 0);
  REQUIRE(run_qsl(args + b.string()) == 0);
  for (const char* f : {"jc.csv", "jc.svg"}) CHECK(slurp(a / f) == slurp(b / f));
  // Reports differ only in the output directory they record.
  auto ja = read_json(a / "report.json");
  auto jb = read_json(b / "report.json");
  ja["config"].erase("out");
  jb["config"].erase("out");
  CHECK(ja.dump() == jb.dump());
  REQUIRE(run_qsl("jc --config " + (a / "report.json").string() + " --out " + c.string()) == 0);
  const auto ra = read_json(a / "report.json");
  const auto rc = read_json(c / "report.json");
  CHECK(ra["config"]["params"] == rc["config"]["params"]);
  CHECK(ra["result"] == rc["result"]);
  CHECK(slurp(a / "jc.csv") == slurp(c / "jc.csv"));
}

TEST_CASE("formula-mode transport sweep scales as sqrt(d)") {
  const auto out = scratch("sweep");
  REQUIRE(run_qsl("transport --mode formula --sweep d=8:128:5:log --K2 10,20 --out " + out.string()) == 0);
  const auto rows = read_csv(out / "sweep.csv");
  REQUIRE(rows.size() == 6);
  const auto& h = rows[0];
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(h.begin(), h.end(), name) - h.begin());
  };
  std::vector<double> d, tau;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    d.push_back(std::stod(rows[i][col("d")]));
    tau.push_back(std::stod(rows[i][col("tau_conveyor")]));
    CHECK(rows[i][col("elapsed")].empty());
  }
  CHECK(d.front() == 8.0);
  CHECK(oracle::loglog_slope(d, tau) == doctest::Approx(0.5).epsilon(1e-12));
  // Rows run d-major with K2 in {10, 20}: tau rises with d and falls with K2.
  const auto heat = read_csv(out / "heatmap.csv");
  REQUIRE(heat.size() == 11);
  for (std::size_t i = 1; i + 1 < heat.size(); i += 2) {
    CHECK(std::stod(heat[i][2]) > std::stod(heat[i + 1][2]));
    if (i + 2 < heat.size()) CHECK(std::stod(heat[i + 2][2]) > std::stod(heat[i][2]));
  }
  CHECK(fs::exists(out / "sweep.svg"));
  CHECK(read_json(out / "sweep.json")["rows"].size() == 5);
}

TEST_CASE("sweep results do not depend on the thread count") {
  const auto a = scratch("thr1");
  const auto b = scratch("thr4");
  const std::string args = "sweep --scenario jc --sweep gamma0=0.1:10:4:log --sweep lambda0=0.5:2:2 --emit csv ";
  REQUIRE(run_qsl(args + "--threads 1 --out " + a.string()) == 0);
  REQUIRE(run_qsl(args + "--threads 4 --out " + b.string()) == 0);
  CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
  const auto rows = read_csv(a / "sweep.csv");
  CHECK(rows[0] == std::vector<std::string>{"gamma0", "lambda0", "tau_qsl", "tau_weak_formula", "tau_strong_formula", "N"});
  CHECK(rows.size() == 9);
  CHECK_FALSE(fs::exists(a / "sweep.json"));
}

TEST_CASE("metric scenario") {
  RunConfig c = config_for(Scenario::Metric, {{"chart", "bloch"}, {"point", {1.0, 0.3}}, {"rates", {1.0, 2.0}}});
  REQUIRE(validate(c).empty());
  const auto r = run_scenario(Scenario::Metric, c.params, true);
  CHECK(r.result["metric"][0][0].get<double>() == doctest::Approx(0.25));
  CHECK(r.result["metric"][1][1].get<double>() == doctest::Approx(0.25 * std::pow(std::sin(1.0), 2)));
  CHECK(r.result["psd"] == true);
  CHECK(r.result["global_speed"].get<double>() ==
        doctest::Approx(0.5 * std::sqrt(1.0 + 4.0 * std::pow(std::sin(1.0), 2))));
}
