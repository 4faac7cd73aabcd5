// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failing criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qsl/bounds.hpp"
#include "qsl/errors.hpp"
#include "qsl/geometry.hpp"
#include "qsl/jc.hpp"
#include "qsl/lz.hpp"
#include "qsl/transport.hpp"

using namespace qsl;
using oracle::pi;

namespace {

// Every trajectory produced below, as (elapsed, tau_qsl).
struct BoundLedger {
  std::size_t count = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // max tau_qsl / elapsed

  void add(double elapsed, double tau) {
    ++count;
    if (!bounds::verify_bound(elapsed, tau).holds) ++violations;
    if (elapsed > 0.0) worst = std::max(worst, tau / elapsed);
  }
};

BoundLedger ledger;
int failures = 0;

void report(const char* id, bool pass, const std::string& detail, double seconds) {
  std::printf("%-5s %s  %s  [%.2f s]\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion(const char* id, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::pair<bool, std::string> r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, r.first, r.second, s);
}

void record_lz(const lz::LzRun& run) {
  const auto rep = lz::evaluate_lz_bounds(run);
  ledger.add(run.trajectory.elapsed(), rep.tau_qsl);
}

lz::LzParams random_ramp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  lz::LzParams p;
  p.v = 0.5 + 1.5 * u(rng);
  p.c = -3.0 + 6.0 * u(rng);
  p.protocol = lz::LinearRamp{-2.0 + 4.0 * u(rng), -1.0 + 2.0 * u(rng)};
  return p;
}

}  // namespace

int main() {
  criterion("AC1", [] {
    bool ok = true;
    double worst_t = 0.0, worst_tau = 0.0, worst_phi = 0.0;
    for (double c : {-2.0, 0.0, 2.0}) {
      lz::LzParams base;
      base.v = 1.0;
      base.c = c;
      const auto p = lz::optimal_protocol(base, pi / 4, 3 * pi / 4, 0.0);
      lz::IntegrationOptions opt;
      opt.chi_target = 3 * pi / 4;
      const auto run = lz::integrate(p, pi / 4, 0.0, 4.0, 1e-4, opt);
      const auto rep = lz::evaluate_lz_bounds(run);
      ledger.add(run.trajectory.elapsed(), rep.tau_qsl);
      worst_t = std::max(worst_t, std::abs(run.stop_time - pi / 2));
      worst_tau = std::max(worst_tau, std::abs(rep.tau_qsl - pi / 2));
      for (std::size_t k = 0; k < run.trajectory.size(); ++k) {
        worst_phi = std::max(worst_phi, std::abs(run.trajectory.samples()(static_cast<Eigen::Index>(k), 1) + pi / 2));
      }
      ok = ok && run.arrived;
    }
    ok = ok && worst_t < 1e-3 && worst_tau < 1e-3 && worst_phi < 1e-6;
    return std::pair{ok, fmt("max|T-pi/2|=%.2e max|tau-pi/2|=%.2e max|phi+pi/2|=%.2e (tol 1e-3, 1e-3, 1e-6)",
                              worst_t, worst_tau, worst_phi)};
  });

  criterion("AC2", [] {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto p = random_ramp(rng);
      const auto run = lz::integrate(p, 0.3 + (pi - 0.6) * u(rng), -pi + 2 * pi * u(rng), 1.0 + 3.0 * u(rng), 1e-3);
      record_lz(run);
      worst = std::max(worst, lz::conserved_residual(run, p));
    }
    return std::pair{worst < 1e-6, fmt("max residual %.2e over 20 ramps (tol 1e-6)", worst)};
  });

  criterion("AC3", [] {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int found = 0;
    int attempts = 0;
    double worst = 0.0;
    while (found < 10 && attempts < 500) {
      ++attempts;
      lz::LzParams p;
      p.v = 0.5 + 1.5 * u(rng);
      p.c = -3.0 + 6.0 * u(rng);
      p.protocol = lz::Constant{-2.0 + 4.0 * u(rng)};
      const double chi0 = 0.4 + (pi - 0.8) * u(rng);
      const double phi0 = -pi + 2 * pi * u(rng);
      // Target on the first monotone stretch of chi, away from the turning point.
      const auto free_run = lz::integrate(p, chi0, phi0, 4.0, 1e-3);
      const auto& s = free_run.trajectory.samples();
      const auto n = static_cast<Eigen::Index>(free_run.trajectory.size());
      const double dir = s(1, 0) - s(0, 0);
      Eigen::Index turn = 1;
      while (turn < n && (s(turn, 0) - s(turn - 1, 0)) * dir > 0.0) ++turn;
      const Eigen::Index pick = (turn * 3) / 5;
      const double chi_target = s(pick, 0);
      if (std::abs(chi_target - chi0) < 0.1) continue;
      const double c0 = lz::integration_constant(p, chi0, phi0);
      double tq = 0.0;
      try {
        tq = lz::transit_time_quadrature(p, std::cos(chi0), std::cos(chi_target), c0);
      } catch (const InfeasibleError&) {
        continue;
      }
      lz::IntegrationOptions opt;
      opt.chi_target = chi_target;
      const auto run = lz::integrate(p, chi0, phi0, 4.0, 1e-3, opt);
      if (!run.arrived) return std::pair{false, fmt("integration did not reach chi=%.6f", chi_target)};
      record_lz(run);
      worst = std::max(worst, std::abs(tq - run.stop_time) / run.stop_time);
      ++found;
    }
    return std::pair{found == 10 && worst < 1e-4,
                     fmt("max rel diff %.2e over %d feasible configs (tol 1e-4)", worst, found)};
  });

  criterion("AC4", [] {
    std::vector<double> d, tau_formula, tau_sim;
    const double Dx = 1.0 / std::sqrt(2.0 * transport::harmonic_frequency(32.0, 1.0, 8.0));
    for (double n : {5.0, 10.0, 15.0, 20.0, 30.0}) {
      transport::TransportSetup s;
      s.distance = 8.0 * n;
      const auto run = transport::simulate_transport(s);
      ledger.add(run.report.elapsed, run.report.tau_qsl);
      d.push_back(s.distance);
      tau_sim.push_back(run.report.tau_global);
      tau_formula.push_back(transport::qsl_conveyor(1.0, 8.0, 32.0, Dx, s.distance));
    }
    const double sf = oracle::loglog_slope(d, tau_formula);
    const double ss = oracle::loglog_slope(d, tau_sim);
    const bool ok = std::abs(sf - 0.5) < 1e-12 && std::abs(ss - 0.5) <= 0.05;
    return std::pair{ok, fmt("formula slope %.15f (tol 1e-12), simulated slope %.5f (0.5 +- 0.05)", sf, ss)};
  });

  criterion("AC5", [] {
    const double c = transport::experiment_prefactor(866e-9, 25e-9);
    return std::pair{std::abs(c - 1.17) <= 0.01, fmt("prefactor %.5f (1.17 +- 0.01)", c)};
  });

  criterion("AC6", [] {
    transport::TransportSetup s;
    s.distance = 8.0;
    s.duration_scale = 20.0;
    s.n_grid = 2048;
    s.snapshot_every = 50;
    const auto run = transport::simulate_transport(s);
    ledger.add(run.report.elapsed, run.report.tau_qsl);
    double worst = 0.0;
    double max_offset = 0.0;
    std::size_t used = 0;
    for (const auto& snap : run.propagation.snapshots) {
      const double offset = std::abs(snap.obs.mean_x - snap.x_control);
      max_offset = std::max(max_offset, offset);
      if (snap.t == 0.0 || offset >= s.wavelength / 8) continue;
      worst = std::max(worst, std::abs(snap.speed_direct / snap.speed_formula - 1.0));
      ++used;
    }
    return std::pair{used > 0 && worst <= 0.05,
                     fmt("max |direct/formula - 1| = %.3f over %zu snapshots (tol 0.05), max offset %.3g", worst,
                         used, max_offset)};
  });

  criterion("AC7", [] {
    const auto rep = jc::qsl_jc(jc::JcParams{0.01, 1.0, 0.0}, 20.0);
    ledger.add(20.0, jc::evaluate_jc_bounds(rep.params, 20.0, 2001, jc::Chart::Rho11).tau_qsl);
    const double rel = std::abs(rep.tau_qsl / 100.0 - 1.0);
    return std::pair{rel <= 0.05, fmt("tau_qsl %.6f, rel diff from 100 = %.4f (tol 0.05)", rep.tau_qsl, rel)};
  });

  criterion("AC8", [] {
    bool ok = true;
    std::string detail;
    for (const auto& [g, tol] : {std::pair{50.0, 0.05}, std::pair{100.0, 0.05}, std::pair{10.0, 0.10}}) {
      const auto rep = jc::qsl_jc(jc::JcParams{g, 1.0, 0.0}, 20.0);
      const double rel = std::abs(rep.tau_qsl / rep.tau_strong_formula - 1.0);
      ok = ok && rel <= tol;
      detail += fmt("g0=%g: %.4f vs %.4f rel %.4f (tol %.2f) %s; ", g, rep.tau_qsl, rep.tau_strong_formula, rel, tol,
                    rel <= tol ? "ok" : "over");
    }
    return std::pair{ok, detail};
  });

  criterion("AC9", [] {
    double quad = 0.0, lind = 0.0;
    for (double g : {0.1, 10.0}) {
      const jc::JcParams p{g, 1.0, 0.0};
      const double t_end = p.regime() == jc::Regime::Strong ? 0.95 * jc::domain_end(p) : 20.0;
      for (int k = 0; k <= 200; ++k) {
        const double t = t_end * k / 200;
        quad = std::max(quad, std::abs(jc::rho11(t, p) - jc::rho11_closed_form(t, p)));
      }
      for (const auto& s : jc::evolve_lindblad(p, t_end, t_end / 4000)) {
        lind = std::max(lind, std::abs(jc::excited_population(s.rho) - jc::rho11(s.t, p)));
      }
    }
    return std::pair{quad < 1e-8 && lind < 1e-7,
                     fmt("quadrature vs closed form %.2e (tol 1e-8), master equation %.2e (tol 1e-7)", quad, lind)};
  });

  criterion("AC10", [] {
    bool ok = true;
    std::string detail;
    for (double r : {0.1, 0.4, 1.0, 10.0}) {
      const double n = jc::non_markovianity(jc::JcParams{r, 1.0, 0.0}, 20.0);
      const bool pass = r < 0.5 ? n == 0.0 : n > 1e-3;
      ok = ok && pass;
      detail += fmt("N(%g)=%.3e ", r, n);
    }
    return std::pair{ok, detail};
  });

  criterion("AC12", [] {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    int bad_psd = 0;
    double worst_fd = 0.0, worst_pure = 0.0;
    for (int k = 0; k < 100; ++k) {
      const int dim = 2 + k % 3;
      const int params = 1 + k % 3;
      std::vector<double> lam(static_cast<std::size_t>(params)), dir(lam.size());
      for (auto& l : lam) l = u(rng);
      for (auto& x : dir) x = u(rng);
      oracle::RandomMixedChart rm(rng, dim, params);
      geometry::MixedChart mc(lam.size(), [rm](std::span<const double> l) { return rm(l); });
      const auto g = geometry::metric_tensor_mixed(mc, lam);
      oracle::RandomPureChart rp(rng, dim, params);
      geometry::PureChart pc(lam.size(), [rp](std::span<const double> l) { return rp(l); });
      const auto gp = geometry::metric_tensor_pure(pc, lam);
      if (!g.is_symmetric(1e-10) || !g.is_psd() || !gp.is_symmetric(1e-10) || !gp.is_psd()) ++bad_psd;

      // Squared Bures angle over a small step against the quadratic form.
      // Steps to either side cancel the odd-order terms.
      const double h = 1e-4;
      std::vector<double> fwd = lam, bwd = lam;
      for (std::size_t i = 0; i < lam.size(); ++i) {
        fwd[i] += h * dir[i];
        bwd[i] -= h * dir[i];
      }
      const auto r0 = rm(lam).density_matrix();
      const auto af = static_cast<double>(oracle::bures_angle_extended(r0, rm(fwd).density_matrix()));
      const auto ab = static_cast<double>(oracle::bures_angle_extended(r0, rm(bwd).density_matrix()));
      const double q = g.quadratic_form(dir) * h * h;
      worst_fd = std::max(worst_fd, std::abs(0.5 * (af * af + ab * ab) / q - 1.0));

      // Pure states fed through the mixed machinery.
      std::vector<double> other = lam;
      for (auto& x : other) x += 0.5;
      const auto va = rp.vector(lam);
      const auto vb = rp.vector(other);
      const double mixed = geometry::bures_angle_mixed(Eigen::MatrixXcd(va * va.adjoint()),
                                                       Eigen::MatrixXcd(vb * vb.adjoint()));
      worst_pure = std::max(worst_pure, std::abs(mixed - geometry::bures_angle(va, vb)));
    }
    const bool ok = bad_psd == 0 && worst_fd < 1e-3 && worst_pure < 1e-6;
    return std::pair{ok, fmt("non-PSD/asymmetric %d of 100, Bures differencing rel %.2e (tol 1e-3), "
                             "mixed-pure %.2e (tol 1e-6)",
                             bad_psd, worst_fd, worst_pure)};
  });

  criterion("AC11", [] {
    // Further trajectories beyond those recorded above.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 120; ++k) {
      const auto p = random_ramp(rng);
      record_lz(lz::integrate(p, 0.3 + (pi - 0.6) * u(rng), -pi + 2 * pi * u(rng), 0.5 + 3.0 * u(rng), 1e-2));
    }
    for (int k = 0; k < 40; ++k) {
      const jc::JcParams p{std::pow(10.0, -2.0 + 4.0 * u(rng)), 0.5 + u(rng), 0.0};
      const double t_end = p.regime() == jc::Regime::Strong ? 0.95 * jc::domain_end(p) : 5.0 + 20.0 * u(rng);
      const auto chart = k % 2 ? jc::Chart::BlochZ : jc::Chart::Rho11;
      ledger.add(t_end, jc::evaluate_jc_bounds(p, t_end, 2001, chart).tau_qsl);
    }
    for (int k = 0; k < 40; ++k) {
      // Random smooth paths through random pure and mixed charts, finite-difference rates.
      const int dim = 2 + k % 3;
      oracle::RandomPureChart rp(rng, dim, 2);
      oracle::RandomMixedChart rm(rng, dim, 2);
      const double a = u(rng), b = u(rng), w = 0.5 + u(rng);
      const int n = 201;
      std::vector<double> t(n);
      Eigen::MatrixXd s(n, 2);
      for (int j = 0; j < n; ++j) {
        t[j] = 2.0 * j / (n - 1);
        s(j, 0) = a + std::sin(w * t[j]);
        s(j, 1) = b + 0.5 * t[j] * t[j];
      }
      const bounds::Trajectory traj(t, s, {});
      const geometry::ParameterChart chart =
          k % 2 ? geometry::ParameterChart(geometry::PureChart(2, [rp](std::span<const double> l) { return rp(l); }))
                : geometry::ParameterChart(geometry::MixedChart(2, [rm](std::span<const double> l) { return rm(l); }));
      ledger.add(traj.elapsed(), bounds::evaluate_bounds(traj, chart).tau_qsl);
    }
    const bool ok = ledger.count >= 200 && ledger.violations == 0;
    return std::pair{ok, fmt("%zu trajectories, %zu violations, max tau_qsl/elapsed %.6f (tol 1 + 1e-6)",
                             ledger.count, ledger.violations, ledger.worst)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
