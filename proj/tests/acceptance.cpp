// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "srscomb/srscomb.hpp"

namespace {

using namespace srscomb;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion1() {
  bool ok = true;
  std::ostringstream d;
  for (double g : {1.0, 5.0, 10.0, 20.0}) {
    const auto r = stokes_oracle_check(g, 256);
    ok = ok && r.relative_error <= 1e-4 && r.seconds < 10.0;
    d << "g=" << g << " err=" << fmt("%.2e", r.relative_error) << " t=" << fmt("%.2fs", r.seconds) << "; ";
  }
  report(1, "Stokes-only Bessel oracle (256x256, tol 1e-4, <10 s)", ok, d.str());
}

struct EnsembleRun {
  ShotEnsemble ens;
  FitTable fits;
};

EnsembleRun two_mode_ensemble() {
  RunConfig c;
  c.medium = make_two_mode_medium(60.0, 30.0);
  c.grid = build_grid(1.0, 1.0, 48, 64);
  c.shots = 10000;
  c.fibers = 2;
  c.seed = 20240601;
  EnsembleRun r{app::run_configured_ensemble(c, 0), {}};
  VirtualExperimentOptions vo;
  vo.detector = c.detector;
  vo.pump_detector = c.pump_detector;
  r.fits = run_virtual_experiment(r.ens, {-1, 1}, vo);
  return r;
}

void criterion2(const EnsembleRun& run) {
  const auto es = energy_stats(run.ens, -1);
  const bool ok = std::abs(es.moment_ratio - 2.0) <= 0.05 && es.ks_distance < 0.02;
  report(2, "thermal S1 energy statistics (10^4 shots)", ok,
         "<W^2>/<W>^2=" + fmt("%.4f", es.moment_ratio) + " (2 +- 0.05), KS=" + fmt("%.4f", es.ks_distance) + " (< 0.02)");
}

void criterion3(const EnsembleRun& run) {
  const auto vs = visibility_stats(run.fits, -1);
  const bool ok = std::abs(vs.mean - kPi / 4.0) <= 0.01 && vs.n == 10000;
  report(3, "mean fringe visibility of independent thermal pairs", ok,
         "mean V=" + fmt("%.4f", vs.mean) + " vs pi/4=" + fmt("%.4f", kPi / 4.0) + " (+- 0.01), fits=" + std::to_string(vs.n));
}

void criterion4(const EnsembleRun& run) {
  std::vector<double> ph;
  for (const auto* r : run.fits.line(-1))
    if (r->fit.success) ph.push_back(r->fit.phase);
  const auto ut = uniformity_test(ph);
  const double bound = 2.0 / std::sqrt(static_cast<double>(ph.size()));
  const bool ok = ut.resultant < bound && !ut.rejected;
  report(4, "single-line phase uniformity", ok,
         "R=" + fmt("%.4f", ut.resultant) + " (< " + fmt("%.4f", bound) + "), Rayleigh p=" + fmt("%.3f", ut.p_value));
}

void criterion5() {
  const PumpPulse pump;
  const auto r = propagate_covariance(make_two_mode_medium(60.0, 30.0), pump, build_grid(1.0, 1.0, 128, 128));
  const auto m = pulse_metrics(r);
  const bool ok = m.min_correlation && *m.min_correlation > 0.99 && m.crossing_gap <= 0.1;
  report(5, "S/AS correlation at mismatch 30", ok,
         "min C over central 80% energy=" + (m.min_correlation ? fmt("%.5f", *m.min_correlation) : std::string("undefined")) +
             " (> 0.99), 10% crossing gap=" + fmt("%.4f", m.crossing_gap) + " T (<= 0.1)");
}

void criterion6(const EnsembleRun& run) {
  const auto es = energy_stats(run.ens, -1);
  const auto ps = line_phases(run.ens, -1), pa = line_phases(run.ens, 1);
  std::vector<double> sum(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) sum[i] = ps[i] + pa[i];
  const double rsum = circular_stats(sum).resultant;
  const auto us = uniformity_test(ps), ua = uniformity_test(pa);
  const bool ok = es.stokes_anti_stokes_pearson > 0.5 && rsum > 0.9 && !us.rejected && !ua.rejected;
  report(6, "two-mode squeezed-state signatures", ok,
         "Pearson(W_S,W_AS)=" + fmt("%.4f", es.stokes_anti_stokes_pearson) + " (> 0.5), R(phi_S+phi_AS)=" + fmt("%.4f", rsum) +
             " (> 0.9), single-line Rayleigh p=" + fmt("%.3f", us.p_value) + "/" + fmt("%.3f", ua.p_value));
}

void criterion7(const EnsembleRun& run) {
  const auto rec = phase_record_from_fits(run.fits, {-1, 1});
  const auto cs = circular_stats(phi_nm(rec, 1, -1));
  const double mode = cs.histogram.center(cs.histogram.mode_bin());
  const double half_bin = kPi / kDefaultPhaseBins;
  const bool ok = cs.resultant > 0.9 && std::abs(mode) < half_bin;
  report(7, "Phi_{1,-1} mutual coherence", ok,
         "simulated R=" + fmt("%.4f", cs.resultant) + " (> 0.9) | experimental R=0.64 (not a target), histogram mode at " + fmt("%.3f", mode) + " rad");
}

// Independent brute force: own RNG, direct formula for Phi_nm, no PhaseRecord.
double brute_force_resultant(int n, int m, double sigma, int shots, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  std::normal_distribution<double> jit(0.0, 1.0);
  auto diff = [&](int order, double q1, double q2, double d1, double d2) {
    return (order * q1 + d1 + sigma * jit(gen)) - (order * q2 + d2 + sigma * jit(gen));
  };
  double prev_n = 0.0, prev_m = 0.0, c = 0.0, s = 0.0;
  for (int i = 0; i < shots; ++i) {
    const double q1 = u(gen), q2 = u(gen);
    const double dn = diff(n, q1, q2, 0.3 * n, -0.1 * n), dm = diff(m, q1, q2, 0.3 * m, -0.1 * m);
    if (i > 0) {
      const double phi = m * (dn - prev_n) - n * (dm - prev_m);
      c += std::cos(phi);
      s += std::sin(phi);
    }
    prev_n = dn;
    prev_m = dm;
  }
  return std::hypot(c, s) / (shots - 1);
}

void criterion8() {
  const int shots = 20000;
  bool ok = true;
  std::ostringstream d;
  const std::vector<std::pair<int, int>> pairs{{1, -1}, {2, 1}, {2, -1}};
  for (double sigma : {0.0, 0.2, 0.5}) {
    SyntheticPhaseModel model;
    model.lines = {-1, 1, 2};
    for (int n : model.lines) {
      model.offsets[n] = 0.3 * n;
      model.fiber2_offsets[n] = -0.1 * n;
    }
    model.jitter_sigma = sigma;
    const PhaseRecord rec = model.generate(shots, 4242);
    for (const auto& [n, m] : pairs) {
      const double r = circular_stats(phi_nm(rec, n, m)).resultant;
      const double bf = brute_force_resultant(n, m, sigma, shots, 99 + static_cast<std::uint64_t>(10 * sigma));
      ok = ok && std::abs(r - bf) <= 0.02;
      d << "s=" << sigma << " (" << n << "," << m << ") R=" << fmt("%.4f", r) << " bf=" << fmt("%.4f", bf) << "; ";
    }
  }
  report(8, "phase-law pipeline vs brute-force synthetic oracle (tol 0.02)", ok, d.str());
}

void criterion9() {
  const auto pts = conservation_sweep(conservation_scenario(), PumpPulse{}, {64, 128, 256, 512});
  bool ok = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d << pts[i].n << ": res=" << fmt("%.3e", pts[i].residual);
    if (i > 0) {
      const double ratio = std::abs(pts[i - 1].residual) / std::abs(pts[i].residual);
      ok = ok && ratio >= 1.8;
      d << " shrink=" << fmt("%.2f", ratio);
    }
    d << "; ";
  }
  ok = ok && pts.back().relative < 0.01;
  d << "relative at 512: " << fmt("%.2e", pts.back().relative) << " (< 1e-2)";
  report(9, "Manley-Rowe residual under refinement", ok, d.str());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

// Every file except the manifest, which records wall-clock time, must match.
bool same_outputs(const std::filesystem::path& a, const std::filesystem::path& b, std::string& why) {
  std::vector<std::string> na, nb;
  for (const auto& e : std::filesystem::directory_iterator(a)) na.push_back(e.path().filename().string());
  for (const auto& e : std::filesystem::directory_iterator(b)) nb.push_back(e.path().filename().string());
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  if (na != nb) {
    why = "file sets differ";
    return false;
  }
  for (const auto& n : na) {
    if (n == "manifest.json") continue;
    if (slurp(a / n) != slurp(b / n)) {
      why = n + " differs";
      return false;
    }
  }
  return true;
}

void criterion10() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("srscomb_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  RunConfig c;
  c.shots = 300;
  c.seed = 77;
  c.moments_grid = build_grid(1.0, 1.0, 64, 64);
  RunConfig comb = c;
  comb.medium = make_dimensionless_medium(2, 2, 40.0);
  set_mismatch(comb.medium, 30.0);
  comb.analysis.lines = {-2, -1, 1, 2};
  comb.analysis.pairs = {{1, -1}, {2, 1}, {2, -1}};

  bool ok = true;
  std::ostringstream d;
  int compared = 0;
  auto check = [&](const std::string& name, auto&& run) {
    const fs::path a = root / (name + "_t1"), b = root / (name + "_t4");
    run(a.string(), 1);
    run(b.string(), 4);
    std::string why;
    const bool same = same_outputs(a, b, why);
    ok = ok && same;
    for (const auto& e : fs::directory_iterator(a))
      if (e.path().filename() != "manifest.json") ++compared;
    d << name << (same ? " ok" : " MISMATCH (" + why + ")") << "; ";
  };
  check("simulate", [&](const std::string& out, int t) { app::cmd_simulate(c, out, t); });
  check("analyze", [&](const std::string& out, int t) { app::cmd_analyze(c, (root / "simulate_t1" / "ensemble.bin").string(), out, t); });
  check("moments", [&](const std::string& out, int) { app::cmd_moments(c, out); });
  check("reproduce-fig2", [&](const std::string& out, int t) { app::cmd_reproduce_fig2(c, out, t); });
  check("reproduce-fig2-comb", [&](const std::string& out, int t) { app::cmd_reproduce_fig2(comb, out, t); });
  check("reproduce-fig3b", [&](const std::string& out, int) { app::cmd_reproduce_fig3b(c, out); });
  check("oracle-check", [&](const std::string& out, int) {
    OracleCheckOptions o;
    o.coarse = true;
    std::ostringstream sink;
    app::cmd_oracle_check(o, out, sink);
  });
  fs::remove_all(root);
  report(10, "byte-identical CSV/JSON across thread counts 1 and 4", ok, d.str() + std::to_string(compared) + " files compared per run");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    criterion1();
    const EnsembleRun run = two_mode_ensemble();
    criterion2(run);
    criterion3(run);
    criterion4(run);
    criterion5();
    criterion6(run);
    criterion7(run);
    criterion8();
    criterion9();
    criterion10();
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 10 criteria failed (%.1f s)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
