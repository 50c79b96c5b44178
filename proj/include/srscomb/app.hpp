#ifndef SRSCOMB_APP_HPP
#define SRSCOMB_APP_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "config.hpp"
#include "ensemble.hpp"
#include "interferometry.hpp"
#include "moments.hpp"
#include "serialize.hpp"
#include "statistics.hpp"
#include "svg.hpp"

namespace srscomb::app {

inline constexpr const char* kVersion = "1.0.0";

/// Collects the files a subcommand writes and finishes with the manifest.
class OutputDir {
 public:
  explicit OutputDir(const std::string& path) : root_(path) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_)) throw IoError("cannot create output directory " + path);
  }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  void record(const std::string& name) { files_.push_back(name); }

  void text(const std::string& name, const std::string& content) {
    std::ofstream os(path(name), std::ios::binary);
    if (!os) throw IoError("cannot open " + path(name) + " for writing");
    os << content;
    if (!os) throw IoError("write failed for " + path(name));
    record(name);
  }

  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  void svg_file(const std::string& name, const svg::Plot& p) { text(name, svg::render(p)); }

  /// The manifest carries the wall-clock time, so it is the one file that
  /// differs between otherwise identical runs.
  void manifest(const std::string& config_hash, std::uint64_t seed, const std::string& subcommand, double seconds) {
    json m = {{"config_hash", config_hash},
              {"master_seed", seed},
              {"version", kVersion},
              {"subcommand", subcommand},
              {"outputs", files_},
              {"wall_clock_seconds", seconds}};
    std::ofstream os(path("manifest.json"), std::ios::binary);
    if (!os) throw IoError("cannot open " + path("manifest.json") + " for writing");
    os << m.dump(2) << "\n";
    if (!os) throw IoError("write failed for manifest.json");
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline json optional_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  os << "lo,hi,center,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    os << format_number(h.edges[i]) << ',' << format_number(h.edges[i + 1]) << ',' << format_number(h.center(i)) << ',' << h.counts[i] << '\n';
  return os.str();
}

inline svg::Series histogram_series(const std::string& label, const Histogram& h) {
  svg::Series s{label, {}, {}, true};
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    s.x.push_back(h.center(i));
    s.y.push_back(static_cast<double>(h.counts[i]));
  }
  return s;
}

inline std::string line_tag(int n) { return n < 0 ? "m" + std::to_string(-n) : "p" + std::to_string(n); }

inline EnsembleOptions ensemble_options(const RunConfig& c, int threads) {
  EnsembleOptions o;
  o.integrator = c.integrator;
  o.n_orders = c.n_orders;
  o.pump_energy_jitter = c.pump_energy_jitter;
  o.threads = threads;
  return o;
}

inline ShotEnsemble run_configured_ensemble(const RunConfig& c, int threads) {
  return run_ensemble(solver_medium(c), c.pump, c.grid, c.shots, c.fibers, c.seed, ensemble_options(c, threads));
}

inline json ensemble_summary(const ShotEnsemble& ens) {
  json lines = json::object();
  for (int n : ens.orders) {
    double mean = 0.0;
    for (int i = 0; i < ens.n_shots; ++i) mean += ens.energy(i, 0, n);
    json entry = {{"mean_energy", mean / ens.n_shots}};
    if (ens.n_shots >= kMinEnergyShots) {
      const auto es = energy_stats(ens, n);
      entry["moment_ratio"] = es.moment_ratio;
      entry["ks_distance_exponential"] = es.ks_distance;
    }
    lines[std::to_string(n)] = entry;
  }
  return {{"shots", ens.n_shots}, {"fibers", ens.n_fibers}, {"orders", ens.orders}, {"lines", lines}};
}

/// Writes the ensemble file plus a summary of per-line energies.
inline void cmd_simulate(const RunConfig& c, const std::string& out_dir, int threads) {
  Stopwatch sw;
  OutputDir out(out_dir);
  const ShotEnsemble ens = run_configured_ensemble(c, threads);
  write_ensemble(out.path("ensemble.bin"), ens);
  out.record("ensemble.bin");
  out.json_file("ensemble_summary.json", ensemble_summary(ens));
  out.manifest(config_hash(c), c.seed, "simulate", sw.seconds());
}

/// Interferometry and statistics over an ensemble; returns the summary.
inline json analyze_ensemble(const RunConfig& c, const ShotEnsemble& ens, OutputDir& out, int threads) {
  if (ens.n_fibers != 2) throw ConfigError("ensemble.fibers", "analysis needs a two-fiber ensemble");
  VirtualExperimentOptions vo;
  vo.detector = c.detector;
  vo.pump_detector = c.pump_detector;
  vo.threads = threads;
  const FitTable table = run_virtual_experiment(ens, c.analysis.lines, vo);
  write_fit_table_csv(out.path("fits.csv"), table);
  out.record("fits.csv");
  const PhaseRecord phases = phase_record_from_fits(table, c.analysis.lines);

  json summary = {{"shots", ens.n_shots}, {"thermal_reference_visibility", kPi / 4.0}};
  svg::Plot vis_plot{"Fringe visibility", "visibility", "shots", {}};
  svg::Plot phase_plot{"Single-line fringe phase", "phase [rad]", "shots", {}};

  std::vector<int> all = c.analysis.lines;
  all.insert(all.begin(), 0);
  json lines = json::object();
  for (int n : all) {
    json entry = json::object();
    const auto rows = table.line(n);
    std::vector<double> ph;
    for (const auto* r : rows)
      if (r->fit.success) ph.push_back(wrap_phase(r->fit.phase));
    entry["fits"] = rows.size();
    entry["successful_fits"] = ph.size();
    if (ph.size() >= 100) {
      const auto vs = visibility_stats(table, n, c.analysis.visibility_bins);
      entry["mean_visibility"] = vs.mean;
      entry["visibility_stddev"] = vs.stddev;
      out.text("visibility_hist_" + line_tag(n) + ".csv", histogram_csv(vs.histogram));
      vis_plot.series.push_back(histogram_series("line " + std::to_string(n), vs.histogram));
      const auto ut = uniformity_test(ph);
      entry["phase_resultant"] = ut.resultant;
      entry["rayleigh_statistic"] = ut.statistic;
      entry["rayleigh_p_value"] = ut.p_value;
      entry["uniformity_rejected"] = ut.rejected;
      const auto cs = circular_stats(ph, c.analysis.phase_bins);
      out.text("phase_hist_" + line_tag(n) + ".csv", histogram_csv(cs.histogram));
      if (n != 0) phase_plot.series.push_back(histogram_series("line " + std::to_string(n), cs.histogram));
    }
    if (n != 0 && ens.n_shots >= kMinEnergyShots) {
      const auto es = energy_stats(ens, n);
      entry["energy_mean"] = es.mean;
      entry["energy_moment_ratio"] = es.moment_ratio;
      entry["energy_ks_distance"] = es.ks_distance;
    }
    lines[std::to_string(n)] = entry;
  }
  summary["lines"] = lines;

  json pairs = json::array();
  svg::Plot phi_plot{"Mutual coherence Phi_nm", "Phi [rad]", "shot pairs", {}};
  for (const auto& [n, m] : c.analysis.pairs) {
    json entry = {{"n", n}, {"m", m}};
    const bool present = std::count(c.analysis.lines.begin(), c.analysis.lines.end(), n) && std::count(c.analysis.lines.begin(), c.analysis.lines.end(), m);
    if (!present) throw ConfigError("analysis.pairs", "pair lines must also be listed in analysis.lines");
    const auto phi = ens.n_shots >= 2 ? phi_nm(phases, n, m) : std::vector<double>{};
    entry["count"] = phi.size();
    if (!phi.empty()) {
      const auto cs = circular_stats(phi, c.analysis.phase_bins);
      entry["resultant"] = cs.resultant;
      entry["circular_mean"] = cs.mean;
      entry["gaussian_sigma"] = cs.gaussian_sigma;
      entry["mode_center"] = cs.histogram.center(cs.histogram.mode_bin());
      if ((n == 1 && m == -1) || (n == -1 && m == 1)) entry["experimental_resultant"] = c.analysis.experimental_resultant;
      const std::string name = "phi_hist_" + line_tag(n) + "_" + line_tag(m) + ".csv";
      out.text(name, histogram_csv(cs.histogram));
      phi_plot.series.push_back(histogram_series("(" + std::to_string(n) + "," + std::to_string(m) + ")", cs.histogram));
    }
    pairs.push_back(entry);
  }
  summary["pairs"] = pairs;

  const bool has_pair = std::count(ens.orders.begin(), ens.orders.end(), -1) && std::count(ens.orders.begin(), ens.orders.end(), 1);
  if (has_pair && ens.n_shots >= 2) {
    const auto ps = line_phases(ens, -1), pa = line_phases(ens, 1);
    std::vector<double> sum(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) sum[i] = ps[i] + pa[i];
    summary["stokes_anti_stokes"] = {{"phase_sum_resultant", circular_stats(sum).resultant},
                                     {"stokes_phase_resultant", circular_stats(ps).resultant},
                                     {"anti_stokes_phase_resultant", circular_stats(pa).resultant},
                                     {"energy_pearson", pearson(line_energies(ens, -1), line_energies(ens, 1))}};
  }
  if (!vis_plot.series.empty()) out.svg_file("visibility.svg", vis_plot);
  if (!phase_plot.series.empty()) out.svg_file("phases.svg", phase_plot);
  if (!phi_plot.series.empty()) out.svg_file("phi_nm.svg", phi_plot);
  out.json_file("analysis_summary.json", summary);
  return summary;
}

inline void cmd_analyze(const RunConfig& c, const std::string& ensemble_path, const std::string& out_dir, int threads) {
  Stopwatch sw;
  OutputDir out(out_dir);
  const ShotEnsemble ens = read_ensemble(ensemble_path);
  analyze_ensemble(c, ens, out, threads);
  out.manifest(config_hash(c), ens.master_seed, "analyze", sw.seconds());
}

/// Ensemble, virtual interferometer and statistics in one pass.
inline json cmd_reproduce_fig2(const RunConfig& c, const std::string& out_dir, int threads) {
  Stopwatch sw;
  OutputDir out(out_dir);
  const ShotEnsemble ens = run_configured_ensemble(c, threads);
  out.json_file("ensemble_summary.json", ensemble_summary(ens));
  json summary = analyze_ensemble(c, ens, out, threads);
  out.manifest(config_hash(c), c.seed, "reproduce-fig2", sw.seconds());
  return summary;
}

inline std::string moments_csv(const CovarianceRecord& r) {
  const auto ip = mean_intensity(r, 0), is = generated_intensity(r, -1), ia = generated_intensity(r, 1);
  const auto cc = correlation_coefficient(r);
  std::ostringstream os;
  os << "tau,pump,stokes,anti_stokes,correlation\n";
  for (int k = 0; k < r.grid.ntau; ++k) {
    const auto i = static_cast<std::size_t>(k);
    os << format_number(r.grid.tau_center(k)) << ',' << format_number(ip[i]) << ',' << format_number(is[i]) << ',' << format_number(ia[i]) << ','
       << (cc[i] ? format_number(*cc[i]) : std::string("nan")) << '\n';
  }
  return os.str();
}

inline json moments_summary(const MediumConfig& cfg, const CovarianceRecord& r) {
  const auto mr = manley_rowe_report(r);
  const auto pm = pulse_metrics(r);
  return {{"mismatch", cfg.total_mismatch()},
          {"gain", cfg.gain_exponent(0)},
          {"grid", to_json(r.grid)},
          {"manley_rowe",
           {{"delta_stokes", mr.delta_stokes},
            {"delta_anti_stokes", mr.delta_anti_stokes},
            {"delta_molecular", mr.delta_molecular},
            {"residual", mr.residual},
            {"relative", mr.relative()}}},
          {"central_window", {optional_number(pm.window_start), optional_number(pm.window_end)}},
          {"min_correlation_central", optional_number(pm.min_correlation)},
          {"stokes_crossing", optional_number(pm.stokes_crossing)},
          {"anti_stokes_crossing", optional_number(pm.anti_stokes_crossing)},
          {"crossing_gap", optional_number(pm.crossing_gap)}};
}

inline svg::Plot moments_plot(const CovarianceRecord& r, const std::string& title) {
  svg::Plot p{title, "tau / T", "normalized", {}};
  std::vector<double> tau(static_cast<std::size_t>(r.grid.ntau));
  for (int k = 0; k < r.grid.ntau; ++k) tau[static_cast<std::size_t>(k)] = r.grid.tau_center(k);
  auto normalized = [](std::vector<double> v) {
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, x);
    if (mx > 0.0)
      for (auto& x : v) x /= mx;
    return v;
  };
  p.series.push_back({"I_P", tau, normalized(mean_intensity(r, 0))});
  p.series.push_back({"I_S", tau, normalized(generated_intensity(r, -1))});
  p.series.push_back({"I_AS", tau, normalized(generated_intensity(r, 1))});
  std::vector<double> c;
  for (const auto& v : correlation_coefficient(r)) c.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
  p.series.push_back({"C", tau, c});
  return p;
}

inline MediumConfig two_mode_medium(const RunConfig& c) {
  const MediumConfig m = solver_medium(c);
  if (m.min_order() == -1 && m.max_order() == 1) return m;
  if (!m.has_coupling(0) || !m.has_coupling(1)) throw ConfigError("medium.lines", "second moments need lines -1, 0, +1");
  MediumConfig two = make_two_mode_medium(0.0, 0.0);
  two.lines = {m.lines[m.line_index(-1)], m.lines[m.line_index(0)], m.lines[m.line_index(1)]};
  two.alpha1 = {m.coupling(0), m.coupling(1)};
  two.alpha2 = {m.alpha2[m.coupling_index(0)], m.alpha2[m.coupling_index(1)]};
  two.damping = m.damping;
  two.langevin_enabled = m.langevin_enabled;
  two.field_seed_strength = m.field_seed_strength;
  two.coherence_seed_strength = m.coherence_seed_strength;
  return two;
}

inline IntegratorOptions moments_options(const RunConfig& c) {
  IntegratorOptions o = c.integrator;
  o.scheme = Scheme::Midpoint;
  return o;
}

inline json cmd_moments(const RunConfig& c, const std::string& out_dir) {
  Stopwatch sw;
  OutputDir out(out_dir);
  const MediumConfig m = two_mode_medium(c);
  const auto r = propagate_covariance(m, c.pump, c.moments_grid, moments_options(c));
  out.text("moments.csv", moments_csv(r));
  const json s = moments_summary(m, r);
  out.json_file("moments_summary.json", s);
  out.svg_file("moments.svg", moments_plot(r, "Second moments"));
  out.manifest(config_hash(c), c.seed, "moments", sw.seconds());
  return s;
}

/// Pulse curves at the configured mismatch and the matched variant.
inline json cmd_reproduce_fig3b(const RunConfig& c, const std::string& out_dir) {
  Stopwatch sw;
  OutputDir out(out_dir);
  const MediumConfig m = two_mode_medium(c);
  MediumConfig matched = m;
  set_mismatch(matched, 0.0);
  const auto opts = moments_options(c);
  const auto r = propagate_covariance(m, c.pump, c.moments_grid, opts);
  const auto r0 = propagate_covariance(matched, c.pump, c.moments_grid, opts);
  out.text("fig3b.csv", moments_csv(r));
  out.text("fig3b_matched.csv", moments_csv(r0));
  out.svg_file("fig3b.svg", moments_plot(r, "Pulse shapes and S/AS correlation"));
  out.svg_file("fig3b_matched.svg", moments_plot(r0, "Pulse shapes, matched phases"));
  const json s = {{"configured", moments_summary(m, r)}, {"matched", moments_summary(matched, r0)}};
  out.json_file("fig3b_summary.json", s);
  out.manifest(config_hash(c), c.seed, "reproduce-fig3b", sw.seconds());
  return s;
}

/// Returns true when every check passed.
inline bool cmd_oracle_check(const OracleCheckOptions& o, const std::string& out_dir, std::ostream& log) {
  Stopwatch sw;
  const auto results = run_oracle_checks(o);
  json report = json::array();
  bool ok = true;
  for (const auto& r : results) {
    log << (r.passed ? "PASS " : "FAIL ") << r.name << '\n';
    report.push_back({{"name", r.name}, {"passed", r.passed}, {"details", r.details}});
    ok = ok && r.passed;
  }
  if (!out_dir.empty()) {
    OutputDir out(out_dir);
    out.json_file("oracle_report.json", {{"coarse", o.coarse}, {"mutate_delta_beta_sign", o.mutate_delta_beta_sign}, {"checks", report}, {"passed", ok}});
    out.manifest("none", 0, "oracle-check", sw.seconds());
  } else {
    log << json({{"checks", report}, {"passed", ok}}).dump(2) << '\n';
  }
  return ok;
}

}  // namespace srscomb::app

#endif  // SRSCOMB_APP_HPP
