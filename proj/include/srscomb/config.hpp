#ifndef SRSCOMB_CONFIG_HPP
#define SRSCOMB_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "interferometry.hpp"
#include "propagator.hpp"
#include "serialize.hpp"
#include "statistics.hpp"

namespace srscomb {

inline constexpr int kSchemaVersion = 1;

struct AnalysisConfig {
  std::vector<int> lines{-1, 1};
  std::vector<std::pair<int, int>> pairs{{1, -1}};
  int phase_bins = kDefaultPhaseBins;
  int visibility_bins = 20;
  double experimental_resultant = 0.64;  // measured S1/AS1 value, reported next to the simulated one

  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

/// Everything a subcommand needs. Thread counts are runtime flags and never
/// part of the configuration, so they cannot change the hash.
struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  MediumConfig medium = make_two_mode_medium(60.0, 30.0);
  PumpPulse pump;
  CharacteristicsGrid grid = build_grid(1.0, 1.0, 48, 64);            // ensemble runs
  CharacteristicsGrid moments_grid = build_grid(1.0, 1.0, 128, 128);  // second-moment runs
  IntegratorOptions integrator;
  int shots = 1000;
  int fibers = 2;
  int n_orders = 0;
  double pump_energy_jitter = 0.0;
  DetectorConfig detector;
  std::optional<DetectorConfig> pump_detector = calibrated_pump_detector();
  AnalysisConfig analysis;
};

inline const char* scheme_name(Scheme s) { return s == Scheme::Extrapolated ? "extrapolated" : "midpoint"; }

inline json to_json(const DetectorConfig& d) {
  return {{"n_pixels", d.n_pixels},
          {"fringe_wavenumber", d.fringe_wavenumber},
          {"beam_sigma", d.beam_sigma},
          {"piston_jitter_sigma", d.piston_jitter_sigma},
          {"additive_noise_sigma", d.additive_noise_sigma},
          {"visibility_degradation", d.visibility_degradation},
          {"fit_wavenumber", d.fit_wavenumber},
          {"window_fraction", d.window_fraction}};
}

inline DetectorConfig detector_from_json(const json& j, const std::string& p, DetectorConfig d = {}) {
  using namespace jsonio;
  check_keys(j, p,
             {"n_pixels", "fringe_wavenumber", "beam_sigma", "piston_jitter_sigma", "additive_noise_sigma", "visibility_degradation",
              "fit_wavenumber", "window_fraction", "calibrated"});
  if (get<bool>(j, p, "calibrated", false)) d = calibrated_pump_detector(d);
  d.n_pixels = get<int>(j, p, "n_pixels", d.n_pixels);
  d.fringe_wavenumber = get<double>(j, p, "fringe_wavenumber", d.fringe_wavenumber);
  d.beam_sigma = get<double>(j, p, "beam_sigma", d.beam_sigma);
  d.piston_jitter_sigma = get<double>(j, p, "piston_jitter_sigma", d.piston_jitter_sigma);
  d.additive_noise_sigma = get<double>(j, p, "additive_noise_sigma", d.additive_noise_sigma);
  d.visibility_degradation = get<double>(j, p, "visibility_degradation", d.visibility_degradation);
  d.fit_wavenumber = get<bool>(j, p, "fit_wavenumber", d.fit_wavenumber);
  d.window_fraction = get<double>(j, p, "window_fraction", d.window_fraction);
  validate(d, p);
  return d;
}

inline json to_json(const RunConfig& c) {
  json pairs = json::array();
  for (const auto& [n, m] : c.analysis.pairs) pairs.push_back(json::array({n, m}));
  json out = {{"schema_version", c.schema_version},
              {"seed", c.seed},
              {"medium", to_json(c.medium)},
              {"pump", to_json(c.pump)},
              {"grid", to_json(c.grid)},
              {"moments_grid", to_json(c.moments_grid)},
              {"integrator",
               {{"scheme", scheme_name(c.integrator.scheme)},
                {"max_step_gain", c.integrator.max_step_gain},
                {"guard_depletion", c.integrator.guard_depletion},
                {"depletion_fraction", c.integrator.depletion_fraction}}},
              {"ensemble", {{"shots", c.shots}, {"fibers", c.fibers}, {"n_orders", c.n_orders}, {"pump_energy_jitter", c.pump_energy_jitter}}},
              {"detector", to_json(c.detector)},
              {"analysis",
               {{"lines", c.analysis.lines},
                {"pairs", pairs},
                {"phase_bins", c.analysis.phase_bins},
                {"visibility_bins", c.analysis.visibility_bins},
                {"experimental_resultant", c.analysis.experimental_resultant}}}};
  out["pump_detector"] = c.pump_detector ? to_json(*c.pump_detector) : json(nullptr);
  return out;
}

/// Parses a run configuration. Missing sections keep their defaults; unknown
/// keys are rejected with the offending key in the message.
inline RunConfig run_config_from_json(const json& j) {
  using namespace jsonio;
  check_keys(j, "", {"schema_version", "seed", "medium", "pump", "grid", "moments_grid", "integrator", "ensemble", "detector", "pump_detector", "analysis"});
  RunConfig c;
  c.schema_version = get<int>(j, "", "schema_version", kSchemaVersion);
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version) + ", expected " + std::to_string(kSchemaVersion));
  if (j.contains("seed")) {
    const auto& sj = j.at("seed");
    if (!sj.is_number_integer() || (!sj.is_number_unsigned() && sj.get<std::int64_t>() < 0)) throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("medium")) c.medium = medium_from_json(j.at("medium"));
  if (j.contains("pump")) c.pump = pump_from_json(j.at("pump"));
  if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
  if (j.contains("moments_grid")) c.moments_grid = grid_from_json(j.at("moments_grid"), "moments_grid");
  if (j.contains("integrator")) {
    const auto& s = j.at("integrator");
    check_keys(s, "integrator", {"scheme", "max_step_gain", "guard_depletion", "depletion_fraction"});
    const auto name = get<std::string>(s, "integrator", "scheme", "midpoint");
    if (name == "extrapolated") {
      c.integrator.scheme = Scheme::Extrapolated;
    } else if (name != "midpoint") {
      throw ConfigError("integrator.scheme", "expected \"midpoint\" or \"extrapolated\"");
    }
    c.integrator.max_step_gain = get<double>(s, "integrator", "max_step_gain", c.integrator.max_step_gain);
    c.integrator.guard_depletion = get<bool>(s, "integrator", "guard_depletion", c.integrator.guard_depletion);
    c.integrator.depletion_fraction = get<double>(s, "integrator", "depletion_fraction", c.integrator.depletion_fraction);
    if (!(c.integrator.max_step_gain > 0.0)) throw ConfigError("integrator.max_step_gain", "must be positive");
    if (!(c.integrator.depletion_fraction > 0.0 && c.integrator.depletion_fraction <= 1.0))
      throw ConfigError("integrator.depletion_fraction", "must lie in (0, 1]");
  }
  if (j.contains("ensemble")) {
    const auto& s = j.at("ensemble");
    check_keys(s, "ensemble", {"shots", "fibers", "n_orders", "pump_energy_jitter"});
    c.shots = get<int>(s, "ensemble", "shots", c.shots);
    c.fibers = get<int>(s, "ensemble", "fibers", c.fibers);
    c.n_orders = get<int>(s, "ensemble", "n_orders", c.n_orders);
    c.pump_energy_jitter = get<double>(s, "ensemble", "pump_energy_jitter", c.pump_energy_jitter);
    if (c.shots < 1) throw ConfigError("ensemble.shots", "must be at least 1");
    if (c.fibers != 1 && c.fibers != 2) throw ConfigError("ensemble.fibers", "must be 1 or 2");
    if (c.n_orders < 0) throw ConfigError("ensemble.n_orders", "must be nonnegative");
    if (!(c.pump_energy_jitter >= 0.0 && c.pump_energy_jitter < 1.0)) throw ConfigError("ensemble.pump_energy_jitter", "must lie in [0, 1)");
  }
  if (j.contains("detector")) c.detector = detector_from_json(j.at("detector"), "detector");
  if (j.contains("pump_detector")) {
    const auto& s = j.at("pump_detector");
    if (s.is_null()) {
      c.pump_detector.reset();
    } else {
      c.pump_detector = detector_from_json(s, "pump_detector", c.detector);
    }
  }
  if (j.contains("analysis")) {
    const auto& s = j.at("analysis");
    check_keys(s, "analysis", {"lines", "pairs", "phase_bins", "visibility_bins", "experimental_resultant"});
    c.analysis.lines = get<std::vector<int>>(s, "analysis", "lines", c.analysis.lines);
    if (s.contains("pairs")) {
      const auto& p = s.at("pairs");
      if (!p.is_array()) throw ConfigError("analysis.pairs", "expected an array of [n, m]");
      c.analysis.pairs.clear();
      for (std::size_t i = 0; i < p.size(); ++i) {
        const std::string key = "analysis.pairs[" + std::to_string(i) + "]";
        if (!p[i].is_array() || p[i].size() != 2 || !p[i][0].is_number_integer() || !p[i][1].is_number_integer())
          throw ConfigError(key, "expected [n, m]");
        c.analysis.pairs.emplace_back(p[i][0].get<int>(), p[i][1].get<int>());
      }
    }
    c.analysis.phase_bins = get<int>(s, "analysis", "phase_bins", c.analysis.phase_bins);
    c.analysis.visibility_bins = get<int>(s, "analysis", "visibility_bins", c.analysis.visibility_bins);
    c.analysis.experimental_resultant = get<double>(s, "analysis", "experimental_resultant", c.analysis.experimental_resultant);
    if (c.analysis.phase_bins < 2) throw ConfigError("analysis.phase_bins", "need at least 2 bins");
    if (c.analysis.visibility_bins < 2) throw ConfigError("analysis.visibility_bins", "need at least 2 bins");
  }
  for (int n : c.analysis.lines) {
    if (n == 0) throw ConfigError("analysis.lines", "order 0 is the pump");
    if (!c.medium.has_order(n)) throw ConfigError("analysis.lines", "order " + std::to_string(n) + " is not a configured line");
  }
  for (const auto& [n, m] : c.analysis.pairs)
    if (!c.medium.has_order(n) || !c.medium.has_order(m) || n == 0 || m == 0 || n == m)
      throw ConfigError("analysis.pairs", "pair (" + std::to_string(n) + ", " + std::to_string(m) + ") needs two distinct configured sidebands");
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

/// Hash of the canonical (sorted-key, compact) JSON form.
inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

/// Medium and pump in normalized units, ready for the solvers.
inline MediumConfig solver_medium(const RunConfig& c) { return normalize_config(c.medium); }

}  // namespace srscomb

#endif  // SRSCOMB_CONFIG_HPP
