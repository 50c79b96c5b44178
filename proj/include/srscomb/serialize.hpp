#ifndef SRSCOMB_SERIALIZE_HPP
#define SRSCOMB_SERIALIZE_HPP

#include <initializer_list>
#include <string>

#include "core.hpp"
#include "json.hpp"

namespace srscomb {

using json = nlohmann::json;

namespace jsonio {

inline void require_object(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key, "expected an object");
}

inline void check_keys(const json& j, const std::string& prefix, std::initializer_list<const char*> allowed) {
  require_object(j, prefix);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown key");
  }
}

template <class T>
T get(const json& j, const std::string& prefix, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(prefix + "." + key, "wrong type");
  }
}

template <class T>
T require(const json& j, const std::string& prefix, const char* key) {
  if (!j.contains(key)) throw ConfigError(prefix + "." + key, "missing");
  return get<T>(j, prefix, key, T{});
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) throw ConfigError(key, "expected a number or [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace jsonio

inline json to_json(const CombLine& l) { return {{"order", l.order}, {"omega", l.omega}, {"beta", l.beta}}; }

inline json to_json(const MediumConfig& m) {
  json lines = json::array(), a1 = json::array(), a2 = json::array(), fs = json::array();
  for (const auto& l : m.lines) lines.push_back(to_json(l));
  for (const auto& a : m.alpha1) a1.push_back(jsonio::complex_to_json(a));
  for (const auto& a : m.alpha2) a2.push_back(jsonio::complex_to_json(a));
  for (double f : m.scales.field_scale) fs.push_back(f);
  return {{"units", m.units == Units::Physical ? "physical" : "dimensionless"},
          {"length", m.length},
          {"duration", m.duration},
          {"cross_section", m.cross_section},
          {"number_density", m.number_density},
          {"pump_peak_field", m.pump_peak_field},
          {"lines", lines},
          {"alpha1", a1},
          {"alpha2", a2},
          {"damping", m.damping},
          {"langevin_enabled", m.langevin_enabled},
          {"field_seed_strength", m.field_seed_strength},
          {"coherence_seed_strength", m.coherence_seed_strength},
          {"scales",
           {{"length", m.scales.length},
            {"duration", m.scales.duration},
            {"coherence_scale", m.scales.coherence_scale},
            {"field_scale", fs}}}};
}

/// Reads a medium. Besides the explicit form (lines + alpha1) a preset form
/// {"gain", "mismatch", "n_stokes", "n_anti_stokes"} builds a uniform
/// dimensionless comb.
inline MediumConfig medium_from_json(const json& j, const std::string& p = "medium") {
  using namespace jsonio;
  check_keys(j, p,
             {"units", "length", "duration", "cross_section", "number_density", "pump_peak_field", "lines", "alpha1", "alpha2", "damping",
              "langevin_enabled", "field_seed_strength", "coherence_seed_strength", "scales", "gain", "mismatch", "n_stokes", "n_anti_stokes",
              "shift"});
  MediumConfig m;
  const auto units = get<std::string>(j, p, "units", "dimensionless");
  if (units == "physical") {
    m.units = Units::Physical;
  } else if (units != "dimensionless") {
    throw ConfigError(p + ".units", "expected \"dimensionless\" or \"physical\"");
  }
  const bool preset = j.contains("gain");
  if (preset) {
    if (m.units != Units::Dimensionless) throw ConfigError(p + ".gain", "preset form is dimensionless only");
    if (j.contains("lines") || j.contains("alpha1")) throw ConfigError(p + ".gain", "use either the preset form or explicit lines");
    const double gain = require<double>(j, p, "gain");
    if (!(gain >= 0.0)) throw ConfigError(p + ".gain", "must be nonnegative");
    m = make_dimensionless_medium(get<int>(j, p, "n_stokes", 1), get<int>(j, p, "n_anti_stokes", 1), gain, get<double>(j, p, "shift", 0.1));
    set_mismatch(m, get<double>(j, p, "mismatch", 0.0));
  } else {
    if (!j.contains("lines")) throw ConfigError(p + ".lines", "missing");
    const auto& lines = j.at("lines");
    if (!lines.is_array()) throw ConfigError(p + ".lines", "expected an array");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string lp = p + ".lines[" + std::to_string(i) + "]";
      check_keys(lines[i], lp, {"order", "omega", "beta"});
      m.lines.push_back({require<int>(lines[i], lp, "order"), require<double>(lines[i], lp, "omega"), get<double>(lines[i], lp, "beta", 0.0)});
    }
    if (!j.contains("alpha1") || !j.at("alpha1").is_array()) throw ConfigError(p + ".alpha1", "missing or not an array");
    for (std::size_t i = 0; i < j.at("alpha1").size(); ++i)
      m.alpha1.push_back(complex_from_json(j.at("alpha1")[i], p + ".alpha1[" + std::to_string(i) + "]"));
    if (j.contains("alpha2")) {
      if (!j.at("alpha2").is_array()) throw ConfigError(p + ".alpha2", "expected an array");
      for (std::size_t i = 0; i < j.at("alpha2").size(); ++i)
        m.alpha2.push_back(complex_from_json(j.at("alpha2")[i], p + ".alpha2[" + std::to_string(i) + "]"));
    }
  }
  m.units = units == "physical" ? Units::Physical : Units::Dimensionless;
  m.length = get<double>(j, p, "length", m.length);
  m.duration = get<double>(j, p, "duration", m.duration);
  m.cross_section = get<double>(j, p, "cross_section", m.cross_section);
  m.number_density = get<double>(j, p, "number_density", m.number_density);
  m.pump_peak_field = get<double>(j, p, "pump_peak_field", m.pump_peak_field);
  m.damping = get<double>(j, p, "damping", m.damping);
  m.langevin_enabled = get<bool>(j, p, "langevin_enabled", m.langevin_enabled);
  m.field_seed_strength = get<double>(j, p, "field_seed_strength", m.field_seed_strength);
  m.coherence_seed_strength = get<double>(j, p, "coherence_seed_strength", m.coherence_seed_strength);
  if (!preset && !j.contains("alpha2")) {
    if (m.units == Units::Physical) {
      if (m.lines.size() < 2 || m.alpha1.size() != m.lines.size() - 1) throw ConfigError(p + ".alpha1", "need one coupling per adjacent line pair");
      complete_physical_couplings(m);
    } else {
      for (const auto& a : m.alpha1) m.alpha2.push_back(std::conj(a));
    }
  }
  if (j.contains("scales")) {
    const auto& s = j.at("scales");
    const std::string sp = p + ".scales";
    check_keys(s, sp, {"length", "duration", "coherence_scale", "field_scale"});
    m.scales.length = get<double>(s, sp, "length", 1.0);
    m.scales.duration = get<double>(s, sp, "duration", 1.0);
    m.scales.coherence_scale = get<double>(s, sp, "coherence_scale", 1.0);
    m.scales.field_scale = get<std::vector<double>>(s, sp, "field_scale", {});
  } else if (m.scales.field_scale.empty()) {
    m.scales.field_scale.assign(m.lines.size(), 1.0);
  }
  validate(m);
  return m;
}

inline json to_json(const PumpPulse& p) {
  return {{"peak", p.peak}, {"center", p.center}, {"width", p.width}, {"order", p.order}, {"photons", p.photons}};
}

inline PumpPulse pump_from_json(const json& j, const std::string& p = "pump") {
  using namespace jsonio;
  check_keys(j, p, {"peak", "center", "width", "order", "photons"});
  PumpPulse out;
  out.peak = get<double>(j, p, "peak", out.peak);
  out.center = get<double>(j, p, "center", out.center);
  out.width = get<double>(j, p, "width", out.width);
  out.order = get<int>(j, p, "order", out.order);
  out.photons = get<double>(j, p, "photons", out.photons);
  if (!std::isfinite(out.peak) || out.peak < 0.0) throw ConfigError(p + ".peak", "must be finite and nonnegative");
  if (!(out.width > 0.0)) throw ConfigError(p + ".width", "must be positive");
  if (out.order < 1) throw ConfigError(p + ".order", "must be at least 1");
  if (!(out.photons > 0.0)) throw ConfigError(p + ".photons", "must be positive");
  return out;
}

inline json to_json(const CharacteristicsGrid& g) { return {{"nz", g.nz}, {"ntau", g.ntau}, {"length", g.length}, {"duration", g.duration}}; }

inline CharacteristicsGrid grid_from_json(const json& j, const std::string& p = "grid") {
  using namespace jsonio;
  check_keys(j, p, {"nz", "ntau", "length", "duration"});
  const int nz = require<int>(j, p, "nz");
  const int nt = require<int>(j, p, "ntau");
  if (nz < 2) throw ConfigError(p + ".nz", "need at least 2 steps in z");
  if (nt < 2) throw ConfigError(p + ".ntau", "need at least 2 steps in tau");
  const double L = get<double>(j, p, "length", 1.0), T = get<double>(j, p, "duration", 1.0);
  if (!(L > 0.0)) throw ConfigError(p + ".length", "must be positive");
  if (!(T > 0.0)) throw ConfigError(p + ".duration", "must be positive");
  return build_grid(L, T, nz, nt);
}

/// 64-bit FNV-1a, used for configuration hashes.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return out;
}

}  // namespace srscomb

#endif  // SRSCOMB_SERIALIZE_HPP
