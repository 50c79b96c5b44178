#ifndef SRSCOMB_CORE_HPP
#define SRSCOMB_CORE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace srscomb {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHbar = 1.054571817e-34;        // J s
inline constexpr double kSpeedOfLight = 2.99792458e8;   // m/s

// Errors carry the process exit code the CLI reports for them.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept = 0;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("configuration error [" + key + "]: " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }
  int exit_code() const noexcept override { return 2; }

 private:
  std::string key_;
};

class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// One line of the comb. Order is negative for Stokes, positive for
/// anti-Stokes, zero for the pump.
struct CombLine {
  int order = 0;
  double omega = 1.0;  // rad/s (physical) or omega_n / omega_0 (dimensionless)
  double beta = 0.0;   // 1/m (physical) or beta_n * L (dimensionless)

  friend bool operator==(const CombLine&, const CombLine&) = default;
};

enum class Units { Dimensionless, Physical };

/// Scale factors recorded by normalize_config so that physical quantities can
/// be recovered from a dimensionless run: E_phys = E_dimless / field_scale[n].
struct ScaleFactors {
  double length = 1.0;            // m per unit z
  double duration = 1.0;          // s per unit tau
  double coherence_scale = 1.0;   // sqrt(A N L)
  std::vector<double> field_scale;  // sqrt(A N T / kappa_n), one per line

  friend bool operator==(const ScaleFactors&, const ScaleFactors&) = default;
};

/// Raman medium and geometry. Couplings are indexed by the upper order of the
/// adjacent pair: alpha1[i] belongs to the pair (n, n-1) with
/// n = lines.front().order + 1 + i.
struct MediumConfig {
  Units units = Units::Dimensionless;
  double length = 1.0;
  double duration = 1.0;
  double cross_section = 1.0;
  double number_density = 1.0;
  double pump_peak_field = 1.0;
  std::vector<CombLine> lines;
  std::vector<cplx> alpha1;
  std::vector<cplx> alpha2;
  double damping = 0.0;
  bool langevin_enabled = false;
  double field_seed_strength = 1.0;
  double coherence_seed_strength = 1.0;
  ScaleFactors scales;

  int min_order() const { return lines.empty() ? 0 : lines.front().order; }
  int max_order() const { return lines.empty() ? 0 : lines.back().order; }
  std::size_t line_count() const { return lines.size(); }

  bool has_order(int n) const { return !lines.empty() && n >= min_order() && n <= max_order(); }
  std::size_t line_index(int n) const {
    if (!has_order(n)) throw ConfigError("lines", "no comb line of order " + std::to_string(n));
    return static_cast<std::size_t>(n - min_order());
  }

  bool has_coupling(int n) const { return has_order(n) && has_order(n - 1); }
  std::size_t coupling_index(int n) const {
    if (!has_coupling(n)) throw ConfigError("alpha1", "no coupling for pair (" + std::to_string(n) + ", " + std::to_string(n - 1) + ")");
    return static_cast<std::size_t>(n - min_order() - 1);
  }
  cplx coupling(int n) const { return has_coupling(n) ? alpha1[coupling_index(n)] : cplx{}; }

  /// Delta beta_n = beta_n - beta_{n-1}.
  double delta_beta(int n) const {
    if (!has_coupling(n)) return 0.0;
    return lines[line_index(n)].beta - lines[line_index(n - 1)].beta;
  }

  /// Lumped two-mode mismatch (2 beta_0 - beta_{-1} - beta_1).
  double total_mismatch() const { return delta_beta(0) - delta_beta(1); }

  /// Dimensionless gain exponent |mu_n|^2 of one adjacent pair.
  double gain_exponent(int n) const { return std::norm(coupling(n)); }

  friend bool operator==(const MediumConfig&, const MediumConfig&) = default;
};

inline void validate(const MediumConfig& m) {
  if (!(m.length > 0.0)) throw ConfigError("medium.length", "must be positive");
  if (!(m.duration > 0.0)) throw ConfigError("medium.duration", "must be positive");
  if (!(m.cross_section > 0.0)) throw ConfigError("medium.cross_section", "must be positive");
  if (!(m.number_density > 0.0)) throw ConfigError("medium.number_density", "must be positive");
  if (!(m.damping >= 0.0)) throw ConfigError("medium.damping", "must be nonnegative");
  if (!(m.field_seed_strength >= 0.0)) throw ConfigError("medium.field_seed_strength", "must be nonnegative");
  if (!(m.coherence_seed_strength >= 0.0)) throw ConfigError("medium.coherence_seed_strength", "must be nonnegative");
  if (m.lines.size() < 2) throw ConfigError("medium.lines", "need the pump and at least one sideband");
  for (std::size_t i = 1; i < m.lines.size(); ++i) {
    if (m.lines[i].order != m.lines[i - 1].order + 1)
      throw ConfigError("medium.lines", "orders must be distinct and contiguous");
    if (!(m.lines[i].omega > m.lines[i - 1].omega))
      throw ConfigError("medium.lines", "omega must increase strictly with order");
  }
  if (!m.has_order(0)) throw ConfigError("medium.lines", "the pump line (order 0) is required");
  if (m.alpha1.size() != m.lines.size() - 1) throw ConfigError("medium.alpha1", "need one coupling per adjacent line pair");
  if (m.alpha2.size() != m.alpha1.size()) throw ConfigError("medium.alpha2", "need one coupling per adjacent line pair");
  for (const auto& a : m.alpha1)
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw ConfigError("medium.alpha1", "non-finite coupling");
}

/// Dimensionless medium with lines -n_stokes..n_anti_stokes, every pair
/// coupled with gain exponent `gain`, and a uniform Raman spacing `shift`
/// relative to the pump frequency.
inline MediumConfig make_dimensionless_medium(int n_stokes, int n_anti_stokes, double gain, double shift = 0.1) {
  if (n_stokes < 1 || n_anti_stokes < 1) throw ConfigError("medium.lines", "need at least one Stokes and one anti-Stokes line");
  MediumConfig m;
  for (int n = -n_stokes; n <= n_anti_stokes; ++n) m.lines.push_back({n, 1.0 + shift * n, 0.0});
  const cplx mu{std::sqrt(std::max(gain, 0.0)), 0.0};
  m.alpha1.assign(m.lines.size() - 1, mu);
  m.alpha2.assign(m.lines.size() - 1, std::conj(mu));
  m.scales.field_scale.assign(m.lines.size(), 1.0);
  return m;
}

/// Sets beta so that every adjacent pair carries the same alternating
/// mismatch and the lumped two-mode value (2 beta_0 - beta_{-1} - beta_1) L
/// equals `mismatch`.
inline void set_mismatch(MediumConfig& m, double mismatch) {
  for (auto& line : m.lines) line.beta = -0.5 * mismatch * std::abs(line.order);
}

inline MediumConfig make_two_mode_medium(double gain, double mismatch) {
  auto m = make_dimensionless_medium(1, 1, gain);
  set_mismatch(m, mismatch);
  return m;
}

inline void set_coupling(MediumConfig& m, int n, cplx mu) {
  const auto i = m.coupling_index(n);
  m.alpha1[i] = mu;
  m.alpha2[i] = m.units == Units::Dimensionless ? std::conj(mu) : m.alpha2[i];
}

/// kappa_n = 2 pi hbar N omega_n / c, the ratio alpha2_n / conj(alpha1_n).
inline double coupling_ratio(const MediumConfig& m, int n) {
  return 2.0 * kPi * kHbar * m.number_density * m.lines[m.line_index(n)].omega / kSpeedOfLight;
}

/// Fills alpha2_n = (2 pi hbar N omega_n / c) conj(alpha1_n) for a physical config.
inline void complete_physical_couplings(MediumConfig& m) {
  m.alpha2.resize(m.alpha1.size());
  for (std::size_t i = 0; i < m.alpha1.size(); ++i) {
    const int n = m.min_order() + 1 + static_cast<int>(i);
    m.alpha2[i] = coupling_ratio(m, n) * std::conj(m.alpha1[i]);
  }
}

/// Converts a physical-units configuration to the dimensionless model in which
/// z and tau run over [0, 1], vacuum seeds have unit correlator strength, the
/// pump peak is 1 and alpha2 = conj(alpha1). Dimensionless input is returned
/// unchanged.
inline MediumConfig normalize_config(const MediumConfig& raw) {
  validate(raw);
  if (raw.units == Units::Dimensionless) return raw;

  for (std::size_t i = 0; i < raw.alpha1.size(); ++i)
    if (raw.alpha1[i] == cplx{}) throw ConfigError("medium.alpha1", "coupling " + std::to_string(i) + " is zero");
  if (!(raw.pump_peak_field > 0.0)) throw ConfigError("medium.pump_peak_field", "must be positive");

  const double L = raw.length, T = raw.duration;
  const double AN = raw.cross_section * raw.number_density;

  MediumConfig out;
  out.units = Units::Dimensionless;
  out.damping = raw.damping * T;
  out.langevin_enabled = raw.langevin_enabled;
  out.scales.length = L;
  out.scales.duration = T;
  out.scales.coherence_scale = std::sqrt(AN * L);

  const double omega0 = raw.lines[raw.line_index(0)].omega;
  for (const auto& line : raw.lines) {
    out.lines.push_back({line.order, line.omega / omega0, line.beta * L});
    const double kappa = 2.0 * kPi * kHbar * raw.number_density * line.omega / kSpeedOfLight;
    out.scales.field_scale.push_back(std::sqrt(AN * T / kappa));
  }
  for (std::size_t i = 0; i < raw.alpha1.size(); ++i) {
    const int n = raw.min_order() + 1 + static_cast<int>(i);
    const double kappa = coupling_ratio(raw, n);
    const cplx mu = raw.alpha1[i] * raw.pump_peak_field * std::sqrt(kappa * L * T);
    out.alpha1.push_back(mu);
    out.alpha2.push_back(std::conj(mu));
  }
  return out;
}

/// Uniform (z, tau) characteristics grid. Fields live on tau cells and z
/// nodes; the molecular coherence lives on z cells and tau nodes.
struct CharacteristicsGrid {
  int nz = 2;
  int ntau = 2;
  double length = 1.0;
  double duration = 1.0;

  double dz() const { return length / nz; }
  double dtau() const { return duration / ntau; }
  double z_center(int j) const { return (j + 0.5) * dz(); }
  double tau_center(int k) const { return (k + 0.5) * dtau(); }
  CharacteristicsGrid refined() const { return {2 * nz, 2 * ntau, length, duration}; }

  friend bool operator==(const CharacteristicsGrid&, const CharacteristicsGrid&) = default;
};

inline CharacteristicsGrid build_grid(double length, double duration, int nz, int ntau) {
  if (!(length > 0.0)) throw ConfigError("grid.length", "must be positive");
  if (!(duration > 0.0)) throw ConfigError("grid.duration", "must be positive");
  if (nz < 2) throw ConfigError("grid.nz", "need at least 2 steps in z");
  if (ntau < 2) throw ConfigError("grid.ntau", "need at least 2 steps in tau");
  return {nz, ntau, length, duration};
}

/// Classical pump envelope: super-Gaussian exp(-((tau - center)/width)^(2 order))
/// on the dimensionless tau axis, scaled by `peak`.
struct PumpPulse {
  double peak = 1.0;
  double center = 0.5;
  double width = 0.3;
  int order = 4;
  double photons = 1e15;  // nominal pump photon number, for the depletion guard

  cplx value(double tau) const {
    if (peak == 0.0) return {};
    const double x = (tau - center) / width;
    return {peak * std::exp(-std::pow(x * x, order)), 0.0};
  }

  std::vector<cplx> sample(const CharacteristicsGrid& grid) const {
    std::vector<cplx> out(static_cast<std::size_t>(grid.ntau));
    for (int k = 0; k < grid.ntau; ++k) out[static_cast<std::size_t>(k)] = value(grid.tau_center(k));
    return out;
  }

  double max_modulus() const { return std::abs(peak); }

  /// Integral of |p|^2 over [0, duration].
  double energy(double duration = 1.0) const {
    constexpr int n = 4096;
    const double h = duration / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::norm(value((i + 0.5) * h));
    return s * h;
  }

  /// Sideband amplitudes are in photon units while the pump is normalized to
  /// its peak; sideband and coherence values divided by this factor are on
  /// the pump's scale.
  /// A pulse with zero peak uses the energy of its unit-peak shape.
  double photon_scale(double duration = 1.0) const {
    double w = energy(duration);
    if (!(w > 0.0)) {
      PumpPulse unit = *this;
      unit.peak = 1.0;
      w = unit.energy(duration);
    }
    return w > 0.0 ? std::sqrt(photons / w) : 1.0;
  }

  friend bool operator==(const PumpPulse&, const PumpPulse&) = default;
};

inline void validate(const PumpPulse& p) {
  if (!std::isfinite(p.peak) || p.peak < 0.0) throw ConfigError("pump.peak", "must be finite and nonnegative");
  if (!(p.width > 0.0)) throw ConfigError("pump.width", "must be positive");
  if (p.order < 1) throw ConfigError("pump.order", "must be at least 1");
  if (!(p.photons > 0.0)) throw ConfigError("pump.photons", "must be positive");
}

/// Complex sideband envelopes (positive-frequency part, E^(+)) of every
/// non-pump line at z = L, plus the molecular coherence P^dagger at tau = T.
struct FieldRecord {
  CharacteristicsGrid grid;
  int min_order = 0;
  std::vector<std::vector<cplx>> fields;      // [line index][tau cell]
  std::vector<cplx> coherence;                // [z cell], at tau = T
  // Optional snapshots of the sideband fields at every z node: [node][line][tau].
  std::vector<std::vector<std::vector<cplx>>> snapshots;
  std::uint64_t seed = 0;

  const std::vector<cplx>& line(int n) const {
    const auto i = n - min_order;
    if (i < 0 || i >= static_cast<int>(fields.size())) throw ConfigError("line", "order " + std::to_string(n) + " not in record");
    return fields[static_cast<std::size_t>(i)];
  }
};

/// Integral of |e|^2 over tau: the photon number carried by one line.
inline double line_energy(const std::vector<cplx>& e, double dtau) {
  double s = 0.0;
  for (const auto& v : e) s += std::norm(v);
  return s * dtau;
}

}  // namespace srscomb

#endif  // SRSCOMB_CORE_HPP
