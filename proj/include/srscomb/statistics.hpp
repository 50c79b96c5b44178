#ifndef SRSCOMB_STATISTICS_HPP
#define SRSCOMB_STATISTICS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "core.hpp"
#include "ensemble.hpp"
#include "interferometry.hpp"
#include "rng.hpp"

namespace srscomb {

inline constexpr double kUndefinedPhase = std::numeric_limits<double>::quiet_NaN();

/// Fiber-difference fringe phases per line and shot. Failed fits are NaN and
/// are skipped by every transform that would touch them.
struct PhaseRecord {
  std::map<int, std::vector<double>> fiber_difference;

  int shots() const { return fiber_difference.empty() ? 0 : static_cast<int>(fiber_difference.begin()->second.size()); }

  const std::vector<double>& line(int n) const {
    const auto it = fiber_difference.find(n);
    if (it == fiber_difference.end()) throw ConfigError("line", "phase record has no line of order " + std::to_string(n));
    return it->second;
  }

  /// D_n(i) = wrap(dphi_n(i+1) - dphi_n(i)), length shots - 1.
  std::vector<double> successive(int n) const {
    const auto& v = line(n);
    std::vector<double> d;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) d.push_back(wrap_phase(v[i + 1] - v[i]));
    return d;
  }
};

inline PhaseRecord phase_record_from_fits(const FitTable& table, const std::vector<int>& lines) {
  PhaseRecord rec;
  int shots = 0;
  for (const auto& r : table.rows) shots = std::max(shots, r.shot + 1);
  for (int n : lines) rec.fiber_difference[n].assign(static_cast<std::size_t>(shots), kUndefinedPhase);
  for (const auto& r : table.rows) {
    auto it = rec.fiber_difference.find(r.line);
    if (it != rec.fiber_difference.end() && r.fit.success) it->second[static_cast<std::size_t>(r.shot)] = wrap_phase(r.fit.phase);
  }
  return rec;
}

/// Phi_nm(i) = m D_n(i) - n D_m(i), wrapped; shots with an undefined phase
/// in either line are skipped.
inline std::vector<double> phi_nm(const PhaseRecord& rec, int n, int m) {
  const auto Dn = rec.successive(n), Dm = rec.successive(m);
  if (rec.shots() < 2) throw ConfigError("shots", "Phi_nm needs at least 2 shots");
  std::vector<double> out;
  out.reserve(Dn.size());
  for (std::size_t i = 0; i < Dn.size(); ++i)
    if (std::isfinite(Dn[i]) && std::isfinite(Dm[i])) out.push_back(wrap_phase(m * Dn[i] - n * Dm[i]));
  return out;
}

struct Histogram {
  std::vector<double> edges;
  std::vector<long> counts;

  std::size_t mode_bin() const { return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin()); }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
};

inline Histogram make_histogram(const std::vector<double>& x, double lo, double hi, int bins) {
  if (bins < 1) throw ConfigError("bins", "must be at least 1");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : x) {
    auto i = static_cast<long>(std::floor((v - lo) / (hi - lo) * bins));
    i = std::clamp(i, 0L, static_cast<long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(i)];
  }
  return h;
}

struct CircularStats {
  double resultant = 0.0;  // R
  double mean = 0.0;
  double gaussian_sigma = 0.0;  // rms of wrapped deviations from the mean
  std::size_t n = 0;
  Histogram histogram;
};

inline constexpr int kDefaultPhaseBins = 37;

/// Resultant length, circular mean and a histogram on (-pi, pi] with an odd
/// bin count so that one bin is centered at 0.
inline CircularStats circular_stats(const std::vector<double>& x, int bins = kDefaultPhaseBins) {
  if (x.empty()) throw ConfigError("values", "circular statistics need at least one value");
  cplx acc{};
  for (double v : x) acc += std::polar(1.0, v);
  acc /= static_cast<double>(x.size());
  CircularStats s;
  s.n = x.size();
  s.resultant = std::min(1.0, std::abs(acc));
  s.mean = std::abs(acc) > 0.0 ? wrap_phase(std::arg(acc)) : 0.0;
  double ss = 0.0;
  for (double v : x) ss += std::pow(wrap_phase(v - s.mean), 2);
  s.gaussian_sigma = std::sqrt(ss / static_cast<double>(x.size()));
  std::vector<double> wrapped(x.size());
  std::transform(x.begin(), x.end(), wrapped.begin(), wrap_phase);
  s.histogram = make_histogram(wrapped, -kPi, kPi, bins);
  return s;
}

struct UniformityTest {
  double statistic = 0.0;  // Z = N R^2
  double p_value = 1.0;
  double resultant = 0.0;
  std::size_t n = 0;
  bool rejected = false;
};

inline constexpr std::size_t kMinUniformitySamples = 100;

/// Rayleigh test of circular uniformity with the Zar p-value approximation.
inline UniformityTest uniformity_test(const std::vector<double>& phases, double alpha = 0.05) {
  if (phases.size() < kMinUniformitySamples) throw ConfigError("samples", "uniformity test needs at least 100 samples");
  UniformityTest t;
  t.n = phases.size();
  const double N = static_cast<double>(t.n);
  t.resultant = circular_stats(phases).resultant;
  const double nr = N * t.resultant;
  t.statistic = nr * t.resultant;
  t.p_value = std::clamp(std::exp(std::sqrt(1.0 + 4.0 * N + 4.0 * (N * N - nr * nr)) - (1.0 + 2.0 * N)), 0.0, 1.0);
  t.rejected = t.p_value < alpha;
  return t;
}

struct VisibilityStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
  Histogram histogram;
};

inline VisibilityStats visibility_stats(const FitTable& table, int line, int bins = 20) {
  std::vector<double> v;
  for (const auto* r : table.line(line))
    if (r->fit.success) v.push_back(r->fit.visibility);
  if (v.size() < 100) throw ConfigError("fits", "visibility statistics need at least 100 successful fits");
  VisibilityStats s;
  s.n = v.size();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(s.n);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.histogram = make_histogram(v, 0.0, 1.0, bins);
  return s;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("samples", "Pearson correlation needs two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

/// Kolmogorov-Smirnov distance of x / mean(x) to the unit exponential.
inline double ks_distance_exponential(std::vector<double> x) {
  if (x.empty()) throw ConfigError("samples", "KS distance needs data");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = 1.0 - std::exp(-x[i] / mean);
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  return d;
}

struct EnergyStats {
  double mean = 0.0;
  double moment_ratio = 0.0;  // <W^2> / <W>^2
  double ks_distance = 0.0;
  double stokes_anti_stokes_pearson = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

inline constexpr int kMinEnergyShots = 1000;

inline std::vector<double> line_energies(const ShotEnsemble& ens, int n, int fiber = 0) {
  std::vector<double> w(static_cast<std::size_t>(ens.n_shots));
  for (int i = 0; i < ens.n_shots; ++i) w[static_cast<std::size_t>(i)] = ens.energy(i, fiber, n);
  return w;
}

/// Per-shot energy statistics of one line in fiber 0, and the S1 / AS1
/// energy correlation when both lines are present.
inline EnergyStats energy_stats(const ShotEnsemble& ens, int n) {
  if (ens.n_shots < kMinEnergyShots) throw ConfigError("ensemble.shots", "energy statistics need at least 1000 shots");
  const auto w = line_energies(ens, n);
  EnergyStats s;
  s.n = w.size();
  double m1 = 0.0, m2 = 0.0;
  for (double v : w) {
    m1 += v;
    m2 += v * v;
  }
  m1 /= static_cast<double>(s.n);
  m2 /= static_cast<double>(s.n);
  s.mean = m1;
  s.moment_ratio = m1 > 0.0 ? m2 / (m1 * m1) : 0.0;
  s.ks_distance = ks_distance_exponential(w);
  if (std::count(ens.orders.begin(), ens.orders.end(), -1) && std::count(ens.orders.begin(), ens.orders.end(), 1))
    s.stokes_anti_stokes_pearson = pearson(line_energies(ens, -1), line_energies(ens, 1));
  return s;
}

/// Intensity-weighted mean phase of one pulse: arg sum e |e|.
inline double line_phase(const std::vector<cplx>& e) {
  cplx acc{};
  for (const auto& v : e) acc += v * std::abs(v);
  return std::abs(acc) > 0.0 ? std::arg(acc) : 0.0;
}

/// Largest phase excursion of a pulse from its mean phase over the tau cells
/// holding the central `fraction` of its energy.
inline double central_phase_spread(const std::vector<cplx>& e, double fraction = 0.5) {
  std::vector<double> cum(e.size() + 1, 0.0);
  for (std::size_t k = 0; k < e.size(); ++k) cum[k + 1] = cum[k] + std::norm(e[k]);
  const double total = cum.back();
  if (!(total > 0.0)) return 0.0;
  const double lo = 0.5 * (1.0 - fraction) * total, hi = 0.5 * (1.0 + fraction) * total;
  const double ref = line_phase(e);
  double spread = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k)
    if (cum[k + 1] >= lo && cum[k] <= hi) spread = std::max(spread, std::abs(wrap_phase(std::arg(e[k]) - ref)));
  return spread;
}

/// Per-shot line phases of one fiber.
inline std::vector<double> line_phases(const ShotEnsemble& ens, int n, int fiber = 0) {
  std::vector<double> out(static_cast<std::size_t>(ens.n_shots));
  for (int i = 0; i < ens.n_shots; ++i) out[static_cast<std::size_t>(i)] = line_phase(ens.amplitude(i, fiber, n));
  return out;
}

/// Phase law phi_n = n phi_QF + delta_n with optional Gaussian jitter drawn
/// independently per (shot, fiber, line).
struct SyntheticPhaseModel {
  std::vector<int> lines{-1, 1, 2};
  std::map<int, double> offsets;  // delta_n, shared by both fibers unless fiber_offsets is set
  std::map<int, double> fiber2_offsets;
  double jitter_sigma = 0.0;

  double offset(int n, int fiber) const {
    const auto& m = fiber == 1 && !fiber2_offsets.empty() ? fiber2_offsets : offsets;
    const auto it = m.find(n);
    return it == m.end() ? 0.0 : it->second;
  }

  /// Per-fiber phases [fiber][line][shot].
  std::map<int, std::vector<double>> generate_fiber(int fiber, int shots, std::uint64_t seed, const std::vector<double>& qf) const {
    std::map<int, std::vector<double>> out;
    for (int n : lines) {
      GaussianSource g(CounterRng(seed, static_cast<std::uint64_t>(fiber), static_cast<std::uint64_t>(n + 1000), StreamPurpose::Synthetic, 1));
      auto& v = out[n];
      v.resize(static_cast<std::size_t>(shots));
      for (int i = 0; i < shots; ++i)
        v[static_cast<std::size_t>(i)] = wrap_phase(n * qf[static_cast<std::size_t>(i)] + offset(n, fiber) + (jitter_sigma > 0.0 ? g.normal(jitter_sigma) : 0.0));
    }
    return out;
  }

  std::vector<double> draw_qf(int fiber, int shots, std::uint64_t seed) const {
    GaussianSource g(CounterRng(seed, static_cast<std::uint64_t>(fiber), 0, StreamPurpose::Synthetic, 0));
    std::vector<double> qf(static_cast<std::size_t>(shots));
    for (auto& v : qf) v = wrap_phase(2.0 * kPi * g.uniform());
    return qf;
  }

  PhaseRecord generate(int shots, std::uint64_t seed) const {
    if (shots < 2) throw ConfigError("shots", "need at least 2 shots");
    const auto f1 = generate_fiber(0, shots, seed, draw_qf(0, shots, seed));
    const auto f2 = generate_fiber(1, shots, seed, draw_qf(1, shots, seed));
    PhaseRecord rec;
    for (int n : lines) {
      auto& d = rec.fiber_difference[n];
      d.resize(static_cast<std::size_t>(shots));
      for (int i = 0; i < shots; ++i) d[static_cast<std::size_t>(i)] = wrap_phase(f1.at(n)[static_cast<std::size_t>(i)] - f2.at(n)[static_cast<std::size_t>(i)]);
    }
    return rec;
  }
};

/// Resultant length expected for Phi_nm under per-(shot, fiber, line)
/// Gaussian jitter: four independent kicks per line enter each Phi value.
inline double expected_phi_resultant(int n, int m, double sigma) { return std::exp(-2.0 * sigma * sigma * (n * n + m * m)); }

}  // namespace srscomb

#endif  // SRSCOMB_STATISTICS_HPP
