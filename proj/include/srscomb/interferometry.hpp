#ifndef SRSCOMB_INTERFEROMETRY_HPP
#define SRSCOMB_INTERFEROMETRY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "ensemble.hpp"
#include "moments.hpp"
#include "rng.hpp"

namespace srscomb {

/// Wraps an angle to (-pi, pi].
inline double wrap_phase(double x) {
  double r = std::remainder(x, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

struct DetectorConfig {
  int n_pixels = 256;
  double fringe_wavenumber = 2.0 * kPi / 32.0;  // rad / pixel
  double beam_sigma = 48.0;                     // pixels
  double piston_jitter_sigma = 0.0;             // rad
  double additive_noise_sigma = 0.0;            // counts
  double visibility_degradation = 1.0;          // eta
  bool fit_wavenumber = false;
  double window_fraction = 0.1;                 // fit where the profile exceeds this fraction of its peak

  double center() const { return 0.5 * (n_pixels - 1); }

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

inline void validate(const DetectorConfig& d, const std::string& p = "detector") {
  if (d.n_pixels < 16) throw ConfigError(p + ".n_pixels", "need at least 16 pixels");
  if (!(d.fringe_wavenumber > 0.0 && d.fringe_wavenumber < kPi)) throw ConfigError(p + ".fringe_wavenumber", "must lie in (0, pi)");
  if (2.0 * kPi / d.fringe_wavenumber < 8.0) throw ConfigError(p + ".fringe_wavenumber", "need at least 8 pixels per fringe period");
  if (!(d.beam_sigma > 0.0)) throw ConfigError(p + ".beam_sigma", "must be positive");
  if (4.0 * d.beam_sigma * d.fringe_wavenumber / (2.0 * kPi) < 4.0) throw ConfigError(p + ".beam_sigma", "need at least 4 fringes across the beam");
  if (!(d.piston_jitter_sigma >= 0.0)) throw ConfigError(p + ".piston_jitter_sigma", "must be nonnegative");
  if (!(d.additive_noise_sigma >= 0.0)) throw ConfigError(p + ".additive_noise_sigma", "must be nonnegative");
  if (!(d.visibility_degradation > 0.0 && d.visibility_degradation <= 1.0)) throw ConfigError(p + ".visibility_degradation", "must lie in (0, 1]");
  if (!(d.window_fraction > 0.0 && d.window_fraction < 1.0)) throw ConfigError(p + ".window_fraction", "must lie in (0, 1)");
}

/// Detector settings that emulate the measured pump pair: mode-overlap
/// visibility 0.85 and a Gaussian piston jitter with 0.78 rad HWHM.
inline DetectorConfig calibrated_pump_detector(DetectorConfig d = {}) {
  d.visibility_degradation = 0.85;
  d.piston_jitter_sigma = 0.78 / std::sqrt(2.0 * std::log(2.0));
  return d;
}

inline std::vector<double> beam_profile(const DetectorConfig& d) {
  std::vector<double> g(static_cast<std::size_t>(d.n_pixels));
  for (int x = 0; x < d.n_pixels; ++x) {
    const double u = (x - d.center()) / d.beam_sigma;
    g[static_cast<std::size_t>(x)] = std::exp(-0.5 * u * u);
  }
  return g;
}

struct Interferogram {
  std::vector<double> intensity;
  int line = 0;
  int shot = 0;
  std::string fibers = "1-2";
  double jitter = 0.0;  // piston phase drawn for this trace
};

struct FringeFit {
  double visibility = 0.0;
  double phase = 0.0;
  double residual = 0.0;
  bool success = false;
  double offset = 0.0;
  double amplitude = 0.0;
  double wavenumber = 0.0;
};

/// Two-beam interference of time-integrated amplitudes on a 1-D detector:
///   I(x) = G(x) [W1 + W2 + 2 eta |J| cos(k (x - c) + arg J + theta)] + noise
/// with J = int amp1 conj(amp2) dtau, clipped at zero.
inline Interferogram synthesize_fringe(const std::vector<cplx>& amp1, const std::vector<cplx>& amp2, double dtau, const DetectorConfig& det,
                                       GaussianSource* rng = nullptr) {
  if (amp1.size() != amp2.size()) throw ConfigError("amplitudes", "the two arms must share the tau grid");
  validate(det);
  double w1 = 0.0, w2 = 0.0;
  cplx J{};
  for (std::size_t k = 0; k < amp1.size(); ++k) {
    w1 += std::norm(amp1[k]);
    w2 += std::norm(amp2[k]);
    J += amp1[k] * std::conj(amp2[k]);
  }
  w1 *= dtau;
  w2 *= dtau;
  J *= dtau;
  Interferogram ig;
  if (rng && det.piston_jitter_sigma > 0.0) ig.jitter = rng->normal(det.piston_jitter_sigma);
  const double phase = (std::abs(J) > 0.0 ? std::arg(J) : 0.0) + ig.jitter;
  const double fringe = 2.0 * det.visibility_degradation * std::abs(J);
  const auto G = beam_profile(det);
  ig.intensity.resize(G.size());
  for (int x = 0; x < det.n_pixels; ++x) {
    double v = G[static_cast<std::size_t>(x)] * (w1 + w2 + fringe * std::cos(det.fringe_wavenumber * (x - det.center()) + phase));
    if (rng && det.additive_noise_sigma > 0.0) v += rng->normal(det.additive_noise_sigma);
    ig.intensity[static_cast<std::size_t>(x)] = std::max(0.0, v);
  }
  return ig;
}

namespace detail {

inline FringeFit fit_fixed_k(const std::vector<double>& y, const std::vector<double>& x, double k, double center) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = k * (x[static_cast<std::size_t>(i)] - center);
    A(i, 0) = 1.0;
    A(i, 1) = std::cos(t);
    A(i, 2) = std::sin(t);
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(b);
  FringeFit f;
  f.offset = c(0);
  f.amplitude = std::hypot(c(1), c(2));
  f.phase = wrap_phase(std::atan2(-c(2), c(1)));
  f.residual = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(n));
  f.wavenumber = k;
  return f;
}

}  // namespace detail

/// Normalizes a trace by the beam profile and fits a + b cos(k (x - c) + phi)
/// over the window where the profile exceeds window_fraction of its peak.
inline FringeFit extract_visibility_phase(const Interferogram& ig, const std::vector<double>& profile, const DetectorConfig& det) {
  if (profile.size() != ig.intensity.size()) throw ConfigError("beam_profile", "profile and trace lengths differ");
  const double gmax = *std::max_element(profile.begin(), profile.end());
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] < det.window_fraction * gmax) continue;
    if (!(profile[i] > 0.0)) throw ConfigError("beam_profile", "profile must be positive over the fit window");
    xs.push_back(static_cast<double>(i));
    ys.push_back(ig.intensity[i] / profile[i]);
  }
  if (xs.size() < 8) throw ConfigError("beam_profile", "fit window holds fewer than 8 pixels");

  FringeFit f = detail::fit_fixed_k(ys, xs, det.fringe_wavenumber, det.center());
  if (det.fit_wavenumber) {
    double lo = 0.8 * det.fringe_wavenumber, hi = 1.2 * det.fringe_wavenumber;
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
    double f1 = detail::fit_fixed_k(ys, xs, x1, det.center()).residual, f2 = detail::fit_fixed_k(ys, xs, x2, det.center()).residual;
    for (int it = 0; it < 80 && hi - lo > 1e-12 * det.fringe_wavenumber; ++it) {
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1; x1 = hi - r * (hi - lo); f1 = detail::fit_fixed_k(ys, xs, x1, det.center()).residual;
      } else {
        lo = x1; x1 = x2; f1 = f2; x2 = lo + r * (hi - lo); f2 = detail::fit_fixed_k(ys, xs, x2, det.center()).residual;
      }
    }
    const FringeFit g = detail::fit_fixed_k(ys, xs, 0.5 * (lo + hi), det.center());
    if (g.residual < f.residual) f = g;
  }
  const double sigma_b = f.residual * std::sqrt(2.0 / static_cast<double>(xs.size()));
  f.success = f.offset > 0.0 && f.amplitude >= std::max(1e-9 * f.offset, 3.0 * sigma_b);
  f.visibility = f.offset > 0.0 ? std::clamp(f.amplitude / f.offset, 0.0, 1.0) : 0.0;
  if (!f.success) f.phase = 0.0;
  return f;
}

inline FringeFit extract_visibility_phase(const Interferogram& ig, const DetectorConfig& det) {
  return extract_visibility_phase(ig, beam_profile(det), det);
}

/// Visibility of two single-mode amplitudes interfered with unit overlap.
inline double pair_visibility(cplx u1, cplx u2) {
  const double d = std::norm(u1) + std::norm(u2);
  return d > 0.0 ? 2.0 * std::abs(u1) * std::abs(u2) / d : 0.0;
}

struct FitRow {
  int shot = 0;
  int line = 0;
  std::string fibers = "1-2";
  FringeFit fit;
};

struct FitTable {
  std::vector<FitRow> rows;  // ordered by shot, then line (pump as order 0)

  std::vector<const FitRow*> line(int n) const {
    std::vector<const FitRow*> out;
    for (const auto& r : rows)
      if (r.line == n) out.push_back(&r);
    return out;
  }
};

struct VirtualExperimentOptions {
  DetectorConfig detector;
  std::optional<DetectorConfig> pump_detector;  // defaults to `detector`
  bool include_pump = true;
  int threads = 0;
};

/// Fringe fits for every shot and requested line of a two-fiber ensemble,
/// plus the pump line modeled as an identical coherent amplitude in both arms.
inline FitTable run_virtual_experiment(const ShotEnsemble& ens, const std::vector<int>& lines, const VirtualExperimentOptions& opts = {}) {
  if (ens.n_fibers != 2) throw ConfigError("ensemble.fibers", "the virtual interferometer needs a two-fiber ensemble");
  validate(opts.detector);
  const DetectorConfig pump_det = opts.pump_detector.value_or(opts.detector);
  validate(pump_det, "pump_detector");
  for (int n : lines) ens.line_slot(n);
  std::vector<int> all;
  if (opts.include_pump) all.push_back(0);
  all.insert(all.end(), lines.begin(), lines.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const auto per_shot = all.size();
  FitTable table;
  table.rows.resize(static_cast<std::size_t>(ens.n_shots) * per_shot);
  const auto G = beam_profile(opts.detector);
  const auto Gp = beam_profile(pump_det);
  detail::parallel_for(static_cast<std::size_t>(ens.n_shots), opts.threads, [&](std::size_t s) {
    const int shot = static_cast<int>(s);
    for (std::size_t li = 0; li < per_shot; ++li) {
      const int n = all[li];
      GaussianSource rng(CounterRng(ens.master_seed, s, static_cast<std::uint64_t>(n + 1000), StreamPurpose::Interferometer));
      const bool is_pump = n == 0;
      const DetectorConfig& det = is_pump ? pump_det : opts.detector;
      Interferogram ig;
      if (is_pump) {
        const auto p = ens.pump_amplitude(shot);
        ig = synthesize_fringe(p, p, ens.grid.dtau(), det, &rng);
      } else {
        ig = synthesize_fringe(ens.amplitude(shot, 0, n), ens.amplitude(shot, 1, n), ens.grid.dtau(), det, &rng);
      }
      FitRow& row = table.rows[s * per_shot + li];
      row.shot = shot;
      row.line = n;
      row.fit = extract_visibility_phase(ig, is_pump ? Gp : G, det);
    }
  });
  return table;
}

inline void write_fit_table_csv(const std::string& path, const FitTable& t) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "shot,line,fiber_pair,visibility,phi,residual,success\n";
  for (const auto& r : t.rows)
    os << r.shot << ',' << r.line << ',' << r.fibers << ',' << format_number(r.fit.visibility) << ',' << format_number(r.fit.phase) << ','
       << format_number(r.fit.residual) << ',' << (r.fit.success ? 1 : 0) << '\n';
  if (!os) throw IoError("write failed for " + path);
}

}  // namespace srscomb

#endif  // SRSCOMB_INTERFEROMETRY_HPP
