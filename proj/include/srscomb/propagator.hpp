#ifndef SRSCOMB_PROPAGATOR_HPP
#define SRSCOMB_PROPAGATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace srscomb {

/// Seeds at the medium boundaries. seed_fields has one row per comb line
/// (index n - min_order, values per tau cell at z = 0); the pump row is
/// ignored. seed_coherence holds P^dagger per z cell at tau = 0.
struct InitialConditions {
  int min_order = -1;
  std::vector<std::vector<cplx>> seed_fields;
  std::vector<cplx> seed_coherence;

  std::vector<cplx>& field(int n) { return seed_fields.at(static_cast<std::size_t>(n - min_order)); }
  const std::vector<cplx>& field(int n) const { return seed_fields.at(static_cast<std::size_t>(n - min_order)); }
};

inline InitialConditions zero_initial_conditions(const MediumConfig& cfg, const CharacteristicsGrid& grid) {
  InitialConditions ic;
  ic.min_order = cfg.min_order();
  ic.seed_fields.assign(cfg.line_count(), std::vector<cplx>(static_cast<std::size_t>(grid.ntau)));
  ic.seed_coherence.assign(static_cast<std::size_t>(grid.nz), cplx{});
  return ic;
}

/// Pointwise a*x + b*y of two seed sets.
inline InitialConditions combine(cplx a, const InitialConditions& x, cplx b, const InitialConditions& y) {
  InitialConditions out = x;
  for (std::size_t i = 0; i < out.seed_fields.size(); ++i)
    for (std::size_t k = 0; k < out.seed_fields[i].size(); ++k) out.seed_fields[i][k] = a * x.seed_fields[i][k] + b * y.seed_fields[i][k];
  for (std::size_t j = 0; j < out.seed_coherence.size(); ++j) out.seed_coherence[j] = a * x.seed_coherence[j] + b * y.seed_coherence[j];
  return out;
}

enum class Scheme {
  Midpoint,      // explicit two-stage predictor-corrector, second order
  Extrapolated,  // Richardson combination of Midpoint on the grid and its 2x refinement
};

/// Per-cell Langevin forcing increments added to P^dagger, indexed k * nz + j.
struct LangevinNoise {
  int nz = 0;
  int ntau = 0;
  std::vector<cplx> increments;

  cplx at(int j, int k) const { return increments[static_cast<std::size_t>(k) * static_cast<std::size_t>(nz) + static_cast<std::size_t>(j)]; }
};

struct IntegratorOptions {
  Scheme scheme = Scheme::Midpoint;
  bool record_snapshots = false;
  double max_step_gain = 0.2;
  bool guard_depletion = true;
  double depletion_fraction = 0.1;
  const LangevinNoise* noise = nullptr;
};

/// Per-cell decay factor of the undriven coherence under the Midpoint update.
inline double damping_factor(double gamma, double dtau) {
  const double x = gamma * dtau;
  return 1.0 - x + 0.5 * x * x;
}

/// Draws the Langevin forcing for one realization. Each cell receives a
/// circular Gaussian kick whose variance keeps the undriven coherence
/// variance at its seeded value coherence_seed_strength / dz.
inline LangevinNoise apply_damping_langevin(const MediumConfig& cfg, const CharacteristicsGrid& grid, GaussianSource& rng) {
  if (!cfg.langevin_enabled) throw ConfigError("medium.langevin_enabled", "Langevin forcing requested but disabled");
  LangevinNoise out{grid.nz, grid.ntau, std::vector<cplx>(static_cast<std::size_t>(grid.nz) * static_cast<std::size_t>(grid.ntau))};
  const double rho = damping_factor(cfg.damping, grid.dtau());
  const double var = cfg.coherence_seed_strength / grid.dz() * std::max(0.0, 1.0 - rho * rho);
  if (var == 0.0) return out;
  for (auto& w : out.increments) w = rng.complex_normal(var);
  return out;
}

namespace detail {

inline void check_shapes(const MediumConfig& cfg, const CharacteristicsGrid& grid, const InitialConditions& init) {
  if (init.min_order != cfg.min_order() || init.seed_fields.size() != cfg.line_count())
    throw ConfigError("initial_conditions", "seed lines do not match the configuration");
  for (const auto& row : init.seed_fields)
    if (row.size() != static_cast<std::size_t>(grid.ntau)) throw ConfigError("initial_conditions", "seed field length differs from ntau");
  if (init.seed_coherence.size() != static_cast<std::size_t>(grid.nz))
    throw ConfigError("initial_conditions", "seed coherence length differs from nz");
}

inline void check_step(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid, double limit) {
  double mu = 0.0;
  for (const auto& a : cfg.alpha1) mu = std::max(mu, std::abs(a));
  const double step = mu * pump.max_modulus() * std::max(grid.dz(), grid.dtau());
  if (step >= limit)
    throw NumericError("per-step gain " + std::to_string(step) + " exceeds " + std::to_string(limit) +
                       "; refine the grid to at least " + std::to_string(static_cast<int>(std::ceil(mu * pump.max_modulus() / limit)) + 1) +
                       " steps per axis");
}

inline void check_noise(const LangevinNoise* noise, const CharacteristicsGrid& grid) {
  if (noise && (noise->nz != grid.nz || noise->ntau != grid.ntau)) throw ConfigError("noise", "Langevin record does not match the grid");
}

inline void check_finite(const std::vector<cplx>& v, const char* what) {
  for (const auto& x : v)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) throw NumericError(std::string("non-finite value in ") + what);
}

inline void check_depletion(const FieldRecord& rec, const PumpPulse& pump, const IntegratorOptions& opts) {
  if (!opts.guard_depletion) return;
  double photons = 0.0;
  for (std::size_t i = 0; i < rec.fields.size(); ++i)
    if (static_cast<int>(i) + rec.min_order != 0) photons += line_energy(rec.fields[i], rec.grid.dtau());
  if (photons > opts.depletion_fraction * pump.photons)
    throw NumericError("sideband photon number " + std::to_string(photons) + " exceeds " + std::to_string(opts.depletion_fraction) +
                       " of the pump; the undepleted-pump model is out of range");
}

inline std::vector<cplx> phases(double delta_beta, const CharacteristicsGrid& grid) {
  std::vector<cplx> out(static_cast<std::size_t>(grid.nz));
  for (int j = 0; j < grid.nz; ++j) out[static_cast<std::size_t>(j)] = std::polar(1.0, delta_beta * grid.z_center(j));
  return out;
}

/// Midpoint sweep of the closed two-mode system in s = conj(e_-1), a = e_+1, q.
inline FieldRecord sweep_two_mode(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid,
                                  const InitialConditions& init, const IntegratorOptions& opts) {
  const int nz = grid.nz, nt = grid.ntau;
  const double dz = grid.dz(), dt = grid.dtau();
  const cplx mu0 = cfg.coupling(0), mu1 = cfg.coupling(1);
  const auto ph0 = phases(cfg.delta_beta(0), grid);
  const auto ph1 = phases(cfg.delta_beta(1), grid);
  const auto p = pump.sample(grid);
  const cplx I{0.0, 1.0};
  const cplx Dd{-cfg.damping * dt, 0.0};

  FieldRecord rec;
  rec.grid = grid;
  rec.min_order = cfg.min_order();
  rec.fields = init.seed_fields;
  rec.fields[cfg.line_index(0)] = p;
  std::vector<cplx> q = init.seed_coherence;
  auto& eS = rec.fields[cfg.line_index(-1)];
  auto& eA = rec.fields[cfg.line_index(1)];
  if (opts.record_snapshots)
    rec.snapshots.assign(static_cast<std::size_t>(nz) + 1, std::vector<std::vector<cplx>>(rec.fields.size(), std::vector<cplx>(static_cast<std::size_t>(nt))));

  for (int k = 0; k < nt; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    cplx s = std::conj(eS[kk]);
    cplx a = eA[kk];
    if (opts.record_snapshots) {
      rec.snapshots[0][cfg.line_index(-1)][kk] = eS[kk];
      rec.snapshots[0][cfg.line_index(1)][kk] = a;
    }
    const cplx pk = p[kk];
    for (int j = 0; j < nz; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const cplx c0 = mu0 * pk * ph0[jj];
      const cplx c1 = mu1 * std::conj(pk) * ph1[jj];
      const cplx X = -I * dz * std::conj(c0);
      const cplx Y = I * dz * std::conj(c1);
      const cplx U = I * dt * c0;
      const cplx V = I * dt * c1;
      cplx& qj = q[jj];
      const cplx s1 = s + X * qj + 0.5 * X * (U * s + V * a + Dd * qj);
      const cplx a1 = a + Y * qj + 0.5 * Y * (U * s + V * a + Dd * qj);
      const cplx q1 = qj + U * s + V * a + Dd * qj + 0.5 * (Dd * (U * s + V * a) + (U * X + V * Y + Dd * Dd) * qj);
      s = s1;
      a = a1;
      qj = q1;
      if (opts.noise) qj += opts.noise->at(j, k);
      if (opts.record_snapshots) {
        rec.snapshots[jj + 1][cfg.line_index(-1)][kk] = std::conj(s);
        rec.snapshots[jj + 1][cfg.line_index(1)][kk] = a;
      }
    }
    if (!std::isfinite(std::norm(s)) || !std::isfinite(std::norm(a))) throw NumericError("non-finite field at tau cell " + std::to_string(k));
    eS[kk] = std::conj(s);
    eA[kk] = a;
  }
  if (opts.record_snapshots)
    for (auto& snap : rec.snapshots) snap[cfg.line_index(0)] = p;
  check_finite(q, "molecular coherence");
  rec.coherence = std::move(q);
  return rec;
}

/// Midpoint sweep of the full cascade. Lines with |order| > n_orders are
/// passed through unchanged.
inline FieldRecord sweep_multiline(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid,
                                   const InitialConditions& init, const IntegratorOptions& opts, int n_orders) {
  const int nz = grid.nz, nt = grid.ntau;
  const double dz = grid.dz(), dt = grid.dtau();
  const int lo = std::max(cfg.min_order(), -n_orders), hi = std::min(cfg.max_order(), n_orders);
  const int nl = hi - lo + 1;
  const auto base = static_cast<std::size_t>(lo - cfg.min_order());
  const auto pump_slot = static_cast<std::size_t>(-lo);
  const cplx I{0.0, 1.0};

  // Coupling c = i mu_n exp(i dbeta_n z) for pairs (n, n-1) with lo < n <= hi, indexed n - lo - 1.
  std::vector<std::vector<cplx>> cpl(static_cast<std::size_t>(nl - 1), std::vector<cplx>(static_cast<std::size_t>(nz)));
  for (int n = lo + 1; n <= hi; ++n) {
    const auto ph = phases(cfg.delta_beta(n), grid);
    for (int j = 0; j < nz; ++j) cpl[static_cast<std::size_t>(n - lo - 1)][static_cast<std::size_t>(j)] = cfg.coupling(n) * ph[static_cast<std::size_t>(j)];
  }
  const double gamma = cfg.damping;
  const auto p = pump.sample(grid);

  // Sideband-sideband terms are only consistent on the pump's scale.
  const double scale = pump.photon_scale(grid.duration);

  FieldRecord rec;
  rec.grid = grid;
  rec.min_order = cfg.min_order();
  rec.fields = init.seed_fields;
  for (auto& row : rec.fields)
    for (auto& v : row) v /= scale;
  rec.fields[cfg.line_index(0)] = p;
  std::vector<cplx> q = init.seed_coherence;
  for (auto& v : q) v /= scale;
  if (opts.record_snapshots) {
    rec.snapshots.assign(static_cast<std::size_t>(nz) + 1, rec.fields);
  }

  std::vector<cplx> e(static_cast<std::size_t>(nl)), em(static_cast<std::size_t>(nl)), fe(static_cast<std::size_t>(nl));
  // Field derivative and coherence source at one cell; the pump slot is held fixed.
  auto rates = [&](const std::vector<cplx>& x, cplx qq, std::size_t j, std::vector<cplx>& dx) -> cplx {
    cplx src{};
    for (int i = 0; i < nl; ++i) dx[static_cast<std::size_t>(i)] = cplx{};
    for (int i = 1; i < nl; ++i) {
      // pair (upper = i, lower = i - 1) in local indices
      const cplx c = cpl[static_cast<std::size_t>(i - 1)][j];
      const auto u = static_cast<std::size_t>(i), l = static_cast<std::size_t>(i - 1);
      dx[l] += I * c * x[u] * std::conj(qq);
      dx[u] += I * std::conj(c) * x[l] * qq;
      src += I * c * x[u] * std::conj(x[l]);
    }
    dx[pump_slot] = cplx{};
    return src - gamma * qq;
  };

  for (int k = 0; k < nt; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    for (int i = 0; i < nl; ++i) e[static_cast<std::size_t>(i)] = rec.fields[base + static_cast<std::size_t>(i)][kk];
    for (int j = 0; j < nz; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const cplx fq = rates(e, q[jj], jj, fe);
      for (int i = 0; i < nl; ++i) em[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i)] + 0.5 * dz * fe[static_cast<std::size_t>(i)];
      const cplx qm = q[jj] + 0.5 * dt * fq;
      const cplx fqm = rates(em, qm, jj, fe);
      for (int i = 0; i < nl; ++i) e[static_cast<std::size_t>(i)] += dz * fe[static_cast<std::size_t>(i)];
      q[jj] += dt * fqm;
      if (opts.noise) q[jj] += opts.noise->at(j, k) / scale;
      if (opts.record_snapshots)
        for (int i = 0; i < nl; ++i) rec.snapshots[jj + 1][base + static_cast<std::size_t>(i)][kk] = e[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < nl; ++i) {
      if (!std::isfinite(std::norm(e[static_cast<std::size_t>(i)]))) throw NumericError("non-finite field at tau cell " + std::to_string(k));
      rec.fields[base + static_cast<std::size_t>(i)][kk] = e[static_cast<std::size_t>(i)];
    }
  }
  check_finite(q, "molecular coherence");
  rec.coherence = std::move(q);
  for (auto& v : rec.coherence) v *= scale;
  const auto pump_line = cfg.line_index(0);
  for (std::size_t l = 0; l < rec.fields.size(); ++l)
    if (l != pump_line)
      for (auto& v : rec.fields[l]) v *= scale;
  for (auto& snap : rec.snapshots)
    for (std::size_t l = 0; l < snap.size(); ++l)
      if (l != pump_line)
        for (auto& v : snap[l]) v *= scale;
  return rec;
}

/// Seeds of a grid replicated onto its 2x refinement.
inline InitialConditions refine_seeds(const InitialConditions& init) {
  InitialConditions out;
  out.min_order = init.min_order;
  for (const auto& row : init.seed_fields) {
    std::vector<cplx> r(2 * row.size());
    for (std::size_t k = 0; k < row.size(); ++k) r[2 * k] = r[2 * k + 1] = row[k];
    out.seed_fields.push_back(std::move(r));
  }
  out.seed_coherence.resize(2 * init.seed_coherence.size());
  for (std::size_t j = 0; j < init.seed_coherence.size(); ++j) out.seed_coherence[2 * j] = out.seed_coherence[2 * j + 1] = init.seed_coherence[j];
  return out;
}

inline std::vector<cplx> extrapolate_binned(const std::vector<cplx>& coarse, const std::vector<cplx>& fine) {
  std::vector<cplx> out(coarse.size());
  for (std::size_t k = 0; k < coarse.size(); ++k) out[k] = (2.0 * (fine[2 * k] + fine[2 * k + 1]) - coarse[k]) / 3.0;
  return out;
}

template <class Sweep>
FieldRecord run_scheme(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid, const InitialConditions& init,
                       const IntegratorOptions& opts, Sweep&& sweep) {
  validate(cfg);
  validate(pump);
  check_shapes(cfg, grid, init);
  check_noise(opts.noise, grid);
  if (opts.scheme == Scheme::Midpoint) {
    check_step(cfg, pump, grid, opts.max_step_gain);
    FieldRecord rec = sweep(grid, init, opts);
    check_depletion(rec, pump, opts);
    return rec;
  }
  if (opts.noise) throw ConfigError("integrator.scheme", "Langevin forcing is not supported with the extrapolated scheme");
  check_step(cfg, pump, grid, opts.max_step_gain);
  FieldRecord coarse = sweep(grid, init, opts);
  const FieldRecord fine = sweep(grid.refined(), refine_seeds(init), opts);
  for (std::size_t i = 0; i < coarse.fields.size(); ++i)
    if (static_cast<int>(i) + coarse.min_order != 0) coarse.fields[i] = extrapolate_binned(coarse.fields[i], fine.fields[i]);
  coarse.coherence = extrapolate_binned(coarse.coherence, fine.coherence);
  if (opts.record_snapshots) {
    for (std::size_t node = 0; node < coarse.snapshots.size(); ++node)
      for (std::size_t i = 0; i < coarse.fields.size(); ++i)
        if (static_cast<int>(i) + coarse.min_order != 0)
          coarse.snapshots[node][i] = extrapolate_binned(coarse.snapshots[node][i], fine.snapshots[2 * node][i]);
  }
  check_depletion(coarse, pump, opts);
  return coarse;
}

}  // namespace detail

/// Integrates the first-order Stokes / anti-Stokes system (lines -1, 0, +1).
inline FieldRecord integrate_two_mode(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid,
                                      const InitialConditions& init, const IntegratorOptions& opts = {}) {
  if (cfg.min_order() != -1 || cfg.max_order() != 1) throw ConfigError("medium.lines", "two-mode integration needs exactly lines -1, 0, +1");
  return detail::run_scheme(cfg, pump, grid, init, opts, [&](const CharacteristicsGrid& g, const InitialConditions& ic, const IntegratorOptions& o) {
    return detail::sweep_two_mode(cfg, pump, g, ic, o);
  });
}

/// Integrates the cascade over lines -n_orders..n_orders (clipped to the
/// configured lines) with the full order-coupled coherence source.
inline FieldRecord integrate_multiline(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid,
                                       const InitialConditions& init, int n_orders, const IntegratorOptions& opts = {}) {
  if (n_orders < 1) throw ConfigError("n_orders", "must be at least 1");
  return detail::run_scheme(cfg, pump, grid, init, opts, [&](const CharacteristicsGrid& g, const InitialConditions& ic, const IntegratorOptions& o) {
    return detail::sweep_multiline(cfg, pump, g, ic, o, n_orders);
  });
}

/// Dispatches to the two-mode fast path when the configuration allows it.
inline FieldRecord integrate(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid, const InitialConditions& init,
                             const IntegratorOptions& opts = {}) {
  if (cfg.min_order() == -1 && cfg.max_order() == 1) return integrate_two_mode(cfg, pump, grid, init, opts);
  return integrate_multiline(cfg, pump, grid, init, std::max(-cfg.min_order(), cfg.max_order()), opts);
}

struct PhotonBalance {
  double weighted_field_change = 0.0;  // sum_n n [N_n(L) - N_n(0)]
  double molecular_change = 0.0;       // N_mol(T) - N_mol(0)
  double residual = 0.0;               // sum of the two
  double generated = 0.0;              // scale: sum over sidebands of |N_n(L) - N_n(0)|
};

/// Order-weighted photon bookkeeping of one realization.
inline PhotonBalance manley_rowe_balance(const InitialConditions& init, const FieldRecord& rec) {
  PhotonBalance b;
  const double dt = rec.grid.dtau(), dz = rec.grid.dz();
  for (std::size_t i = 0; i < rec.fields.size(); ++i) {
    const int n = static_cast<int>(i) + rec.min_order;
    if (n == 0) continue;
    const double d = line_energy(rec.fields[i], dt) - line_energy(init.seed_fields[i], dt);
    b.weighted_field_change += n * d;
    b.generated += std::abs(d);
  }
  b.molecular_change = line_energy(rec.coherence, dz) - line_energy(init.seed_coherence, dz);
  b.residual = b.weighted_field_change + b.molecular_change;
  return b;
}

}  // namespace srscomb

#endif  // SRSCOMB_PROPAGATOR_HPP
