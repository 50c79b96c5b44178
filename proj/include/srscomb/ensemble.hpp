#ifndef SRSCOMB_ENSEMBLE_HPP
#define SRSCOMB_ENSEMBLE_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "core.hpp"
#include "propagator.hpp"
#include "rng.hpp"
#include "serialize.hpp"

namespace srscomb {

/// Vacuum seeds in the paired-ordering c-number representation: the
/// anti-Stokes field and the molecular coherence carry white circular
/// Gaussian noise of unit correlator strength (per-cell variance
/// strength / cell size); every other channel starts at zero.
inline InitialConditions sample_vacuum(const CharacteristicsGrid& grid, const MediumConfig& cfg, GaussianSource& rng) {
  InitialConditions ic = zero_initial_conditions(cfg, grid);
  if (cfg.has_order(1)) {
    const double var = cfg.field_seed_strength / grid.dtau();
    for (auto& v : ic.field(1)) v = rng.complex_normal(var);
  }
  const double var_q = cfg.coherence_seed_strength / grid.dz();
  for (auto& v : ic.seed_coherence) v = rng.complex_normal(var_q);
  return ic;
}

struct EnsembleOptions {
  IntegratorOptions integrator;
  int n_orders = 0;               // 0: every configured line
  double pump_energy_jitter = 0.0;  // relative rms of per-shot pump energy
  int threads = 0;                // 0: hardware concurrency
};

/// Complex line amplitudes at z = L for every shot, fiber and sideband.
struct ShotEnsemble {
  MediumConfig config;
  PumpPulse pump;
  CharacteristicsGrid grid;
  std::uint64_t master_seed = 0;
  int n_shots = 0;
  int n_fibers = 1;
  std::vector<int> orders;         // sideband orders stored, ascending
  std::vector<double> pump_scale;  // per-shot pump amplitude factor
  std::vector<cplx> data;          // [shot][fiber][line][tau]

  std::size_t line_slot(int n) const {
    const auto it = std::find(orders.begin(), orders.end(), n);
    if (it == orders.end()) throw ConfigError("line", "order " + std::to_string(n) + " not in ensemble");
    return static_cast<std::size_t>(it - orders.begin());
  }

  std::size_t offset(int shot, int fiber, std::size_t slot) const {
    return ((static_cast<std::size_t>(shot) * static_cast<std::size_t>(n_fibers) + static_cast<std::size_t>(fiber)) * orders.size() + slot) *
           static_cast<std::size_t>(grid.ntau);
  }

  std::vector<cplx> amplitude(int shot, int fiber, int n) const {
    const auto o = offset(shot, fiber, line_slot(n));
    return {data.begin() + static_cast<std::ptrdiff_t>(o), data.begin() + static_cast<std::ptrdiff_t>(o) + grid.ntau};
  }

  /// Pump envelope of one shot, identical in both fibers.
  std::vector<cplx> pump_amplitude(int shot) const {
    auto p = pump.sample(grid);
    for (auto& v : p) v *= pump_scale[static_cast<std::size_t>(shot)];
    return p;
  }

  double energy(int shot, int fiber, int n) const { return line_energy(amplitude(shot, fiber, n), grid.dtau()); }
};

namespace detail {

[[noreturn]] inline void rethrow_annotated(const std::exception_ptr& ep, const std::string& prefix) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError& e) {
    throw ConfigError(e.key(), prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  }
}

inline int worker_count(int requested, std::size_t tasks) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(tasks, 1)));
}

/// Runs task(i) for i in [0, count) on up to `threads` workers. The first
/// failing index (lowest) is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t count, int threads, F&& task) {
  const int nw = worker_count(threads, count);
  std::atomic<std::size_t> next{0};
  std::mutex m;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  if (nw <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Pump amplitude factor of one shot; depends on (master_seed, shot) only.
inline double shot_pump_scale(std::uint64_t master_seed, int shot, double energy_jitter) {
  if (energy_jitter == 0.0) return 1.0;
  GaussianSource g(CounterRng(master_seed, static_cast<std::uint64_t>(shot), 0, StreamPurpose::PumpJitter));
  return std::sqrt(std::max(0.0, 1.0 + energy_jitter * g.normal()));
}

/// One realization, reproducible in isolation from (master_seed, shot, fiber).
inline FieldRecord run_shot(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid, std::uint64_t master_seed, int shot,
                            int fiber, const EnsembleOptions& opts = {}) {
  GaussianSource vac(CounterRng(master_seed, static_cast<std::uint64_t>(shot), static_cast<std::uint64_t>(fiber), StreamPurpose::VacuumSeed));
  const InitialConditions ic = sample_vacuum(grid, cfg, vac);
  PumpPulse p = pump;
  const double a = shot_pump_scale(master_seed, shot, opts.pump_energy_jitter);
  p.peak *= a;
  p.photons *= a * a;
  IntegratorOptions io = opts.integrator;
  LangevinNoise noise;
  if (cfg.langevin_enabled) {
    GaussianSource lg(CounterRng(master_seed, static_cast<std::uint64_t>(shot), static_cast<std::uint64_t>(fiber), StreamPurpose::Langevin));
    noise = apply_damping_langevin(cfg, grid, lg);
    io.noise = &noise;
  }
  FieldRecord rec = opts.n_orders > 0 ? integrate_multiline(cfg, p, grid, ic, opts.n_orders, io) : integrate(cfg, p, grid, ic, io);
  rec.seed = stream_key({master_seed, static_cast<std::uint64_t>(shot), static_cast<std::uint64_t>(fiber)});
  return rec;
}

inline ShotEnsemble run_ensemble(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid, int n_shots, int n_fibers,
                                 std::uint64_t master_seed, const EnsembleOptions& opts = {}) {
  if (n_shots < 1) throw ConfigError("ensemble.shots", "must be at least 1");
  if (n_fibers != 1 && n_fibers != 2) throw ConfigError("ensemble.fibers", "must be 1 or 2");
  validate(cfg);
  validate(pump);
  ShotEnsemble ens;
  ens.config = cfg;
  ens.pump = pump;
  ens.grid = grid;
  ens.master_seed = master_seed;
  ens.n_shots = n_shots;
  ens.n_fibers = n_fibers;
  for (const auto& l : cfg.lines)
    if (l.order != 0) ens.orders.push_back(l.order);
  ens.pump_scale.resize(static_cast<std::size_t>(n_shots));
  for (int i = 0; i < n_shots; ++i) ens.pump_scale[static_cast<std::size_t>(i)] = shot_pump_scale(master_seed, i, opts.pump_energy_jitter);
  ens.data.assign(static_cast<std::size_t>(n_shots) * static_cast<std::size_t>(n_fibers) * ens.orders.size() * static_cast<std::size_t>(grid.ntau), cplx{});

  const std::size_t tasks = static_cast<std::size_t>(n_shots) * static_cast<std::size_t>(n_fibers);
  detail::parallel_for(tasks, opts.threads, [&](std::size_t t) {
      const int shot = static_cast<int>(t / static_cast<std::size_t>(n_fibers));
      const int fiber = static_cast<int>(t % static_cast<std::size_t>(n_fibers));
      try {
        const FieldRecord rec = run_shot(cfg, pump, grid, master_seed, shot, fiber, opts);
        for (std::size_t s = 0; s < ens.orders.size(); ++s) {
          const auto& f = rec.line(ens.orders[s]);
          std::copy(f.begin(), f.end(), ens.data.begin() + static_cast<std::ptrdiff_t>(ens.offset(shot, fiber, s)));
        }
      } catch (const Error&) {
        detail::rethrow_annotated(std::current_exception(), "shot " + std::to_string(shot) + " fiber " + std::to_string(fiber) + ": ");
      }
  });
  return ens;
}

// Binary layout (little endian):
//   8 bytes  magic "SRSCENS\0"
//   uint32   format version
//   uint32   header length in bytes
//   header   UTF-8 JSON (config, pump, grid, seed, shots, fibers, orders, pump_scale)
//   float64  re, im pairs in [shot][fiber][line][tau] order
inline constexpr char kEnsembleMagic[8] = {'S', 'R', 'S', 'C', 'E', 'N', 'S', '\0'};
inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

inline json ensemble_header(const ShotEnsemble& e) {
  json scales = json::array();
  for (double s : e.pump_scale) scales.push_back(s);
  return {{"medium", to_json(e.config)},
          {"pump", to_json(e.pump)},
          {"grid", to_json(e.grid)},
          {"master_seed", e.master_seed},
          {"shots", e.n_shots},
          {"fibers", e.n_fibers},
          {"orders", e.orders},
          {"ntau", e.grid.ntau},
          {"dtau", e.grid.dtau()},
          {"pump_scale", scales}};
}

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated ensemble file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace detail

inline void write_ensemble(const std::string& path, const ShotEnsemble& e) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  const std::string header = ensemble_header(e).dump();
  os.write(kEnsembleMagic, 8);
  detail::put_u32(os, kEnsembleFormatVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::vector<unsigned char> raw(e.data.size() * 16);
  for (std::size_t i = 0; i < e.data.size(); ++i) {
    const double parts[2] = {e.data[i].real(), e.data[i].imag()};
    for (int c = 0; c < 2; ++c) {
      std::uint64_t u;
      std::memcpy(&u, &parts[c], 8);
      for (int b = 0; b < 8; ++b) raw[i * 16 + static_cast<std::size_t>(c) * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>((u >> (8 * b)) & 0xff);
    }
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw IoError("write failed for " + path);
}

inline ShotEnsemble read_ensemble(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kEnsembleMagic, 8) != 0) throw IoError(path + " is not an ensemble file");
  const auto version = detail::get_u32(is);
  if (version != kEnsembleFormatVersion) throw IoError(path + ": unsupported format version " + std::to_string(version));
  const auto hlen = detail::get_u32(is);
  std::string header(hlen, '\0');
  if (!is.read(header.data(), hlen)) throw IoError("truncated ensemble header");
  json h;
  try {
    h = json::parse(header);
  } catch (const json::exception& ex) {
    throw IoError(path + ": bad header: " + ex.what());
  }
  ShotEnsemble e;
  try {
    e.config = medium_from_json(h.at("medium"));
    e.pump = pump_from_json(h.at("pump"));
    e.grid = grid_from_json(h.at("grid"));
    e.master_seed = h.at("master_seed").get<std::uint64_t>();
    e.n_shots = h.at("shots").get<int>();
    e.n_fibers = h.at("fibers").get<int>();
    e.orders = h.at("orders").get<std::vector<int>>();
    e.pump_scale = h.at("pump_scale").get<std::vector<double>>();
  } catch (const json::exception& ex) {
    throw IoError(path + ": bad header: " + ex.what());
  }
  const std::size_t n = static_cast<std::size_t>(e.n_shots) * static_cast<std::size_t>(e.n_fibers) * e.orders.size() * static_cast<std::size_t>(e.grid.ntau);
  std::vector<unsigned char> raw(n * 16);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) throw IoError(path + ": truncated data block");
  e.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double parts[2];
    for (int c = 0; c < 2; ++c) {
      std::uint64_t u = 0;
      for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(raw[i * 16 + static_cast<std::size_t>(c) * 8 + static_cast<std::size_t>(b)]) << (8 * b);
      std::memcpy(&parts[c], &u, 8);
    }
    e.data[i] = {parts[0], parts[1]};
  }
  return e;
}

}  // namespace srscomb

#endif  // SRSCOMB_ENSEMBLE_HPP
