#ifndef SRSCOMB_RNG_HPP
#define SRSCOMB_RNG_HPP

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace srscomb {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a list of integers into one stream key.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

enum class StreamPurpose : std::uint64_t {
  VacuumSeed = 1,
  PumpJitter = 2,
  Langevin = 3,
  Interferometer = 4,
  Synthetic = 5,
};

/// Counter-based generator: output i of a stream is mix64(key + i * golden),
/// so a stream can be recreated from its key alone.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}
  CounterRng(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b, StreamPurpose purpose, std::uint64_t c = 0) noexcept
      : key_(stream_key({master_seed, a, b, static_cast<std::uint64_t>(purpose), c})) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Normal and circular complex Gaussian draws on top of a CounterRng.
class GaussianSource {
 public:
  explicit GaussianSource(CounterRng rng) : rng_(rng) {}

  double normal(double sigma = 1.0) { return sigma * dist_(rng_); }

  /// Zero-mean circular complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = dist_(rng_);
    const double im = dist_(rng_);
    return {s * re, s * im};
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  CounterRng& engine() { return rng_; }

 private:
  CounterRng rng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace srscomb

#endif  // SRSCOMB_RNG_HPP
