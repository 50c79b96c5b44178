#ifndef SRSCOMB_BESSEL_HPP
#define SRSCOMB_BESSEL_HPP

#include <array>
#include <cmath>
#include <vector>

#include "core.hpp"

namespace srscomb {

struct SeriesResult {
  double value = 0.0;
  int terms = 0;
  double truncation_estimate = 0.0;  // relative, from the last-term ratio
};

inline constexpr double kSeriesTolerance = 1e-12;
inline constexpr int kSeriesTermCap = 10000;

/// sum_k y^k / (k! (k+nu)!), which equals I_nu(2 sqrt(y)) / y^(nu/2).
inline SeriesResult bessel_reduced_series(int nu, double y) {
  if (nu < 0) throw ConfigError("bessel.nu", "order must be nonnegative");
  if (!(y >= 0.0) || !std::isfinite(y)) throw ConfigError("bessel.y", "argument must be finite and nonnegative");
  double term = 1.0;
  for (int j = 2; j <= nu; ++j) term /= j;
  SeriesResult r;
  r.value = term;
  r.terms = 1;
  if (y == 0.0) return r;
  for (int k = 1; k < kSeriesTermCap; ++k) {
    const double ratio = y / (static_cast<double>(k) * (k + nu));
    term *= ratio;
    r.value += term;
    r.terms = k + 1;
    if (term < kSeriesTolerance * r.value) {
      const double next_ratio = y / (static_cast<double>(k + 1) * (k + 1 + nu));
      r.truncation_estimate = next_ratio < 1.0 ? term * next_ratio / (1.0 - next_ratio) / r.value : term / r.value;
      return r;
    }
  }
  throw NumericError("Bessel series did not converge within " + std::to_string(kSeriesTermCap) + " terms");
}

/// Modified Bessel function I_nu(x) for integer nu >= 0 and x >= 0.
inline double bessel_i(int nu, double x) {
  if (!(x >= 0.0)) throw ConfigError("bessel.x", "argument must be nonnegative");
  const double y = 0.25 * x * x;
  return std::pow(0.5 * x, nu) * bessel_reduced_series(nu, y).value;
}

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre8 {
  static constexpr std::array<double, 8> nodes{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                               0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, 8> weights{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                 0.2223810344533745, 0.1012285362903763};

  template <class F>
  static double integrate(F&& f, double a, double b) {
    const double h = 0.5 * (b - a), m = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(m + h * nodes[i]);
    return s * h;
  }
};

/// Cumulative pump energy W(tau) = int_0^tau |p|^2, tabulated on fine panels.
class PumpEnergyTable {
 public:
  explicit PumpEnergyTable(const PumpPulse& pump, double duration = 1.0, int panels = 4096)
      : pump_(pump), h_(duration / panels), cumulative_(static_cast<std::size_t>(panels) + 1, 0.0) {
    for (int i = 0; i < panels; ++i)
      cumulative_[static_cast<std::size_t>(i) + 1] = cumulative_[static_cast<std::size_t>(i)] + panel(i * h_, (i + 1) * h_);
  }

  double operator()(double tau) const {
    if (tau <= 0.0) return 0.0;
    auto i = static_cast<std::size_t>(std::floor(tau / h_));
    if (i >= cumulative_.size() - 1) i = cumulative_.size() - 2;
    return cumulative_[i] + panel(static_cast<double>(i) * h_, tau);
  }

 private:
  double panel(double a, double b) const {
    return GaussLegendre8::integrate([&](double t) { return std::norm(pump_.value(t)); }, a, b);
  }

  PumpPulse pump_;
  double h_;
  std::vector<double> cumulative_;
};

/// Analytic Stokes-only transient Raman solution with the anti-Stokes
/// coupling removed. With w = W(tau) the cumulative pump energy and
/// zeta = L - z' the remaining propagation length, the Stokes field at z = L is
///   s(tau) = s0(tau) + p(tau) int dtau' p(tau') K_f(W - W') s0(tau')
///            - i conj(mu) p(tau) int dz' K_q(L - z', W(tau)) q0(z')
/// with K_f(w) = sqrt(g/w) I_1(2 sqrt(g w)) and K_q(zeta, w) = I_0(2 sqrt(g zeta w)).
class GreenKernelOracle {
 public:
  explicit GreenKernelOracle(double g) : g_(g) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("oracle.g", "gain must be finite and nonnegative");
  }

  double gain() const { return g_; }

  /// Field-to-field kernel K_f; at w = 0 its limit g.
  double field_kernel(double w) const {
    if (w < 0.0) throw ConfigError("oracle.tau", "kernel requires tau >= tau'");
    return g_ * bessel_reduced_series(1, g_ * w).value;
  }

  /// Coherence-to-field kernel K_q(zeta, w).
  double coherence_kernel(double zeta, double w) const {
    if (zeta < 0.0 || w < 0.0) throw ConfigError("oracle.zeta", "kernel requires nonnegative arguments");
    return bessel_reduced_series(0, g_ * zeta * w).value;
  }

  /// Mean Stokes intensity at z = L for unit-strength white coherence seeds,
  /// binned to match a grid's cells: coherence seeds constant over each
  /// z cell (variance 1/dz) and the output field averaged over each tau cell.
  std::vector<double> binned_mean_intensity(const PumpPulse& pump, const CharacteristicsGrid& grid) const {
    const PumpEnergyTable W(pump, grid.duration);
    const int nt = grid.ntau, nz = grid.nz;
    const double dz = grid.dz(), dt = grid.dtau();
    std::vector<double> out(static_cast<std::size_t>(nt), 0.0);
    std::array<double, 8> tau_nodes{}, tau_p{}, tau_w{};
    for (int k = 0; k < nt; ++k) {
      for (std::size_t a = 0; a < 8; ++a) {
        tau_nodes[a] = (k + 0.5 + 0.5 * GaussLegendre8::nodes[a]) * dt;
        tau_p[a] = std::abs(pump.value(tau_nodes[a]));
        tau_w[a] = W(tau_nodes[a]);
      }
      double acc = 0.0;
      for (int j = 0; j < nz; ++j) {
        const double cell = GaussLegendre8::integrate(
            [&](double zeta) {
              double avg = 0.0;
              for (std::size_t a = 0; a < 8; ++a) avg += 0.5 * GaussLegendre8::weights[a] * tau_p[a] * coherence_kernel(zeta, tau_w[a]);
              return avg;
            },
            j * dz, (j + 1) * dz);
        acc += cell * cell / dz;
      }
      out[static_cast<std::size_t>(k)] = g_ * acc;
    }
    return out;
  }

  /// Continuum mean Stokes intensity g |p(tau)|^2 int_0^L I_0(2 sqrt(g zeta W))^2 dzeta.
  double point_mean_intensity(const PumpPulse& pump, double tau, double length = 1.0) const {
    const PumpEnergyTable W(pump);
    const double w = W(tau);
    double acc = 0.0;
    const int panels = 64;
    for (int i = 0; i < panels; ++i) {
      acc += GaussLegendre8::integrate([&](double zeta) { const double k = coherence_kernel(zeta, w); return k * k; },
                                       i * length / panels, (i + 1) * length / panels);
    }
    return g_ * std::norm(pump.value(tau)) * acc;
  }

 private:
  double g_;
};

/// Field-to-field Stokes kernel for a flat unit pump: the response at tau to
/// a unit impulse at tau' (excluding the direct delta term).
inline cplx green_kernel_stokes(double g, double tau, double tau_prime) {
  if (!(tau_prime >= 0.0) || !(tau >= tau_prime)) throw ConfigError("oracle.tau", "require tau >= tau' >= 0");
  return {GreenKernelOracle(g).field_kernel(tau - tau_prime), 0.0};
}

}  // namespace srscomb

#endif  // SRSCOMB_BESSEL_HPP
