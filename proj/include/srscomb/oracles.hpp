#ifndef SRSCOMB_ORACLES_HPP
#define SRSCOMB_ORACLES_HPP

#include <functional>
#include <vector>

#include "core.hpp"

namespace srscomb {

/// Smooth boundary data for the reference solver.
struct SmoothSeeds {
  std::function<cplx(int order, double tau)> field = [](int, double) { return cplx{}; };
  std::function<cplx(double z)> coherence = [](double) { return cplx{}; };
};

struct ReferenceSolution {
  std::vector<double> tau;                 // tau nodes, 0..T
  std::vector<std::vector<cplx>> fields;   // [line index][tau node] at z = L
  std::vector<double> z;                   // z nodes, 0..L
  std::vector<cplx> coherence;             // [z node] at tau = T
  int min_order = 0;

  const std::vector<cplx>& line(int n) const { return fields.at(static_cast<std::size_t>(n - min_order)); }
};

namespace detail {

/// Method of lines: the coherence lives on z nodes and advances in tau by
/// classical RK4; at every stage the fields are re-marched in z with Heun's
/// rule using exact pump values and exact phase factors at the nodes.
inline ReferenceSolution method_of_lines_once(const MediumConfig& cfg, const PumpPulse& pump, const SmoothSeeds& seeds, int n_orders, int nz,
                                              int ntau) {
  const int lo = std::max(cfg.min_order(), -n_orders), hi = std::min(cfg.max_order(), n_orders);
  const auto nl = static_cast<std::size_t>(hi - lo + 1);
  const auto pump_slot = static_cast<std::size_t>(-lo);
  const double L = 1.0;
  const double hz = L / nz, ht = 1.0 / ntau;
  const auto nodes = static_cast<std::size_t>(nz) + 1;
  const cplx I{0.0, 1.0};

  std::vector<double> z(nodes);
  for (std::size_t i = 0; i < nodes; ++i) z[i] = static_cast<double>(i) * hz;
  std::vector<cplx> mu(nl, cplx{});
  std::vector<double> db(nl, 0.0);
  for (int n = lo + 1; n <= hi; ++n) {
    mu[static_cast<std::size_t>(n - lo)] = cfg.coupling(n);
    db[static_cast<std::size_t>(n - lo)] = cfg.delta_beta(n);
  }

  // Rates at one point; c_n = mu_n exp(i dbeta_n z) for the pair (n, n-1) stored at slot n - lo.
  auto rates = [&](const std::vector<cplx>& e, cplx q, double zz, std::vector<cplx>& de) -> cplx {
    std::fill(de.begin(), de.end(), cplx{});
    cplx src{};
    for (std::size_t u = 1; u < nl; ++u) {
      const cplx c = mu[u] * std::polar(1.0, db[u] * zz);
      de[u - 1] += I * c * e[u] * std::conj(q);
      de[u] += I * std::conj(c) * e[u - 1] * q;
      src += I * c * e[u] * std::conj(e[u - 1]);
    }
    de[pump_slot] = cplx{};
    return src - cfg.damping * q;
  };

  // Same unit convention as the integrator: sidebands and coherence in photon units.
  const double scale = pump.photon_scale(1.0);
  std::vector<std::vector<cplx>> e(nodes, std::vector<cplx>(nl));
  std::vector<cplx> d1(nl), d2(nl), tmp(nl);
  auto march = [&](double t, const std::vector<cplx>& q, std::vector<cplx>& dq) {
    for (std::size_t l = 0; l < nl; ++l) e[0][l] = seeds.field(lo + static_cast<int>(l), t) / scale;
    e[0][pump_slot] = pump.value(t);
    for (std::size_t i = 0; i + 1 < nodes; ++i) {
      dq[i] = rates(e[i], q[i], z[i], d1);
      for (std::size_t l = 0; l < nl; ++l) tmp[l] = e[i][l] + hz * d1[l];
      rates(tmp, q[i + 1], z[i + 1], d2);
      for (std::size_t l = 0; l < nl; ++l) e[i + 1][l] = e[i][l] + 0.5 * hz * (d1[l] + d2[l]);
    }
    dq[nodes - 1] = rates(e[nodes - 1], q[nodes - 1], z[nodes - 1], d1);
  };

  ReferenceSolution out;
  out.min_order = cfg.min_order();
  out.z = z;
  out.fields.assign(cfg.line_count(), std::vector<cplx>(static_cast<std::size_t>(ntau) + 1));
  std::vector<cplx> q(nodes), k1(nodes), k2(nodes), k3(nodes), k4(nodes), qs(nodes);
  for (std::size_t i = 0; i < nodes; ++i) q[i] = seeds.coherence(z[i]) / scale;

  auto record = [&](int m, double t) {
    out.tau.push_back(t);
    for (std::size_t l = 0; l < cfg.line_count(); ++l) {
      const int n = cfg.min_order() + static_cast<int>(l);
      out.fields[l][static_cast<std::size_t>(m)] = (n >= lo && n <= hi) ? e[nodes - 1][static_cast<std::size_t>(n - lo)] * scale : seeds.field(n, t);
    }
  };
  for (int m = 0; m < ntau; ++m) {
    const double t = m * ht;
    march(t, q, k1);
    record(m, t);
    for (std::size_t i = 0; i < nodes; ++i) qs[i] = q[i] + 0.5 * ht * k1[i];
    march(t + 0.5 * ht, qs, k2);
    for (std::size_t i = 0; i < nodes; ++i) qs[i] = q[i] + 0.5 * ht * k2[i];
    march(t + 0.5 * ht, qs, k3);
    for (std::size_t i = 0; i < nodes; ++i) qs[i] = q[i] + ht * k3[i];
    march(t + ht, qs, k4);
    for (std::size_t i = 0; i < nodes; ++i) q[i] += ht / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  march(1.0, q, k1);
  record(ntau, 1.0);
  for (auto& v : q) v *= scale;
  out.coherence = q;
  return out;
}

}  // namespace detail

/// Independent reference solution on the unit (z, tau) square, Richardson
/// extrapolated in z from nz and 2 nz nodes. Lines with |order| > n_orders
/// keep their seed values.
inline ReferenceSolution reference_solution(const MediumConfig& cfg, const PumpPulse& pump, const SmoothSeeds& seeds, int n_orders, int nz = 128,
                                            int ntau = 512) {
  validate(cfg);
  if (cfg.units != Units::Dimensionless || cfg.length != 1.0 || cfg.duration != 1.0)
    throw ConfigError("medium", "the reference solver works on the normalized unit square");
  if (nz < 2 || ntau < 2) throw ConfigError("oracle.grid", "need at least 2 steps per axis");
  const auto c = detail::method_of_lines_once(cfg, pump, seeds, n_orders, nz, ntau);
  auto f = detail::method_of_lines_once(cfg, pump, seeds, n_orders, 2 * nz, ntau);
  ReferenceSolution out = c;
  for (std::size_t l = 0; l < out.fields.size(); ++l)
    for (std::size_t m = 0; m < out.fields[l].size(); ++m) out.fields[l][m] = (4.0 * f.fields[l][m] - c.fields[l][m]) / 3.0;
  for (std::size_t i = 0; i < out.coherence.size(); ++i) out.coherence[i] = (4.0 * f.coherence[2 * i] - c.coherence[i]) / 3.0;
  return out;
}

}  // namespace srscomb

#endif  // SRSCOMB_ORACLES_HPP
