#ifndef SRSCOMB_MOMENTS_HPP
#define SRSCOMB_MOMENTS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "propagator.hpp"

namespace srscomb {

/// Second moments of the two-mode output at z = L in the c-number
/// representation used by the ensemble:
///   stokes(k, k')  = <e_S(k) conj(e_S(k'))>
///   anti(k, k')    = <e_A(k) conj(e_A(k'))>
///   cross(k, k')   = <e_S(k) e_A(k')>
/// plus the molecular excitation density <|q(z, T)|^2> per z cell.
struct CovarianceRecord {
  CharacteristicsGrid grid;
  Eigen::MatrixXcd stokes;
  Eigen::MatrixXcd anti;
  Eigen::MatrixXcd cross;
  std::vector<double> molecular;
  std::vector<double> pump_intensity;
  double field_vacuum = 1.0;      // seeded anti-Stokes level per tau cell
  double coherence_vacuum = 1.0;  // seeded coherence level per z cell
};

inline constexpr double kIntensityFloor = 1e-6;
inline constexpr double kCovarianceMemoryLimit = 2.0 * 1024 * 1024 * 1024;

namespace detail {

struct CovarianceSetup {
  int nz, nt;
  double dz, dt, vf, vq, langevin;
  std::vector<cplx> pump;
  // Midpoint cell map M(j, k) over (s, a, q).
  std::vector<cplx> ph0, ph1;
  cplx mu0, mu1, Dd;

  CovarianceSetup(const MediumConfig& cfg, const PumpPulse& pump_pulse, const CharacteristicsGrid& grid, const IntegratorOptions& opts) {
    validate(cfg);
    validate(pump_pulse);
    if (cfg.min_order() != -1 || cfg.max_order() != 1) throw ConfigError("medium.lines", "covariance propagation needs exactly lines -1, 0, +1");
    if (opts.scheme != Scheme::Midpoint) throw ConfigError("integrator.scheme", "covariance propagation uses the midpoint scheme");
    const double D = 2.0 * grid.ntau + 1.0;
    if (D * D * 16.0 > kCovarianceMemoryLimit || 3.0 * grid.ntau * (grid.ntau + grid.nz) * 16.0 > kCovarianceMemoryLimit)
      throw ConfigError("grid.ntau", "covariance arrays would exceed the memory limit");
    check_step(cfg, pump_pulse, grid, opts.max_step_gain);
    nz = grid.nz;
    nt = grid.ntau;
    dz = grid.dz();
    dt = grid.dtau();
    vf = cfg.field_seed_strength / dt;
    vq = cfg.coherence_seed_strength / dz;
    const double rho = damping_factor(cfg.damping, dt);
    langevin = cfg.langevin_enabled ? vq * std::max(0.0, 1.0 - rho * rho) : 0.0;
    pump = pump_pulse.sample(grid);
    ph0 = phases(cfg.delta_beta(0), grid);
    ph1 = phases(cfg.delta_beta(1), grid);
    mu0 = cfg.coupling(0);
    mu1 = cfg.coupling(1);
    Dd = {-cfg.damping * dt, 0.0};
  }

  Eigen::Matrix3cd cell(int j, int k) const {
    const cplx I{0.0, 1.0};
    const cplx pk = pump[static_cast<std::size_t>(k)];
    const cplx c0 = mu0 * pk * ph0[static_cast<std::size_t>(j)];
    const cplx c1 = mu1 * std::conj(pk) * ph1[static_cast<std::size_t>(j)];
    const cplx X = -I * dz * std::conj(c0), Y = I * dz * std::conj(c1);
    const cplx U = I * dt * c0, V = I * dt * c1;
    Eigen::Matrix3cd M;
    M << 1.0 + 0.5 * X * U, 0.5 * X * V, X + 0.5 * X * Dd,
         0.5 * Y * U, 1.0 + 0.5 * Y * V, Y + 0.5 * Y * Dd,
         U + 0.5 * Dd * U, V + 0.5 * Dd * V, 1.0 + Dd + 0.5 * (U * X + V * Y + Dd * Dd);
    return M;
  }

  CovarianceRecord record(const CharacteristicsGrid& grid) const {
    CovarianceRecord rec;
    rec.grid = grid;
    rec.field_vacuum = vf;
    rec.coherence_vacuum = vq;
    rec.molecular.resize(static_cast<std::size_t>(nz));
    rec.pump_intensity.resize(static_cast<std::size_t>(nt));
    for (int k = 0; k < nt; ++k) rec.pump_intensity[static_cast<std::size_t>(k)] = std::norm(pump[static_cast<std::size_t>(k)]);
    return rec;
  }
};

// Plain complex multiply-add without the NaN recovery branches of operator*.
inline cplx cmad3(cplx m0, cplx x0, cplx m1, cplx x1, cplx m2, cplx x2) {
  return {m0.real() * x0.real() - m0.imag() * x0.imag() + m1.real() * x1.real() - m1.imag() * x1.imag() + m2.real() * x2.real() -
              m2.imag() * x2.imag(),
          m0.real() * x0.imag() + m0.imag() * x0.real() + m1.real() * x1.imag() + m1.imag() * x1.real() + m2.real() * x2.imag() +
              m2.imag() * x2.real()};
}

}  // namespace detail

/// Reference implementation: pushes the full joint covariance of
/// (s_0..s_{N-1}, a_0..a_{N-1}, q) through every cell map, z outer and tau
/// inner. Supports Langevin forcing.
inline CovarianceRecord propagate_covariance_dense(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid,
                                                   const IntegratorOptions& opts = {}) {
  const detail::CovarianceSetup st(cfg, pump, grid, opts);
  const int nz = st.nz, nt = st.nt;
  const Eigen::Index D = 2 * nt + 1;
  // C(i, j) = <x_i conj(x_j)>; Hermitian, rows are updated and mirrored.
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(D, D);
  for (int k = 0; k < nt; ++k) C(nt + k, nt + k) = st.vf;
  const Eigen::Index iq = 2 * nt;
  CovarianceRecord rec = st.record(grid);

  Eigen::Matrix<cplx, 3, Eigen::Dynamic> rows(3, D);
  for (int j = 0; j < nz; ++j) {
    C.row(iq).setZero();
    C.col(iq).setZero();
    C(iq, iq) = st.vq;
    for (int k = 0; k < nt; ++k) {
      const Eigen::Matrix3cd M = st.cell(j, k);
      const Eigen::Index idx[3] = {k, nt + k, iq};
      for (int r = 0; r < 3; ++r) rows.row(r) = M(r, 0) * C.row(idx[0]) + M(r, 1) * C.row(idx[1]) + M(r, 2) * C.row(idx[2]);
      Eigen::Matrix3cd block;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) block(r, c) = rows(r, idx[0]) * std::conj(M(c, 0)) + rows(r, idx[1]) * std::conj(M(c, 1)) + rows(r, idx[2]) * std::conj(M(c, 2));
      for (int r = 0; r < 3; ++r) {
        C.row(idx[r]) = rows.row(r);
        C.col(idx[r]) = rows.row(r).adjoint();
      }
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) C(idx[r], idx[c]) = block(r, c);
      if (st.langevin != 0.0) C(iq, iq) += st.langevin;
    }
    rec.molecular[static_cast<std::size_t>(j)] = C(iq, iq).real();
  }
  rec.stokes.resize(nt, nt);
  rec.anti.resize(nt, nt);
  rec.cross.resize(nt, nt);
  for (int k = 0; k < nt; ++k)
    for (int l = 0; l < nt; ++l) {
      rec.stokes(k, l) = C(l, k);
      rec.anti(k, l) = C(nt + k, nt + l);
      rec.cross(k, l) = C(nt + l, k);
    }
  return rec;
}

/// Second moments at z = L. Without Langevin forcing the outputs are linear
/// in Nt + Nz independent seeds, so the response to every seed is carried
/// through the cell maps at once (each cell only touches the seeds that can
/// already have reached it) and the covariances follow as Gram products.
/// With Langevin forcing the dense propagation is used.
inline CovarianceRecord propagate_covariance(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid,
                                             const IntegratorOptions& opts = {}) {
  if (cfg.langevin_enabled) return propagate_covariance_dense(cfg, pump, grid, opts);
  const detail::CovarianceSetup st(cfg, pump, grid, opts);
  const int nz = st.nz, nt = st.nt;
  const Eigen::Index S = nt + nz;
  using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat Rs = RowMat::Zero(nt, S), Ra = RowMat::Zero(nt, S), Q = RowMat::Zero(nz, S);
  const double sf = std::sqrt(st.vf), sq = std::sqrt(st.vq);
  for (int j = 0; j < nz; ++j) Q(j, nt + j) = sq;
  Eigen::VectorXcd s(S), a(S);
  for (int k = 0; k < nt; ++k) {
    s.setZero();
    a.setZero();
    a(k) = sf;
    for (int j = 0; j < nz; ++j) {
      const Eigen::Matrix3cd M = st.cell(j, k);
      auto q = Q.row(j);
      // Active seeds: anti-Stokes cells 0..k and coherence cells 0..j.
      const Eigen::Index seg[2][2] = {{0, k + 1}, {nt, j + 1}};
      for (const auto& g : seg) {
        cplx* sp = s.data() + g[0];
        cplx* ap = a.data() + g[0];
        cplx* qp = q.data() + g[0];
        for (Eigen::Index i = 0; i < g[1]; ++i) {
          const cplx si = sp[i], ai = ap[i], qi = qp[i];
          sp[i] = detail::cmad3(M(0, 0), si, M(0, 1), ai, M(0, 2), qi);
          ap[i] = detail::cmad3(M(1, 0), si, M(1, 1), ai, M(1, 2), qi);
          qp[i] = detail::cmad3(M(2, 0), si, M(2, 1), ai, M(2, 2), qi);
        }
      }
    }
    Rs.row(k) = s.transpose();
    Ra.row(k) = a.transpose();
  }
  CovarianceRecord rec = st.record(grid);
  for (int j = 0; j < nz; ++j) rec.molecular[static_cast<std::size_t>(j)] = Q.row(j).squaredNorm();
  rec.stokes = (Rs * Rs.adjoint()).conjugate();
  rec.anti = Ra * Ra.adjoint();
  rec.cross = Rs.conjugate() * Ra.transpose();
  return rec;
}

/// Diagonal of a line's self-covariance. The anti-Stokes curve includes the
/// seeded vacuum level; order 0 returns the pump intensity.
inline std::vector<double> mean_intensity(const CovarianceRecord& r, int n) {
  const auto nt = static_cast<std::size_t>(r.grid.ntau);
  std::vector<double> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    switch (n) {
      case -1: out[k] = std::max(0.0, r.stokes(i, i).real()); break;
      case 1: out[k] = std::max(0.0, r.anti(i, i).real()); break;
      case 0: out[k] = r.pump_intensity[k]; break;
      default: throw ConfigError("line", "covariance record has no line of order " + std::to_string(n));
    }
  }
  return out;
}

/// Mean intensity in excess of the seeded vacuum level.
inline std::vector<double> generated_intensity(const CovarianceRecord& r, int n) {
  auto out = mean_intensity(r, n);
  if (n == 1)
    for (auto& v : out) v = std::max(0.0, v - r.field_vacuum);
  return out;
}

/// |<e_S e_A>| / sqrt(<|e_S|^2> <|e_A|^2>) per tau cell; empty where either
/// intensity lies below kIntensityFloor times the vacuum level.
inline std::vector<std::optional<double>> correlation_coefficient(const CovarianceRecord& r) {
  const double floor = kIntensityFloor * r.field_vacuum;
  std::vector<std::optional<double>> out(static_cast<std::size_t>(r.grid.ntau));
  for (Eigen::Index k = 0; k < r.grid.ntau; ++k) {
    const double is = r.stokes(k, k).real(), ia = r.anti(k, k).real();
    if (is < floor || ia < floor) continue;
    out[static_cast<std::size_t>(k)] = std::abs(r.cross(k, k)) / std::sqrt(is * ia);
  }
  return out;
}

struct ManleyRoweReport {
  double delta_stokes = 0.0;
  double delta_anti_stokes = 0.0;
  double delta_molecular = 0.0;
  double residual = 0.0;  // delta_stokes - delta_anti_stokes - delta_molecular
  double generated = 0.0;  // delta_stokes + |delta_anti_stokes|
  double relative() const { return generated > 0.0 ? std::abs(residual) / generated : std::abs(residual); }
};

inline ManleyRoweReport manley_rowe_report(const CovarianceRecord& r) {
  const double dt = r.grid.dtau(), dz = r.grid.dz();
  ManleyRoweReport m;
  for (Eigen::Index k = 0; k < r.grid.ntau; ++k) {
    m.delta_stokes += r.stokes(k, k).real() * dt;
    m.delta_anti_stokes += (r.anti(k, k).real() - r.field_vacuum) * dt;
  }
  for (double v : r.molecular) m.delta_molecular += (v - r.coherence_vacuum) * dz;
  m.residual = m.delta_stokes - m.delta_anti_stokes - m.delta_molecular;
  m.generated = m.delta_stokes + std::abs(m.delta_anti_stokes);
  return m;
}

struct PulseMetrics {
  double window_start = 0.0;  // tau bounds of the central 80% of output energy
  double window_end = 0.0;
  std::optional<double> min_correlation;  // over cells inside the window; empty if any is undefined
  double stokes_crossing = 0.0;  // tau where 10% of the line's generated energy has emerged
  double anti_stokes_crossing = 0.0;
  double crossing_gap = 0.0;  // |difference| in units of the pulse duration
};

namespace detail {

inline double crossing_time(const std::vector<double>& w, const CharacteristicsGrid& grid, double fraction) {
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (acc + w[k] >= fraction * total) return (static_cast<double>(k) + (fraction * total - acc) / w[k]) * grid.dtau();
    acc += w[k];
  }
  return grid.duration;
}

}  // namespace detail

inline PulseMetrics pulse_metrics(const CovarianceRecord& r) {
  auto is = generated_intensity(r, -1), ia = generated_intensity(r, 1);
  const double floor = kIntensityFloor * r.field_vacuum;
  std::vector<double> total(is.size());
  for (std::size_t k = 0; k < is.size(); ++k) {
    if (is[k] < floor) is[k] = 0.0;
    if (ia[k] < floor) ia[k] = 0.0;
    total[k] = is[k] + ia[k];
  }
  PulseMetrics m;
  m.window_start = detail::crossing_time(total, r.grid, 0.1);
  m.window_end = detail::crossing_time(total, r.grid, 0.9);
  m.stokes_crossing = detail::crossing_time(is, r.grid, 0.1);
  m.anti_stokes_crossing = detail::crossing_time(ia, r.grid, 0.1);
  m.crossing_gap = std::abs(m.stokes_crossing - m.anti_stokes_crossing) / r.grid.duration;
  if (!std::isfinite(m.window_start)) return m;
  const auto c = correlation_coefficient(r);
  double lo = std::numeric_limits<double>::infinity();
  for (int k = 0; k < r.grid.ntau; ++k) {
    const double t = r.grid.tau_center(k);
    if (t < m.window_start || t > m.window_end) continue;
    if (!c[static_cast<std::size_t>(k)]) return m;
    lo = std::min(lo, *c[static_cast<std::size_t>(k)]);
  }
  if (std::isfinite(lo)) m.min_correlation = lo;
  return m;
}

/// Mean Stokes intensity at z = L with the anti-Stokes coupling removed.
/// Only the coherence seeds reach the Stokes line then, and the response is
/// translation invariant in z, so one impulse run recorded at every z node
/// yields the whole white-noise sum.
inline std::vector<double> stokes_only_mean_intensity(const MediumConfig& cfg, const PumpPulse& pump, const CharacteristicsGrid& grid,
                                                      Scheme scheme = Scheme::Extrapolated) {
  if (cfg.coupling(1) != cplx{}) throw ConfigError("medium.alpha1", "anti-Stokes coupling must be zero for the Stokes-only path");
  if (cfg.langevin_enabled) throw ConfigError("medium.langevin_enabled", "Stokes-only path excludes Langevin forcing");
  InitialConditions ic = zero_initial_conditions(cfg, grid);
  ic.seed_coherence[0] = 1.0;
  IntegratorOptions opts;
  opts.scheme = scheme;
  opts.record_snapshots = true;
  opts.guard_depletion = false;
  const FieldRecord rec = integrate_two_mode(cfg, pump, grid, ic, opts);
  const double var = cfg.coherence_seed_strength / grid.dz();
  const auto is = cfg.line_index(-1);
  std::vector<double> out(static_cast<std::size_t>(grid.ntau), 0.0);
  for (int node = 1; node <= grid.nz; ++node)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += std::norm(rec.snapshots[static_cast<std::size_t>(node)][is][k]) * var;
  return out;
}

/// Fixed-format number for CSV output.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline void write_curve_csv(const std::string& path, const CharacteristicsGrid& grid, const std::vector<std::optional<double>>& values) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "tau,value\n";
  for (std::size_t k = 0; k < values.size(); ++k)
    os << format_number(grid.tau_center(static_cast<int>(k))) << ',' << (values[k] ? format_number(*values[k]) : std::string("nan")) << '\n';
  if (!os) throw IoError("write failed for " + path);
}

inline void write_curve_csv(const std::string& path, const CharacteristicsGrid& grid, const std::vector<double>& values) {
  std::vector<std::optional<double>> v(values.begin(), values.end());
  write_curve_csv(path, grid, v);
}

}  // namespace srscomb

#endif  // SRSCOMB_MOMENTS_HPP
