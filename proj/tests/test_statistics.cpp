#include <gtest/gtest.h>

#include <random>

#include "srscomb/statistics.hpp"

using namespace srscomb;

namespace {

std::vector<double> uniform_phases(std::size_t n, std::uint64_t seed) {
  GaussianSource g{CounterRng(seed)};
  std::vector<double> v(n);
  for (auto& x : v) x = wrap_phase(2.0 * kPi * g.uniform());
  return v;
}

}  // namespace

TEST(Statistics, CircularStatsOfConstantAndAntipodalSets) {
  const auto c = circular_stats(std::vector<double>(50, 0.3));
  EXPECT_NEAR(c.resultant, 1.0, 1e-12);
  EXPECT_NEAR(c.mean, 0.3, 1e-12);
  EXPECT_NEAR(c.gaussian_sigma, 0.0, 1e-12);
  EXPECT_EQ(c.histogram.counts.size(), 37u);
  EXPECT_EQ(c.histogram.counts[c.histogram.mode_bin()], 50);
  EXPECT_NEAR(c.histogram.center(18), 0.0, 1e-12);

  const auto a = circular_stats({0.5, 0.5 + kPi, -1.0, -1.0 + kPi});
  EXPECT_NEAR(a.resultant, 0.0, 1e-12);
  EXPECT_THROW(circular_stats({}), ConfigError);
}

TEST(Statistics, CircularMeanHandlesWrap) {
  const auto s = circular_stats({kPi - 0.1, -kPi + 0.1});
  EXPECT_NEAR(std::abs(s.mean), kPi, 1e-12);
  EXPECT_NEAR(s.gaussian_sigma, 0.1, 1e-12);
}

TEST(Statistics, UniformSamplesHaveSmallResultant) {
  int small = 0;
  const std::size_t n = 1000;
  for (std::uint64_t t = 0; t < 200; ++t)
    if (circular_stats(uniform_phases(n, 100 + t)).resultant < 2.0 / std::sqrt(double(n))) ++small;
  // P(N R^2 < 4) = 1 - e^-4 for large N.
  EXPECT_GT(small, 190);
}

TEST(Statistics, RayleighTestIsCalibrated) {
  int rejected = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) rejected += uniformity_test(uniform_phases(200, 5000 + static_cast<std::uint64_t>(t))).rejected;
  const double rate = double(rejected) / trials;
  EXPECT_NEAR(rate, 0.05, 3.0 * std::sqrt(0.05 * 0.95 / trials));

  const auto c = uniformity_test(std::vector<double>(150, 1.2));
  EXPECT_TRUE(c.rejected);
  EXPECT_LT(c.p_value, 1e-12);
  EXPECT_NEAR(c.statistic, 150.0, 1e-9);
  EXPECT_THROW(uniformity_test(std::vector<double>(99, 0.0)), ConfigError);
}

TEST(Statistics, RayleighPValueMatchesLargeSampleLimit) {
  // For large N the p-value tends to exp(-Z).
  std::vector<double> v = uniform_phases(20000, 9);
  for (std::size_t i = 0; i < 400; ++i) v[i] = 0.0;
  const auto t = uniformity_test(v);
  EXPECT_NEAR(std::log(t.p_value), -t.statistic, 0.05 * t.statistic);
}

TEST(Statistics, PhiNmCancelsTheQuantumPhase) {
  SyntheticPhaseModel model;
  model.lines = {-2, -1, 1, 2};
  const auto rec = model.generate(300, 4);
  for (auto [n, m] : {std::pair{1, 2}, std::pair{-1, 1}, std::pair{-2, 1}}) {
    const auto s = circular_stats(phi_nm(rec, n, m));
    EXPECT_NEAR(s.resultant, 1.0, 1e-12) << n << "," << m;
    EXPECT_NEAR(s.mean, 0.0, 1e-9);
  }
  // Fixed per-line offsets, even fiber dependent, cancel in the successive difference.
  model.offsets = {{-1, 0.4}, {1, -2.0}, {2, 1.1}};
  model.fiber2_offsets = {{-1, 2.5}, {1, 0.3}, {2, -0.7}};
  const auto off = model.generate(300, 4);
  EXPECT_NEAR(circular_stats(phi_nm(off, 1, 2)).resultant, 1.0, 1e-12);
  // Single-line successive differences stay uniform.
  EXPECT_FALSE(uniformity_test(off.successive(1)).p_value < 1e-3);
}

TEST(Statistics, ScrambledPhasesGiveZeroResultant) {
  PhaseRecord rec;
  rec.fiber_difference[1] = uniform_phases(2000, 21);
  rec.fiber_difference[2] = uniform_phases(2000, 22);
  EXPECT_LT(circular_stats(phi_nm(rec, 1, 2)).resultant, 4.0 / std::sqrt(2000.0));
  EXPECT_THROW(phi_nm(rec, 1, 3), ConfigError);
}

TEST(Statistics, PhiNmSkipsUndefinedPhases) {
  PhaseRecord rec;
  rec.fiber_difference[1] = {0.1, 0.2, kUndefinedPhase, 0.4, 0.5};
  rec.fiber_difference[2] = {0.2, 0.4, 0.6, 0.8, 1.0};
  EXPECT_EQ(phi_nm(rec, 1, 2).size(), 2u);
}

TEST(Statistics, JitterMatchesBruteForce) {
  const double sigma = 0.15;
  const int shots = 40000;
  SyntheticPhaseModel model;
  model.lines = {1, 2, 3};
  model.jitter_sigma = sigma;
  const auto rec = model.generate(shots, 77);

  std::mt19937_64 eng(12345);
  std::normal_distribution<double> kick(0.0, sigma);
  std::uniform_real_distribution<double> qf(-kPi, kPi);
  for (auto [n, m] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 3}}) {
    std::vector<double> phi;
    double prev_n = 0.0, prev_m = 0.0;
    for (int i = 0; i < shots; ++i) {
      const double q1 = qf(eng), q2 = qf(eng);
      const double dn = n * (q1 - q2) + kick(eng) - kick(eng), dm = m * (q1 - q2) + kick(eng) - kick(eng);
      if (i > 0) phi.push_back(m * (dn - prev_n) - n * (dm - prev_m));
      prev_n = dn;
      prev_m = dm;
    }
    const double brute = circular_stats(phi).resultant;
    const double model_r = circular_stats(phi_nm(rec, n, m)).resultant;
    const double tol = 4.0 / std::sqrt(double(shots));
    EXPECT_NEAR(brute, expected_phi_resultant(n, m, sigma), tol) << n << "," << m;
    EXPECT_NEAR(model_r, expected_phi_resultant(n, m, sigma), tol) << n << "," << m;
  }
}

TEST(Statistics, PhaseRecordFromFitsMarksFailures) {
  FitTable t;
  t.rows.push_back({0, 1, "1-2", FringeFit{0.9, 0.5, 0.0, true}});
  t.rows.push_back({1, 1, "1-2", FringeFit{0.0, 0.0, 0.0, false}});
  t.rows.push_back({1, 2, "1-2", FringeFit{0.9, 4.0, 0.0, true}});
  const auto rec = phase_record_from_fits(t, {1, 2});
  EXPECT_EQ(rec.shots(), 2);
  EXPECT_EQ(rec.line(1)[0], 0.5);
  EXPECT_TRUE(std::isnan(rec.line(1)[1]));
  EXPECT_TRUE(std::isnan(rec.line(2)[0]));
  EXPECT_NEAR(rec.line(2)[1], 4.0 - 2.0 * kPi, 1e-12);
}

TEST(Statistics, ExponentialEnergiesHaveRatioTwo) {
  std::mt19937_64 eng(3);
  std::exponential_distribution<double> ex(0.37);
  std::vector<double> w(20000);
  for (auto& v : w) v = ex(eng);
  EXPECT_LT(ks_distance_exponential(w), 1.36 / std::sqrt(double(w.size())));
  double m1 = 0.0, m2 = 0.0;
  for (double v : w) {
    m1 += v;
    m2 += v * v;
  }
  EXPECT_NEAR(m2 * w.size() / (m1 * m1), 2.0, 0.1);
  EXPECT_GT(ks_distance_exponential(std::vector<double>(100, 1.0)), 0.5);
  EXPECT_THROW(ks_distance_exponential({}), ConfigError);
}

TEST(Statistics, PearsonBasics) {
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {2, 4, 6, 8}), 1.0, 1e-12);
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {8, 6, 4, 2}), -1.0, 1e-12);
  EXPECT_EQ(pearson({1, 1, 1}, {1, 2, 3}), 0.0);
  EXPECT_THROW(pearson({1}, {1}), ConfigError);
  EXPECT_THROW(pearson({1, 2}, {1, 2, 3}), ConfigError);
}

TEST(Statistics, HighGainEnergiesAreThermalAndCorrelated) {
  const auto cfg = make_two_mode_medium(60.0, 30.0);
  const auto ens = run_ensemble(cfg, PumpPulse{}, build_grid(1.0, 1.0, 48, 48), 1000, 1, 61);
  const auto s = energy_stats(ens, -1);
  EXPECT_EQ(s.n, 1000u);
  // One dominant temporal mode: near-exponential statistics.
  EXPECT_GT(s.moment_ratio, 1.7);
  EXPECT_LT(s.moment_ratio, 2.3);
  EXPECT_LT(s.ks_distance, 0.08);
  EXPECT_GT(s.stokes_anti_stokes_pearson, 0.9);
  const auto few = run_ensemble(cfg, PumpPulse{}, build_grid(1.0, 1.0, 48, 48), 10, 1, 61);
  EXPECT_THROW(energy_stats(few, -1), ConfigError);
}

TEST(Statistics, LinePhaseAndSpread) {
  std::vector<cplx> e(32);
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = std::polar(1.0 + k % 3, 0.7);
  EXPECT_NEAR(line_phase(e), 0.7, 1e-12);
  EXPECT_NEAR(central_phase_spread(e), 0.0, 1e-12);
  e[16] = std::polar(2.0, 1.7);
  EXPECT_GT(central_phase_spread(e), 0.9);
  e[0] = std::polar(0.001, -2.0);  // outside the central half
  const double s = central_phase_spread(e);
  EXPECT_LT(s, 1.1);
  EXPECT_EQ(central_phase_spread(std::vector<cplx>(4)), 0.0);
}

TEST(Statistics, VisibilityStatsNeedEnoughFits) {
  FitTable t;
  for (int i = 0; i < 150; ++i) t.rows.push_back({i, -1, "1-2", FringeFit{i % 2 ? 0.6 : 0.8, 0.0, 0.0, true}});
  const auto s = visibility_stats(t, -1);
  EXPECT_NEAR(s.mean, 0.7, 1e-12);
  EXPECT_EQ(s.histogram.counts.size(), 20u);
  EXPECT_THROW(visibility_stats(t, 1), ConfigError);
}

// Below the single-mode regime each pulse holds several temporal modes, so
// the two fibers overlap imperfectly and the mean Stokes visibility sits
// below the single-mode value pi / 4.
TEST(Statistics, LowGainStokesVisibilityBelowSingleModeValue) {
  const auto cfg = make_two_mode_medium(5.0, 30.0);
  const auto ens = run_ensemble(cfg, PumpPulse{}, build_grid(1.0, 1.0, 64, 64), 4000, 2, 3);
  VirtualExperimentOptions o;
  o.include_pump = false;
  const auto s = visibility_stats(run_virtual_experiment(ens, {-1}, o), -1);
  EXPECT_LT(s.mean + 3.0 * s.stddev / std::sqrt(double(s.n)), kPi / 4.0);
}
