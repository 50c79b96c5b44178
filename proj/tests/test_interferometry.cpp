#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "srscomb/interferometry.hpp"
#include "srscomb/statistics.hpp"

using namespace srscomb;

namespace {

std::vector<cplx> flat(std::size_t n, cplx v) { return std::vector<cplx>(n, v); }

}  // namespace

TEST(Interferometry, WrapPhaseRange) {
  for (double x : {-10.0, -kPi, -1.0, 0.0, 2.0, kPi, 7.5, 100.0}) {
    const double w = wrap_phase(x);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::remainder(w - x, 2.0 * kPi), 0.0, 1e-12);
    EXPECT_EQ(wrap_phase(w), w);
  }
}

TEST(Interferometry, IdenticalArmsGiveUnitVisibility) {
  const DetectorConfig det;
  const auto a = flat(32, cplx{0.7, -0.2});
  const auto f = extract_visibility_phase(synthesize_fringe(a, a, 0.03, det), det);
  EXPECT_TRUE(f.success);
  EXPECT_NEAR(f.visibility, 1.0, 1e-9);
  EXPECT_NEAR(f.phase, 0.0, 1e-9);
}

TEST(Interferometry, QuarterWaveDelayRecoversPhase) {
  const DetectorConfig det;
  const auto a = flat(16, cplx{1.0, 0.0});
  const auto b = flat(16, std::polar(1.0, -kPi / 2.0));
  const auto f = extract_visibility_phase(synthesize_fringe(a, b, 0.1, det), det);
  EXPECT_NEAR(f.phase, kPi / 2.0, 1e-3);
  EXPECT_NEAR(f.visibility, 1.0, 1e-9);
}

TEST(Interferometry, ConstructedVisibilityAndPhase) {
  // |a|^2 + |b|^2 = 2|a||b| / 0.5 for |b| = (2 - sqrt 3)|a|.
  const double ratio = 2.0 - std::sqrt(3.0);
  const auto a = flat(20, cplx{1.0, 0.0});
  const auto b = flat(20, std::polar(ratio, -1.0));
  const DetectorConfig det;
  const auto f = extract_visibility_phase(synthesize_fringe(a, b, 0.05, det), det);
  EXPECT_NEAR(f.visibility, 0.5, 1e-6);
  EXPECT_NEAR(f.phase, 1.0, 1e-6);
  EXPECT_NEAR(pair_visibility(a[0], b[0]), 0.5, 1e-12);
}

TEST(Interferometry, DegradationScalesVisibility) {
  DetectorConfig det;
  det.visibility_degradation = 0.6;
  const auto a = flat(8, cplx{0.3, 0.4});
  EXPECT_NEAR(extract_visibility_phase(synthesize_fringe(a, a, 0.1, det), det).visibility, 0.6, 1e-9);
}

TEST(Interferometry, NoFringeMeansNoSuccess) {
  const DetectorConfig det;
  const auto a = flat(16, cplx{1.0, 0.5});
  const auto zero = flat(16, cplx{});
  const auto f = extract_visibility_phase(synthesize_fringe(a, zero, 0.1, det), det);
  EXPECT_FALSE(f.success);
  EXPECT_NEAR(f.visibility, 0.0, 1e-9);

  Interferogram dc;
  dc.intensity = beam_profile(det);
  for (double& v : dc.intensity) v *= 5.0;
  EXPECT_FALSE(extract_visibility_phase(dc, det).success);

  Interferogram dark;
  dark.intensity.assign(static_cast<std::size_t>(det.n_pixels), 0.0);
  const auto g = extract_visibility_phase(dark, det);
  EXPECT_FALSE(g.success);
  EXPECT_EQ(g.visibility, 0.0);
}

TEST(Interferometry, JitteredPhaseIsArgJPlusPiston) {
  DetectorConfig det;
  det.piston_jitter_sigma = 0.8;
  GaussianSource rng(CounterRng(11));
  GaussianSource amp(CounterRng(12));
  for (int t = 0; t < 50; ++t) {
    std::vector<cplx> a(24), b(24);
    cplx J{};
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = amp.complex_normal(1.0);
      b[k] = amp.complex_normal(1.0);
      J += a[k] * std::conj(b[k]);
    }
    const auto ig = synthesize_fringe(a, b, 0.04, det, &rng);
    const auto f = extract_visibility_phase(ig, det);
    ASSERT_TRUE(f.success);
    EXPECT_NEAR(wrap_phase(f.phase - std::arg(J) - ig.jitter), 0.0, 1e-8) << "trial " << t;
  }
}

TEST(Interferometry, RoundTripOverRandomDraws) {
  const DetectorConfig det;
  GaussianSource g(CounterRng(99));
  for (int t = 0; t < 1000; ++t) {
    const double v = 0.05 + 0.95 * g.uniform(), phi = wrap_phase(2.0 * kPi * g.uniform());
    // Solve 2r / (1 + r^2) = v for r <= 1.
    const double r = (1.0 - std::sqrt(1.0 - v * v)) / v;
    const auto a = flat(4, cplx{2.0, 0.0});
    const auto b = flat(4, std::polar(2.0 * r, -phi));
    const auto f = extract_visibility_phase(synthesize_fringe(a, b, 0.25, det), det);
    ASSERT_TRUE(f.success);
    EXPECT_NEAR(f.visibility, v, 1e-6);
    EXPECT_NEAR(wrap_phase(f.phase - phi), 0.0, 1e-6);
  }
}

TEST(Interferometry, NoisyFitBiasIsSmall) {
  DetectorConfig det;
  const auto a = flat(10, cplx{1.0, 0.0});
  const auto b = flat(10, std::polar(1.0, -0.4));
  // W1 + W2 = 2 with dtau = 0.1; the fringe amplitude 2 |J| = 2 at the beam peak.
  det.additive_noise_sigma = 2.0 / 20.0;
  GaussianSource rng(CounterRng(5));
  double vsum = 0.0;
  cplx psum{};
  const int n = 1000;
  for (int t = 0; t < n; ++t) {
    const auto f = extract_visibility_phase(synthesize_fringe(a, b, 0.1, det, &rng), det);
    vsum += f.visibility;
    psum += std::polar(1.0, f.phase);
  }
  EXPECT_LT(std::abs(vsum / n - 1.0), 0.02);
  EXPECT_NEAR(std::arg(psum), 0.4, 0.02);
}

TEST(Interferometry, FittedWavenumberRecoversDetuning) {
  DetectorConfig truth;
  truth.fringe_wavenumber *= 1.05;
  const auto a = flat(8, cplx{1.0, 0.0});
  const auto b = flat(8, std::polar(0.5, -0.7));
  const auto ig = synthesize_fringe(a, b, 0.1, truth);
  DetectorConfig fixed;
  DetectorConfig free = fixed;
  free.fit_wavenumber = true;
  const auto ff = extract_visibility_phase(ig, fixed);
  const auto fv = extract_visibility_phase(ig, free);
  EXPECT_NEAR(fv.wavenumber, truth.fringe_wavenumber, 1e-6 * truth.fringe_wavenumber);
  EXPECT_NEAR(fv.visibility, 0.8, 1e-6);
  EXPECT_NEAR(fv.phase, 0.7, 1e-6);
  EXPECT_GT(ff.residual, 100.0 * fv.residual);
}

// For independent circular Gaussian amplitudes of equal variance the energy
// fraction r = |u1|^2 / (|u1|^2 + |u2|^2) is uniform on [0, 1], so the mean
// of 2 sqrt(r (1 - r)) is pi / 4.
TEST(Interferometry, IndependentModesGivePiOverFourVisibility) {
  double quad = 0.0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const double r = (i + 0.5) / m;
    quad += 2.0 * std::sqrt(r * (1.0 - r)) / m;
  }
  EXPECT_NEAR(quad, kPi / 4.0, 1e-6);

  GaussianSource g(CounterRng(31));
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = pair_visibility(g.complex_normal(1.0), g.complex_normal(1.0));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, quad, 4.0 * se);
}

TEST(Interferometry, ValidateNamesTheKey) {
  auto expect_key = [](DetectorConfig d, const std::string& key) {
    try {
      validate(d);
      FAIL() << "expected ConfigError for " << key;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key);
    }
  };
  DetectorConfig d;
  d.n_pixels = 4;
  expect_key(d, "detector.n_pixels");
  d = {};
  d.fringe_wavenumber = 4.0;
  expect_key(d, "detector.fringe_wavenumber");
  d = {};
  d.beam_sigma = -1.0;
  expect_key(d, "detector.beam_sigma");
  d = {};
  d.visibility_degradation = 1.2;
  expect_key(d, "detector.visibility_degradation");
  d = {};
  d.additive_noise_sigma = -0.1;
  expect_key(d, "detector.additive_noise_sigma");
  EXPECT_NO_THROW(validate(calibrated_pump_detector()));
  EXPECT_THROW(synthesize_fringe(flat(3, {}), flat(4, {}), 0.1, DetectorConfig{}), ConfigError);
}

TEST(Interferometry, VirtualExperimentCalibratesPump) {
  const auto cfg = make_two_mode_medium(60.0, 30.0);
  const auto grid = build_grid(1.0, 1.0, 48, 48);
  const auto ens = run_ensemble(cfg, PumpPulse{}, grid, 400, 2, 17);
  VirtualExperimentOptions o;
  o.pump_detector = calibrated_pump_detector(o.detector);
  const auto table = run_virtual_experiment(ens, {-1, 1}, o);
  ASSERT_EQ(table.rows.size(), 400u * 3u);
  EXPECT_EQ(table.rows[0].line, -1);
  EXPECT_EQ(table.rows[1].line, 0);
  EXPECT_EQ(table.rows[2].line, 1);
  const auto pump = table.line(0);
  double v = 0.0;
  cplx r{};
  for (const auto* row : pump) {
    v += row->fit.visibility;
    r += std::polar(1.0, row->fit.phase);
  }
  EXPECT_NEAR(v / pump.size(), 0.85, 1e-6);
  // A Gaussian piston of width s shrinks the resultant to exp(-s^2 / 2).
  const double s = o.pump_detector->piston_jitter_sigma;
  EXPECT_NEAR(std::abs(r) / pump.size(), std::exp(-0.5 * s * s), 4.0 / std::sqrt(double(pump.size())));
  const auto again = run_virtual_experiment(ens, {-1, 1}, o);
  for (std::size_t i = 0; i < table.rows.size(); ++i) EXPECT_EQ(table.rows[i].fit.phase, again.rows[i].fit.phase);

  const auto one = run_ensemble(cfg, PumpPulse{}, grid, 2, 1, 17);
  EXPECT_THROW(run_virtual_experiment(one, {-1}), ConfigError);
  EXPECT_THROW(run_virtual_experiment(ens, {3}), ConfigError);
}

TEST(Interferometry, FitTableCsv) {
  FitTable t;
  t.rows.push_back({2, -1, "1-2", FringeFit{0.5, -1.25, 0.01, true}});
  const auto path = (std::filesystem::temp_directory_path() / "srscomb_fits.csv").string();
  write_fit_table_csv(path, t);
  std::ifstream is(path);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "shot,line,fiber_pair,visibility,phi,residual,success");
  EXPECT_EQ(row.substr(0, 9), "2,-1,1-2,");
  EXPECT_DOUBLE_EQ(std::stod(row.substr(9)), 0.5);
  EXPECT_EQ(row.back(), '1');
  std::filesystem::remove(path);
  EXPECT_THROW(write_fit_table_csv("/nonexistent-dir/x.csv", t), IoError);
}
