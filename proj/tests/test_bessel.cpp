#include <gtest/gtest.h>

#include <cmath>

#include "srscomb/checks.hpp"

using namespace srscomb;

TEST(Bessel, MatchesStandardLibrary) {
  for (int nu : {0, 1, 2, 5})
    for (double x : {0.0, 0.1, 1.0, 4.5, 12.0, 40.0}) {
      const double ref = std::cyl_bessel_i(static_cast<double>(nu), x);
      EXPECT_NEAR(bessel_i(nu, x), ref, 1e-12 * std::max(1.0, ref)) << "nu=" << nu << " x=" << x;
    }
}

TEST(Bessel, SeriesTruncationBelowTolerance) {
  for (double y : {0.01, 1.0, 50.0, 400.0, 2500.0}) {
    const auto r = bessel_reduced_series(1, y);
    EXPECT_LT(r.truncation_estimate, 1e-10) << "y=" << y;
    EXPECT_LT(r.terms, kSeriesTermCap);
  }
}

TEST(Bessel, SeriesCapRaisesNumericError) {
  EXPECT_THROW(bessel_reduced_series(0, 1e9), NumericError);
}

TEST(Bessel, KernelDomainErrors) {
  EXPECT_THROW(green_kernel_stokes(1.0, 0.2, 0.3), ConfigError);
  EXPECT_THROW(green_kernel_stokes(1.0, 0.2, -0.1), ConfigError);
  EXPECT_THROW(GreenKernelOracle(-1.0), ConfigError);
  EXPECT_NO_THROW(green_kernel_stokes(1.0, 0.3, 0.3));
}

TEST(Bessel, ZeroGainKernelVanishes) {
  EXPECT_EQ(green_kernel_stokes(0.0, 0.7, 0.1), cplx{});
  const auto grid = build_grid(1.0, 1.0, 16, 16);
  for (double v : GreenKernelOracle(0.0).binned_mean_intensity(PumpPulse{}, grid)) EXPECT_EQ(v, 0.0);
}

TEST(Bessel, KernelSmallArgumentLimit) {
  // K_f(w) = sqrt(g/w) I_1(2 sqrt(g w)) tends to g as w -> 0.
  EXPECT_NEAR(green_kernel_stokes(3.0, 0.5, 0.5).real(), 3.0, 1e-15);
  const double g = 3.0, w = 0.25;
  EXPECT_NEAR(green_kernel_stokes(g, 0.75, 0.5).real(), std::sqrt(g / w) * std::cyl_bessel_i(1.0, 2.0 * std::sqrt(g * w)), 1e-12);
}

TEST(Bessel, MeanStokesIncreasesWithGain) {
  const PumpPulse pump;
  double prev = 0.0;
  for (double g : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
    const double v = GreenKernelOracle(g).point_mean_intensity(pump, 0.7);
    EXPECT_GT(v, prev) << "g=" << g;
    prev = v;
  }
}

TEST(Bessel, SeriesAgreesWithIntegrator) {
  const auto r = stokes_oracle_check(5.0, 256);
  EXPECT_LE(r.relative_error, 1e-4);
}

TEST(Bessel, BinnedOracleApproachesPointValues) {
  const PumpPulse pump;
  const GreenKernelOracle oracle(4.0);
  const auto grid = build_grid(1.0, 1.0, 256, 256);
  const auto binned = oracle.binned_mean_intensity(pump, grid);
  for (int k : {64, 128, 160}) {
    const double point = oracle.point_mean_intensity(pump, grid.tau_center(k));
    EXPECT_NEAR(binned[static_cast<std::size_t>(k)], point, 0.02 * point) << "cell " << k;
  }
}
