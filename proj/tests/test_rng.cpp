#include <gtest/gtest.h>

#include <set>

#include "srscomb/rng.hpp"

using namespace srscomb;

TEST(Rng, StreamIsAPureFunctionOfItsKey) {
  CounterRng a(7, 3, 1, StreamPurpose::VacuumSeed), b(7, 3, 1, StreamPurpose::VacuumSeed);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
  CounterRng c(a.key());
  CounterRng d(7, 3, 1, StreamPurpose::VacuumSeed);
  EXPECT_EQ(c(), d());
}

TEST(Rng, DistinctKeysGiveDistinctStreams) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t shot = 0; shot < 200; ++shot)
    for (std::uint64_t fiber = 0; fiber < 2; ++fiber)
      for (auto p : {StreamPurpose::VacuumSeed, StreamPurpose::PumpJitter, StreamPurpose::Interferometer}) firsts.insert(CounterRng(1, shot, fiber, p)());
  EXPECT_EQ(firsts.size(), 200u * 2u * 3u);
}

TEST(Rng, ComplexNormalMoments) {
  GaussianSource g(CounterRng(99, 0, 0, StreamPurpose::Synthetic));
  const int n = 200000;
  const double var = 2.5;
  std::complex<double> mean{}, pseudo{};
  double power = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto z = g.complex_normal(var);
    mean += z;
    power += std::norm(z);
    pseudo += z * z;
  }
  mean /= double(n);
  power /= n;
  pseudo /= double(n);
  const double se = std::sqrt(var / n);
  EXPECT_LT(std::abs(mean), 4.0 * se);
  EXPECT_NEAR(power, var, 4.0 * var / std::sqrt(double(n)));
  EXPECT_LT(std::abs(pseudo), 4.0 * var / std::sqrt(double(n)));
}

TEST(Rng, UniformInUnitInterval) {
  GaussianSource g(CounterRng(5));
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
  }
  EXPECT_NEAR(s / 100000.0, 0.5, 0.005);
}
