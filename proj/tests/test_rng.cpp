#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "trafficrisk/rng.hpp"

using namespace trafficrisk;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
  auto z = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(z, (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  auto f = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(f, (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  auto p = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(p, (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, SameSeedAndStreamRepeat) {
  RandomStream a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(RandomStream, StreamsDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t s = 0; s < 100; ++s) {
    RandomStream r(7, s);
    first.insert(r());
  }
  EXPECT_EQ(first.size(), 100u);
  RandomStream a(7, 0), b(8, 0);
  EXPECT_NE(a(), b());
}

TEST(RandomStream, UniformOpenInterval) {
  RandomStream r(1, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RandomStream, ExponentialMean) {
  RandomStream r(2, 0);
  const int n = 200000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.exponential(20.0);
  EXPECT_NEAR(s / n, 0.05, 4.0 * 0.05 / std::sqrt(n));
}

TEST(RandomStream, NormalMoments) {
  RandomStream r(3, 0);
  const int n = 200000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.standard_normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(ss / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

class GammaMoments : public ::testing::TestWithParam<double> {};

TEST_P(GammaMoments, MeanAndVarianceEqualShape) {
  const double k = GetParam();
  RandomStream r(4, static_cast<std::uint64_t>(k * 100));
  const int n = 200000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = r.gamma(k);
    ASSERT_GT(g, 0.0);
    s += g;
    ss += g * g;
  }
  const double mean = s / n, var = ss / n - mean * mean;
  EXPECT_NEAR(mean, k, 5.0 * std::sqrt(k / n));
  EXPECT_NEAR(var / k, 1.0, 0.03);
}

INSTANTIATE_TEST_SUITE_P(Shapes, GammaMoments, ::testing::Values(0.3, 1.0, 2.66, 3.53, 10.0));

TEST(RandomStream, BetaInUnitInterval) {
  RandomStream r(5, 0);
  for (int i = 0; i < 100000; ++i) {
    const double x = r.beta(2.66, 3.53);
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
}
