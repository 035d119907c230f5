#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "shds/random.hpp"

using namespace shds;

TEST(RandomStream, DrawDependsOnlyOnCoordinates) {
  RandomStream a(7, 3, 1), b(7, 3, 1);
  for (int k = 0; k < 5; ++k) a.next();
  EXPECT_EQ(a.peek(2).key(), b.peek(2).key());
  EXPECT_EQ(a.draw_counter(), 5u);
  Draw d1 = a.peek(9), d2 = b.peek(9);
  EXPECT_EQ(d1.uniform(), d2.uniform());
}

TEST(RandomStream, CoordinatesSeparateStreams) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t s : {1u, 2u})
    for (std::uint64_t t : {0u, 1u})
      for (std::uint64_t c : {0u, 1u, 2u, 3u}) keys.insert(RandomStream(s, t, c).key(0));
  EXPECT_EQ(keys.size(), 16u);
  const RandomStream base(1, 2, 0);
  const RandomStream ch = base.channel(kInitialChannel);
  EXPECT_EQ(ch.channel_index(), kInitialChannel);
  EXPECT_EQ(ch.trial_index(), 2u);
  EXPECT_EQ(ch.draw_counter(), 0u);
}

TEST(Draw, SubDrawsAreReproducible) {
  Draw a(42), b(42);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(a.bits(), b.bits());
}

TEST(Draw, UniformMomentsAndRange) {
  RandomStream s(11, 0);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    Draw d = s.next();
    const double u = d.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double o = d.uniform_open();
    ASSERT_GT(o, 0.0);
    ASSERT_LT(o, 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n, var = sum2 / n - mean * mean;
  // Standard error of the mean is sqrt(1/12 / n) ~ 6.5e-4.
  EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(var, 1.0 / 12.0, 2e-3);
}

TEST(Draw, NormalMoments) {
  RandomStream s(12, 0);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    Draw d = s.next();
    const double g = d.normal();
    sum += g;
    sum2 += g * g;
  }
  EXPECT_NEAR(sum / n, 0.0, 4 / std::sqrt(double(n)));
  EXPECT_NEAR(sum2 / n, 1.0, 0.02);
}

TEST(Mix64, KnownValue) {
  // splitmix64 reference output for state 0 after one increment.
  EXPECT_EQ(mix64(0), 0xE220A8397B1DCDAFULL);
}
