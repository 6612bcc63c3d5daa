#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "resalloc/rng.hpp"

using resalloc::Rng;
using resalloc::mix_seed;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.uniform(), b.uniform());
    ASSERT_EQ(a.normal(), b.normal());
    ASSERT_EQ(a.poisson(1.5), b.poisson(1.5));
    ASSERT_EQ(a.geometric(7.0), b.geometric(7.0));
  }
}

TEST(Rng, MixSeedSeparatesStreams) {
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 1));
  EXPECT_NE(mix_seed(0, 0), mix_seed(0, 1));
  EXPECT_EQ(mix_seed(5, 9), mix_seed(5, 9));
}

TEST(Rng, UniformRange) {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, UniformIndexCoversRange) {
  Rng r(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, SampleMoments) {
  Rng r(11);
  const int n = 200000;
  double sn = 0, sn2 = 0, sp = 0, sg = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
    sp += static_cast<double>(r.poisson(1.5));
    sg += static_cast<double>(r.geometric(7.0));
  }
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
  EXPECT_NEAR(sp / n, 1.5, 0.02);
  EXPECT_NEAR(sg / n, 7.0, 0.1);
}

TEST(Rng, PoissonLargeMeanDoesNotUnderflow) {
  Rng r(5);
  double s = 0;
  for (int i = 0; i < 20000; ++i) s += static_cast<double>(r.poisson(200.0));
  EXPECT_NEAR(s / 20000, 200.0, 1.0);
}

TEST(Rng, GeometricZeroMean) {
  Rng r(8);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(r.geometric(0.0), 0u);
}
