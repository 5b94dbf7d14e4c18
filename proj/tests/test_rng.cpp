#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "spectro/rng.hpp"

using spectro::derive_seed;
using spectro::Rng;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, PinnedReferenceValues) {
  // Saved experiments depend on these exact streams.
  Rng r(0);
  EXPECT_EQ(r.next(), 0x1a70a846bd9cc2a9ULL);
  EXPECT_EQ(r.next(), 0x6a0ef250cd2b9e80ULL);
  EXPECT_EQ(r.next(), 0x61325a7589c2ff27ULL);
  EXPECT_EQ(derive_seed(7, {1, 2}), 0x6a907fe24587b6cbULL);
}

TEST(Rng, DerivedStreamsDifferByKey) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 100; ++k) seen.insert(derive_seed(7, {k}));
  for (std::uint64_t k = 0; k < 100; ++k) seen.insert(derive_seed(7, {k, 0}));
  EXPECT_EQ(seen.size(), 200u);
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
}

TEST(Rng, UniformMomentsAndRange) {
  Rng r(3);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 0.002);
}

TEST(Rng, UniformClosedHitsBounds) {
  Rng r(5);
  for (int i = 0; i < 10000; ++i) {
    const double v = r.uniform_closed(0.0, 1.0);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(Rng, BelowIsUnbiasedOnSmallRange) {
  Rng r(11);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) counts[r.below(6)]++;
  for (int c : counts) EXPECT_NEAR(c, n / 6, 5 * std::sqrt(n / 6.0));
}

TEST(Rng, NormalMoments) {
  Rng r(9);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(1);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 100u);
  EXPECT_NE(v[0] * 1000 + v[1], 1);
}
