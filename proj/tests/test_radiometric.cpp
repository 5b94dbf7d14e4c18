#include <gtest/gtest.h>

#include "spectro/radiometric.hpp"
#include "test_util.hpp"

using namespace spectro;
using namespace spectro::radiometric;
using spectro::testing::random_spectrum;

namespace {

const auto kGrid = WavelengthGrid::linear(400, 990, 60);

std::vector<Spectrum> random_scene(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<Spectrum> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(random_spectrum(rng, d));
  return s;
}

// O(d^3) reference: a point is on the upper hull iff no chord between two other
// points passes strictly above it.
std::vector<double> brute_force_hull(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t d = x.size();
  std::vector<double> out(d, -1e300);
  for (std::size_t i = 0; i < d; ++i) out[i] = y[i];
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b)
      for (std::size_t i = a; i <= b; ++i) {
        const double t = (x[i] - x[a]) / (x[b] - x[a]);
        out[i] = std::max(out[i], y[a] + t * (y[b] - y[a]));
      }
  return out;
}

}  // namespace

TEST(Radiometric, MethodNamesRoundTrip) {
  for (Method m : {Method::Raw, Method::FlatField, Method::ResidualImage, Method::IARR, Method::ContinuumRemoval,
                   Method::ZeroWavelength})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("bogus"), Error);
}

TEST(Radiometric, RawIsIdentity) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_spectrum(rng, 60);
    EXPECT_EQ(normalize(make(Method::Raw), s), s);
  }
}

TEST(Radiometric, IarrIsInvariantToGlobalSceneScale) {
  Rng rng(2);
  const auto scene = random_scene(rng, 50, 60);
  const auto n = fit(make(Method::IARR), scene);
  for (int i = 0; i < 100; ++i) {
    const double k = rng.uniform(0.1, 10.0);
    std::vector<Spectrum> scaled = scene;
    for (auto& s : scaled)
      for (auto& v : s) v *= k;
    const auto nk = fit(make(Method::IARR), scaled);
    const auto s = random_spectrum(rng, 60);
    auto sk = s;
    for (auto& v : sk) v *= k;
    EXPECT_LT(spectro::testing::max_rel_error(normalize(n, s), normalize(nk, sk)), 1e-12);
  }
}

TEST(Radiometric, FlatFieldOfPanelMeanIsOnes) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto panel = random_scene(rng, 9, 60);
    const auto n = fit(make(Method::FlatField), panel, panel);
    const auto out = normalize(n, n.panel_mean);
    for (double v : out) ASSERT_EQ(v, 1.0);
  }
}

TEST(Radiometric, FlatFieldFromCubePanel) {
  HyperCube c(4, 4, WavelengthGrid::linear(400, 500, 3));
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t col = 0; col < 4; ++col) c.set_spectrum(r, col, std::vector<double>{1.0 + r, 2.0, 4.0});
  auto n = make(Method::FlatField);
  n.panel = {0, 0, 2, 4};
  n = fit(n, c);
  EXPECT_DOUBLE_EQ(n.panel_mean[0], 1.5);
  const auto out = normalize_cube(n, c);
  EXPECT_FLOAT_EQ(out.at(3, 0, 0), 4.0f / 1.5f);
  EXPECT_FLOAT_EQ(out.at(3, 0, 2), 1.0f);
  n.panel = {0, 0, 9, 4};
  EXPECT_THROW(fit(n, c), Error);
}

TEST(Radiometric, ZeroWavelengthChannelIsExactlyZero) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    auto n = make(Method::ZeroWavelength);
    n.zero_channel = rng.below(60);
    const auto s = random_spectrum(rng, 60);
    const auto out = normalize(n, s);
    EXPECT_EQ(out[n.zero_channel], 0.0);
    for (std::size_t k = 0; k < 60; ++k) EXPECT_NEAR(out[k], s[k] - s[n.zero_channel], 1e-15);
  }
  auto bad = make(Method::ZeroWavelength);
  bad.zero_channel = 60;
  EXPECT_THROW(normalize(bad, Spectrum(60, 1.0)), Error);
}

TEST(Radiometric, ContinuumRemovalInUnitIntervalWithHullVerticesAtOne) {
  Rng rng(5);
  const auto& nm = kGrid.nm();
  for (int i = 0; i < 100; ++i) {
    const auto s = random_spectrum(rng, 60);
    const auto out = normalize(make(Method::ContinuumRemoval), s, nm);
    const auto ref = brute_force_hull(nm, s);
    for (std::size_t k = 0; k < 60; ++k) {
      EXPECT_GT(out[k], 0.0);
      EXPECT_LE(out[k], 1.0);
      EXPECT_NEAR(out[k], std::min(1.0, s[k] / ref[k]), 1e-12);
      if (s[k] >= ref[k]) {
        EXPECT_EQ(out[k], 1.0);
      }
    }
    EXPECT_EQ(out.front(), 1.0);
    EXPECT_EQ(out.back(), 1.0);
  }
}

TEST(Radiometric, UpperHullMatchesBruteForce) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const std::size_t d = 2 + rng.below(30);
    const auto g = WavelengthGrid::linear(400, 900, d);
    const auto s = random_spectrum(rng, d);
    const auto h = upper_hull(g.nm(), s);
    const auto ref = brute_force_hull(g.nm(), s);
    for (std::size_t k = 0; k < d; ++k) ASSERT_NEAR(h[k], ref[k], 1e-12);
  }
}

TEST(Radiometric, ResidualImageRemovesBandMeans) {
  Rng rng(7);
  const auto scene = random_scene(rng, 40, 10);
  auto n = fit(make(Method::ResidualImage), scene);
  ASSERT_TRUE(n.reference_channel.has_value());
  std::vector<double> mean(10, 0.0);
  for (const auto& s : scene) {
    const auto out = normalize(n, s);
    for (std::size_t k = 0; k < 10; ++k) mean[k] += out[k] / 40.0;
  }
  for (double m : mean) EXPECT_NEAR(m, 0.0, 1e-12);
  // Scaling one spectrum does not change its residual.
  auto s2 = scene[3];
  for (auto& v : s2) v *= 3.7;
  EXPECT_LT(spectro::testing::max_rel_error(normalize(n, scene[3]), normalize(n, s2)), 1e-12);
}

TEST(Radiometric, UnfittedMethodsThrow) {
  EXPECT_THROW(normalize(make(Method::IARR), Spectrum(5, 1.0)), Error);
  EXPECT_THROW(normalize(make(Method::ContinuumRemoval), Spectrum(5, 1.0)), Error);
  EXPECT_THROW(fit(make(Method::IARR), std::vector<Spectrum>{}), Error);
}
