#include <gtest/gtest.h>

#include "spectro/synthetic.hpp"

using namespace spectro;
using namespace spectro::synth;

namespace {

SceneSpec small(std::uint64_t seed = 5) {
  auto s = SceneSpec::visible();
  s.height = 64;
  s.width = 96;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Synthetic, PixelsFollowTheIlluminationModelWithoutNoise) {
  auto spec = small();
  spec.noise_sigma = 0.0;
  const auto sc = generate(spec);
  for (std::size_t r = 0; r < sc.cube.height(); r += 7)
    for (std::size_t c = 0; c < sc.cube.width(); c += 5) {
      const std::size_t i = r * sc.cube.width() + c;
      const auto& alb = sc.albedo_at(i);
      const auto ref = illumination::render_radiance(alb, sc.sky, sc.true_ratio, sc.geometry[i]);
      for (std::size_t k = 0; k < ref.size(); ++k)
        ASSERT_NEAR(sc.cube.at(r, c, k), ref[k], 1e-6 * std::max(1.0, ref[k]));
    }
}

TEST(Synthetic, ShadowMaskAgreesWithVisibilityAndFraction) {
  for (double frac : {0.15, 0.3, 0.45}) {
    auto spec = small();
    spec.shadow_frac = frac;
    const auto sc = generate(spec);
    const auto& m = *sc.labels.shadow_mask();
    for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(m[i] != 0, sc.geometry[i].visible == 0);
    EXPECT_NEAR(mask_fraction(m), frac, 0.03);
  }
}

TEST(Synthetic, EveryClassPresentAndLabelled) {
  const auto sc = generate(small());
  EXPECT_EQ(sc.labels.entries().size(), sc.cube.pixels());
  std::vector<std::size_t> count(sc.labels.n_classes(), 0);
  for (int k : sc.labels.dense()) count[static_cast<std::size_t>(k)]++;
  for (auto c : count) EXPECT_GT(c, 0u);
  for (const auto& a : sc.cell_albedos)
    for (double v : a) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto a = generate(small(9));
  const auto b = generate(small(9));
  const auto c = generate(small(10));
  EXPECT_EQ(a.cube, b.cube);
  EXPECT_FALSE(a.cube == c.cube);
}

TEST(Synthetic, NoiseIsRelativeAndUnbiased) {
  auto spec = small();
  spec.noise_sigma = 0.0;
  const auto clean = generate(spec);
  spec.noise_sigma = 0.01;
  const auto noisy = generate(spec);
  double s = 0.0, s2 = 0.0;
  const auto& a = clean.cube.data();
  const auto& b = noisy.cube.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = b[i] / a[i] - 1.0;
    s += e;
    s2 += e * e;
  }
  const double n = static_cast<double>(a.size());
  EXPECT_NEAR(s / n, 0.0, 5e-4);
  EXPECT_NEAR(std::sqrt(s2 / n), 0.01, 1e-3);
}

TEST(Synthetic, TimePairSharesMaterialsAndMovesShadows) {
  const auto [t1, t2] = generate_timepair(small(), 55.0, 40.0);
  EXPECT_EQ(t1.labels.dense(), t2.labels.dense());
  EXPECT_EQ(t1.albedos, t2.albedos);
  EXPECT_EQ(t1.cell_albedos, t2.cell_albedos);
  EXPECT_EQ(t1.true_ratio.values(), t2.true_ratio.values());
  EXPECT_GT(mask_fraction(*t2.labels.shadow_mask()), mask_fraction(*t1.labels.shadow_mask()));
  EXPECT_NE(*t1.labels.shadow_mask(), *t2.labels.shadow_mask());
  const auto [s1, s2] = generate_timepair(small(), 50.0, 50.0);
  EXPECT_EQ(s1.cube, s2.cube);
  EXPECT_THROW(generate_timepair(small(), 55.0, 95.0), Error);
}

TEST(Synthetic, SwirPresetGrid) {
  auto spec = SceneSpec::swir();
  spec.height = 32;
  spec.width = 48;
  const auto sc = generate(spec);
  EXPECT_DOUBLE_EQ(sc.cube.grid().min(), 1009.0);
  EXPECT_DOUBLE_EQ(sc.cube.grid().max(), 2482.0);
}

TEST(Synthetic, InvalidSpecThrows) {
  auto s = small();
  s.shadow_frac = 1.0;
  EXPECT_THROW(generate(s), Error);
  s = small();
  s.sun_elevation_deg = 0.0;
  EXPECT_THROW(generate(s), Error);
}

TEST(SunlitRegions, RectanglesAreSunlitSingleClassAndDisjoint) {
  const auto sc = generate(SceneSpec::visible());
  const auto dense = sc.labels.dense();
  const std::size_t W = sc.cube.width();
  for (int k = 0; k < static_cast<int>(sc.labels.n_classes()); ++k) {
    const auto rects = find_sunlit_regions(sc.labels, k, 1000);
    std::size_t total = 0;
    std::vector<std::uint8_t> hit(sc.cube.pixels(), 0);
    for (const auto& r : rects) {
      total += r.area();
      for (std::size_t row = r.r0; row < r.r1; ++row)
        for (std::size_t col = r.c0; col < r.c1; ++col) {
          ASSERT_EQ(dense[row * W + col], k);
          ASSERT_FALSE(sc.labels.in_shadow(row, col));
          ASSERT_EQ(hit[row * W + col]++, 0);
        }
    }
    EXPECT_GE(total, 1000u);
  }
  EXPECT_THROW(find_sunlit_regions(sc.labels, 0, sc.cube.pixels()), Error);
}
