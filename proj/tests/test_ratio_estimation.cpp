#include <cmath>

#include <gtest/gtest.h>

#include "spectro/ratio_estimation.hpp"
#include "spectro/savitzky_golay.hpp"
#include "spectro/synthetic.hpp"

using namespace spectro;
using namespace spectro::ratio;

TEST(SavitzkyGolay, PreservesPolynomialsUpToOrder) {
  Rng rng(1);
  for (std::size_t order : {0u, 1u, 2u, 3u}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> coef(order + 1);
      for (auto& c : coef) c = rng.uniform(-1, 1);
      std::vector<double> y(40);
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = static_cast<double>(i) / 10.0;
        double v = 0.0;
        for (std::size_t p = order + 1; p-- > 0;) v = v * x + coef[p];
        y[i] = v;
      }
      const auto s = savitzky_golay(y, 11, order);
      for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(s[i], y[i], 1e-9) << order << " " << i;
    }
  }
}

TEST(SavitzkyGolay, InteriorWeightsMatchClassicTable) {
  // Window 5, quadratic: (-3, 12, 17, 12, -3) / 35.
  std::vector<double> impulse(9, 0.0);
  impulse[4] = 35.0;
  const auto s = savitzky_golay(impulse, 5, 2);
  EXPECT_NEAR(s[2], -3.0, 1e-12);
  EXPECT_NEAR(s[3], 12.0, 1e-12);
  EXPECT_NEAR(s[4], 17.0, 1e-12);
}

TEST(SavitzkyGolay, ReducesNoiseAndValidatesArguments) {
  Rng rng(2);
  std::vector<double> y(200);
  double raw = 0.0, smooth = 0.0;
  for (auto& v : y) v = rng.normal();
  for (double v : savitzky_golay(y, 11, 2)) smooth += v * v;
  for (double v : y) raw += v * v;
  EXPECT_LT(smooth, 0.5 * raw);
  EXPECT_THROW(savitzky_golay(y, 10, 2), Error);
  EXPECT_THROW(savitzky_golay(y, 3, 3), Error);
  EXPECT_EQ(savitzky_golay(std::vector<double>{1.0, 2.0}, 11, 2), (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(savitzky_golay(std::vector<double>{1.0, 2.0, 4.0}, 11, 2).size(), 3u);
}

TEST(LogChromaticity, IntensityInvariant) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p{rng.uniform(0.01, 1), rng.uniform(0.01, 1), rng.uniform(0.01, 1)};
    const double k = rng.uniform(0.1, 10);
    const auto a = log_chromaticity(p);
    const auto b = log_chromaticity(Vec3{k * p[0], k * p[1], k * p[2]});
    EXPECT_NEAR(a[0], b[0], 1e-12);
    EXPECT_NEAR(a[1], b[1], 1e-12);
    EXPECT_NEAR(a[0], std::log(p[0] / std::cbrt(p[0] * p[1] * p[2])), 1e-12);
  }
  EXPECT_THROW(log_chromaticity(Vec3{0.0, 1.0, 1.0}), Error);
}

TEST(InvariantAxis, RecoversConstructedDirection) {
  for (double truth : {20.0, 65.0, 130.0}) {
    const double w = truth * std::numbers::pi / 180.0;
    const Vec2 inv{std::cos(w), std::sin(w)}, ill{-std::sin(w), std::cos(w)};
    Rng rng(4);
    std::vector<Vec2> x;
    for (int cls = 0; cls < 5; ++cls)
      for (int i = 0; i < 400; ++i) {
        const double a = 0.4 * cls, t = rng.uniform(-1.0, 1.0);
        x.push_back({a * inv[0] + t * ill[0], a * inv[1] + t * ill[1]});
      }
    const auto cs = find_invariant_axis(x);
    EXPECT_NEAR(cs.angle_deg, truth, 1.0);
    EXPECT_NEAR(dot(cs.invariant, cs.illumination), 0.0, 1e-12);
  }
  EXPECT_THROW(find_invariant_axis({{1.0, 1.0}, {1.0, 1.0}}), Error);
}

TEST(PairValidity, Thresholds) {
  const PairValidityConfig cfg;
  EXPECT_TRUE(is_sun_shadow_pair(1.0, 1.0, 3.0, 1.0, cfg));
  EXPECT_FALSE(is_sun_shadow_pair(1.5, 1.0, 3.0, 1.0, cfg));  // different material
  EXPECT_FALSE(is_sun_shadow_pair(1.0, 1.0, 2.0, 1.0, cfg));  // step below xi
  EXPECT_THROW(PairValidityConfig({0.0, 1.2, {1}}).validate(), Error);
  EXPECT_THROW(PairValidityConfig({0.3, 1.2, {}}).validate(), Error);
}

namespace {

// One material, left half shadowed, rendered with the illumination model.
HyperCube half_shadow_cube(const std::vector<double>& ratio, std::size_t h, std::size_t w) {
  const auto grid = WavelengthGrid::linear(400, 990, ratio.size());
  HyperCube c(h, w, grid);
  std::vector<double> albedo(ratio.size()), sky(ratio.size());
  for (std::size_t k = 0; k < ratio.size(); ++k) {
    albedo[k] = 0.3 + 0.2 * std::sin(0.1 * static_cast<double>(k));
    sky[k] = 1.0 + 0.5 * static_cast<double>(k) / static_cast<double>(ratio.size());
  }
  const illumination::IrradianceRatio r(ratio);
  for (std::size_t row = 0; row < h; ++row)
    for (std::size_t col = 0; col < w; ++col) {
      const illumination::GeometryParams g{col < w / 2 ? 0 : 1, 0.3, 0.8};
      c.set_spectrum(row, col, illumination::render_radiance(albedo, sky, r, g));
    }
  return c;
}

}  // namespace

TEST(TransectPairs, StraddleTheShadowEdge) {
  const auto grid = WavelengthGrid::linear(400, 990, 60);
  std::vector<double> ratio(60);
  for (std::size_t k = 0; k < 60; ++k) ratio[k] = std::pow(grid[k] / 400.0, 6.0);
  const auto cube = half_shadow_cube(ratio, 6, 20);
  const auto rgb = make_pseudo_rgb(cube, default_bands(cube.grid()));
  ChromaticitySpace space;
  space.chroma = log_chromaticity(rgb);
  // Project along the direction that cancels the sun/shadow chromaticity shift.
  const auto& lit = space.chroma[19];
  const auto& dark = space.chroma[0];
  const double dx = lit[0] - dark[0], dy = lit[1] - dark[1], n = std::hypot(dx, dy);
  space.illumination = {dx / n, dy / n};
  space.invariant = {-dy / n, dx / n};
  const auto pairs = scan_transect_pairs(rgb, space);
  // Offsets 1, 2, 4 across the edge between columns 9 and 10: 1 + 2 + 4 pairs per row.
  EXPECT_EQ(pairs.size(), 6u * 7u);
  for (const auto& p : pairs) {
    EXPECT_GE(p.sunlit.col, 10u);
    EXPECT_LT(p.shadow.col, 10u);
  }
  const auto est = estimate_ratio(cube, pairs);
  EXPECT_GT(cosine_similarity(est.curve.values(), ratio), 0.9999);
}

TEST(EstimateRatio, ExactOnNoiseFreePairs) {
  std::vector<double> ratio(60);
  for (std::size_t k = 0; k < 60; ++k) ratio[k] = 1.0 + 0.02 * static_cast<double>(k * k) / 59.0;
  const auto cube = half_shadow_cube(ratio, 2, 4);
  const auto est = estimate_ratio(cube, {{{0, 2}, {0, 1}}}, {5, 2, 1e-6});
  // L_sun / L_shadow - 1 = r cos(theta) / Gamma, and a quadratic survives the order-2 filter.
  const double scale = std::cos(0.3) / 0.8;
  for (std::size_t k = 0; k < 60; ++k) EXPECT_NEAR(est.curve[k], ratio[k] * scale, 1e-5);
  EXPECT_EQ(est.n_pairs, 1u);
}

TEST(EstimateRatio, FloorAndErrors) {
  const auto cube = half_shadow_cube(std::vector<double>(20, 1.0), 2, 4);
  EXPECT_THROW(estimate_ratio(cube, {}), Error);
  EXPECT_THROW(estimate_ratio(cube, {{{0, 2}, {0, 1}}}, {4, 2, 1e-6}), Error);
  // Reversed pair: sun/shadow - 1 is negative, so every channel is floored.
  const auto est = estimate_ratio(cube, {{{0, 1}, {0, 2}}}, {5, 2, 1e-6});
  for (double v : est.curve.values()) EXPECT_EQ(v, 1e-6);
}

TEST(PseudoRgb, ChannelsAndBounds) {
  const auto cube = half_shadow_cube(std::vector<double>(60, 2.0), 2, 2);
  const auto rgb = make_pseudo_rgb(cube, {450, 550, 600});
  EXPECT_EQ(rgb.channels[0], cube.grid().nearest(450));
  EXPECT_THROW(make_pseudo_rgb(cube, {300, 550, 600}), Error);
  EXPECT_EQ(default_bands(WavelengthGrid::linear(1009, 2482, 10))[0], 1060.0);
}

TEST(EstimateRatio, SyntheticSceneRecovery) {
  auto spec = synth::SceneSpec::visible();
  spec.height = 96;
  spec.width = 160;
  spec.seed = 3;
  const auto scene = synth::generate(spec);
  const auto est = estimate_ratio_from_image(scene.cube);
  EXPECT_GT(est.n_pairs, 50u);
  EXPECT_GE(cosine_similarity(est.curve.values(), scene.true_ratio.values()), 0.98);
}
