#include <cmath>

#include <gtest/gtest.h>

#include "spectro/illumination.hpp"
#include "test_util.hpp"

using namespace spectro;
using namespace spectro::illumination;

namespace {

GeometryParams random_geometry(Rng& rng, int visible) {
  return {visible, rng.uniform(0.0, kHalfPi), rng.uniform_closed(0.0, 1.0)};
}

std::vector<Sample> batch_of(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<Sample> b;
  for (std::size_t i = 0; i < n; ++i) b.push_back({spectro::testing::random_spectrum(rng, d), int(i % 3), {i, 0}});
  return b;
}

}  // namespace

TEST(Illumination, RelightMatchesRenderUnderTarget) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 60;
    const auto albedo = spectro::testing::random_spectrum(rng, d, 0.0, 1.0);
    const auto sky = spectro::testing::random_spectrum(rng, d, 0.1, 5.0);
    const IrradianceRatio ratio(spectro::testing::random_spectrum(rng, d, 0.05, 20.0));
    const auto src = random_geometry(rng, 1);
    const auto dst = random_geometry(rng, rng.bernoulli(0.5));
    const auto got = relight(render_radiance(albedo, sky, ratio, src), ratio, src, dst);
    EXPECT_LT(spectro::testing::max_rel_error(got, render_radiance(albedo, sky, ratio, dst)), 1e-9);
  }
}

TEST(Illumination, RenderFormula) {
  const std::vector<double> albedo{0.5}, sky{2.0};
  const IrradianceRatio r({3.0});
  const auto L = render_radiance(albedo, sky, r, {1, 0.0, 0.5});
  EXPECT_NEAR(L[0], 0.5 / std::numbers::pi * (3.0 * 2.0 + 0.5 * 2.0), 1e-15);
  EXPECT_NEAR(render_radiance(albedo, sky, r, {0, 0.3, 0.5})[0], 0.5 / std::numbers::pi * 1.0, 1e-15);
}

TEST(Illumination, GeometryValidation) {
  EXPECT_THROW((GeometryParams{2, 0.0, 0.5}).validate(), Error);
  EXPECT_THROW((GeometryParams{1, 2.0, 0.5}).validate(), Error);
  EXPECT_THROW((GeometryParams{1, 0.0, 1.5}).validate(), Error);
  const IrradianceRatio r({1.0});
  EXPECT_THROW(relight_gain(r, {0, 0.0, 1.0}, {1, 0.0, 1.0}), Error);
  EXPECT_THROW(IrradianceRatio({1.0, -1.0}), Error);
}

TEST(Augment, SizeIsBatchTimesMPlusOne) {
  Rng rng(2);
  const auto batch = batch_of(rng, 50, 60);
  const auto est = scaled_by_sun_angle(IrradianceRatio(std::vector<double>(60, 4.0)));
  const auto out = augment_batch(batch, {10, 3}, est);
  ASSERT_EQ(out.size(), 550u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(out[i].spectrum, batch[i].spectrum);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].label, batch[i % 50].label);
    EXPECT_EQ(out[i].coord, batch[i % 50].coord);
  }
}

TEST(Augment, ShadowFractionIsHalf) {
  Rng rng(4);
  const auto batch = batch_of(rng, 100, 8);
  const auto est = scaled_by_sun_angle(IrradianceRatio(std::vector<double>(8, 2.0)));
  std::vector<AugmentDraw> trace;
  augment_batch(batch, {100, 5}, est, &trace);
  ASSERT_EQ(trace.size(), 10000u);
  double shadow = 0;
  for (const auto& t : trace) shadow += t.target.visible == 0;
  const double sigma = std::sqrt(0.25 / 10000.0);
  EXPECT_LT(std::abs(shadow / 10000.0 - 0.5), 3 * sigma);
}

TEST(Augment, DrawsFollowDeclaredDistributions) {
  Rng rng(5);
  const auto batch = batch_of(rng, 20, 4);
  std::vector<double> seen_theta_a;
  const RatioEstimator est = [&](double ta) {
    seen_theta_a.push_back(ta);
    return IrradianceRatio(std::vector<double>(4, 1.0)).scaled(1.0 / std::cos(ta));
  };
  std::vector<AugmentDraw> trace;
  const auto out = augment_batch(batch, {50, 9}, est, &trace);
  EXPECT_EQ(seen_theta_a.size(), 50u);
  for (const auto& t : trace) {
    EXPECT_EQ(t.theta_a, seen_theta_a[t.iteration]);
    EXPECT_EQ(t.source.visible, 1);
    EXPECT_GE(t.source.theta, 0.0);
    EXPECT_LT(t.source.theta, kHalfPi);
    EXPECT_GE(t.target.gamma, 0.0);
    EXPECT_LE(t.target.gamma, 1.0);
  }
  // Each augmented spectrum is the relit batch element under its recorded draw.
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& t = trace[i];
    const auto r = IrradianceRatio(std::vector<double>(4, 1.0)).scaled(1.0 / std::cos(t.theta_a));
    EXPECT_EQ(out[20 + i].spectrum, relight(batch[t.element].spectrum, r, t.source, t.target));
  }
}

TEST(Augment, DeterministicAndSeedSensitive) {
  Rng rng(6);
  const auto batch = batch_of(rng, 10, 6);
  const auto est = scaled_by_sun_angle(IrradianceRatio(std::vector<double>(6, 3.0)));
  const auto a = augment_batch(batch, {4, 1}, est);
  const auto b = augment_batch(batch, {4, 1}, est);
  const auto c = augment_batch(batch, {4, 2}, est);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].spectrum, b[i].spectrum);
  EXPECT_NE(a.back().spectrum, c.back().spectrum);
  // Streams are keyed per element: a prefix of the batch gets the same draws.
  const auto p = augment_batch(std::span(batch).first(5), {4, 1}, est);
  EXPECT_EQ(p[5].spectrum, a[10].spectrum);
}

TEST(Augment, MZeroReturnsBatch) {
  Rng rng(7);
  const auto batch = batch_of(rng, 5, 3);
  const auto out = augment_batch(batch, {0, 1}, scaled_by_sun_angle(IrradianceRatio({1.0, 1.0, 1.0})));
  EXPECT_EQ(out.size(), 5u);
}

TEST(Augment, LengthMismatchThrows) {
  Rng rng(8);
  const auto batch = batch_of(rng, 3, 5);
  EXPECT_THROW(augment_batch(batch, {1, 1}, scaled_by_sun_angle(IrradianceRatio({1.0, 1.0}))), Error);
}
