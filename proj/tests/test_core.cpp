#include <set>

#include <gtest/gtest.h>

#include "spectro/core.hpp"

using namespace spectro;

TEST(WavelengthGrid, LinearEndpointsAndNearest) {
  const auto g = WavelengthGrid::linear(400, 990, 60);
  ASSERT_EQ(g.size(), 60u);
  EXPECT_DOUBLE_EQ(g.min(), 400.0);
  EXPECT_DOUBLE_EQ(g.max(), 990.0);
  EXPECT_EQ(g.nearest(0.0), 0u);
  EXPECT_EQ(g.nearest(5000.0), 59u);
  EXPECT_EQ(g.nearest(g[17] + 0.1), 17u);
  const double mid = 0.5 * (g[3] + g[4]);
  EXPECT_EQ(g.nearest(mid), 3u);  // ties resolve low
}

TEST(WavelengthGrid, RejectsBadInput) {
  EXPECT_THROW(WavelengthGrid({500.0}), Error);
  EXPECT_THROW(WavelengthGrid({500.0, 500.0}), Error);
  EXPECT_THROW(WavelengthGrid({500.0, 400.0}), Error);
  EXPECT_THROW(WavelengthGrid({-1.0, 400.0}), Error);
}

TEST(HyperCube, PixelInterleavedAccess) {
  HyperCube c(2, 3, WavelengthGrid::linear(400, 500, 4));
  c.set_spectrum(1, 2, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(c.at(1, 2, 3), 4.0f);
  EXPECT_EQ(c.data()[(1 * 3 + 2) * 4 + 1], 2.0f);
  EXPECT_THROW(c.set_spectrum(0, 0, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(HyperCube(0, 3, WavelengthGrid::linear(400, 500, 4)), Error);
  EXPECT_THROW(HyperCube(1, 1, WavelengthGrid::linear(400, 500, 4), std::vector<float>(3)), Error);
}

TEST(LabelMap, ValidatesEntries) {
  const std::vector<std::string> names{"a", "b"};
  EXPECT_THROW(LabelMap(2, 2, names, {{2, 0, 0}}), Error);
  EXPECT_THROW(LabelMap(2, 2, names, {{0, 0, 2}}), Error);
  EXPECT_THROW(LabelMap(2, 2, names, {{0, 0, 0}, {0, 0, 1}}), Error);
  EXPECT_THROW(LabelMap(2, 2, names, {}, std::vector<std::uint8_t>(3)), Error);
  LabelMap m(2, 2, names, {{0, 1, 1}}, std::vector<std::uint8_t>{0, 1, 0, 0});
  EXPECT_TRUE(m.in_shadow(0, 1));
  EXPECT_EQ(m.dense(), (std::vector<int>{-1, 1, -1, -1}));
}

TEST(LogSweep, MatchesDefaultSweep) {
  EXPECT_EQ(log_sweep(100, 1000, 5), (std::vector<std::size_t>{100, 178, 316, 562, 1000}));
  EXPECT_EQ(log_sweep(50, 50, 1), (std::vector<std::size_t>{50}));
}

namespace {

struct Toy {
  HyperCube cube;
  LabelMap labels;
};

Toy toy(std::size_t H, std::size_t W) {
  HyperCube c(H, W, WavelengthGrid::linear(400, 500, 3));
  std::vector<LabelEntry> e;
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t col = 0; col < W; ++col) {
      const int k = col < W / 2 ? 0 : 1;
      c.set_spectrum(r, col, std::vector<double>{double(r), double(col), double(k)});
      e.push_back({r, col, k});
    }
  return {c, LabelMap(H, W, {"left", "right"}, e)};
}

}  // namespace

TEST(SampleRegions, TrainingComesFromRegionsAndPartsAreDisjoint) {
  const auto t = toy(20, 20);
  const std::vector<std::vector<Rect>> regions{{{0, 0, 5, 5}}, {{0, 10, 4, 16}}};
  const auto s = sample_regions(t.cube, t.labels, regions, 12, 3, 10);
  EXPECT_EQ(s.train.size(), 24u);
  EXPECT_EQ(s.validation.size(), 20u);
  EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), 400u);
  std::set<PixelCoord> seen;
  for (const auto* part : {&s.train, &s.validation, &s.test})
    for (const auto& x : *part) {
      EXPECT_TRUE(seen.insert(x.coord).second);
      EXPECT_EQ(x.spectrum[0], double(x.coord.row));
      EXPECT_EQ(x.spectrum[2], double(x.label));
    }
  for (const auto& x : s.train) EXPECT_TRUE(regions[x.label][0].contains(x.coord.row, x.coord.col));
  for (const auto& x : s.validation)
    for (const auto& rs : regions) EXPECT_FALSE(rs[0].contains(x.coord.row, x.coord.col));
}

TEST(SampleRegions, DeterministicPerSeed) {
  const auto t = toy(20, 20);
  const std::vector<std::vector<Rect>> regions{{{0, 0, 10, 10}}, {{0, 10, 10, 20}}};
  const auto a = sample_regions(t.cube, t.labels, regions, 30, 9);
  const auto b = sample_regions(t.cube, t.labels, regions, 30, 9);
  const auto c = sample_regions(t.cube, t.labels, regions, 30, 10);
  auto coords = [](const DatasetSplit& s) {
    std::vector<PixelCoord> v;
    for (const auto& x : s.train) v.push_back(x.coord);
    return v;
  };
  EXPECT_EQ(coords(a), coords(b));
  EXPECT_NE(coords(a), coords(c));
}

TEST(SampleRegions, Errors) {
  const auto t = toy(10, 10);
  EXPECT_THROW(sample_regions(t.cube, t.labels, {{{0, 0, 2, 2}}}, 1, 0), Error);
  EXPECT_THROW(sample_regions(t.cube, t.labels, {{{0, 0, 2, 2}}, {{0, 5, 2, 7}}}, 5, 0), Error);
  EXPECT_THROW(sample_regions(t.cube, t.labels, {{{0, 0, 20, 2}}, {{0, 5, 2, 7}}}, 1, 0), Error);
  EXPECT_THROW(sample_regions(t.cube, t.labels, {{{0, 0, 5, 5}}, {{0, 5, 5, 10}}}, 10, 0, 100), Error);
}
