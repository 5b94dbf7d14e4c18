// Image-based estimation of the sun/sky irradiance ratio.
//
// Pipeline: three-band pseudo-RGB image -> 2-D log-chromaticity -> entropy
// minimising invariant axis -> sun/shadow pairs along horizontal and vertical
// transects -> mean of L_sun/L_shadow - 1 over pairs -> Savitzky-Golay smoothing.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spectro/core.hpp"
#include "spectro/illumination.hpp"
#include "spectro/savitzky_golay.hpp"

namespace spectro::ratio {

inline constexpr double kChannelFloor = 1e-6;

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

struct PseudoRgb {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Vec3> pixels;                // row-major, all channels >= kChannelFloor
  std::array<double, 3> band_nm{};         // requested wavelengths
  std::array<std::size_t, 3> channels{};   // cube channels used

  const Vec3& at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  double brightness(std::size_t r, std::size_t c) const {
    const auto& p = at(r, c);
    return (p[0] + p[1] + p[2]) / 3.0;
  }
};

/// 450/550/600 nm for visible grids; 1060/1250/1630 nm when the grid starts above 1000 nm.
inline std::array<double, 3> default_bands(const WavelengthGrid& grid) {
  if (grid.min() > 1000.0) return {1060.0, 1250.0, 1630.0};
  return {450.0, 550.0, 600.0};
}

inline PseudoRgb make_pseudo_rgb(const HyperCube& cube, const std::array<double, 3>& band_nm) {
  PseudoRgb rgb;
  rgb.height = cube.height();
  rgb.width = cube.width();
  rgb.band_nm = band_nm;
  for (std::size_t i = 0; i < 3; ++i) {
    if (band_nm[i] < cube.grid().min() || band_nm[i] > cube.grid().max())
      throw Error("pseudo-RGB band " + std::to_string(band_nm[i]) + " nm lies outside the cube's wavelength span");
    rgb.channels[i] = cube.grid().nearest(band_nm[i]);
  }
  rgb.pixels.resize(cube.pixels());
  for (std::size_t r = 0; r < cube.height(); ++r)
    for (std::size_t c = 0; c < cube.width(); ++c)
      for (std::size_t i = 0; i < 3; ++i)
        rgb.pixels[r * cube.width() + c][i] = std::max<double>(cube.at(r, c, rgb.channels[i]), kChannelFloor);
  return rgb;
}

/// [log(c1/g), log(c3/g)] with g the geometric mean of the three channels.
inline Vec2 log_chromaticity(const Vec3& p) {
  for (double v : p)
    if (!(v > 0.0)) throw Error("log-chromaticity needs strictly positive channels");
  const double l0 = std::log(p[0]), l1 = std::log(p[1]), l2 = std::log(p[2]);
  const double lg = (l0 + l1 + l2) / 3.0;
  return {l0 - lg, l2 - lg};
}

inline std::vector<Vec2> log_chromaticity(const PseudoRgb& rgb) {
  std::vector<Vec2> x(rgb.pixels.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = log_chromaticity(rgb.pixels[i]);
  return x;
}

struct ChromaticitySpace {
  Vec2 invariant{1.0, 0.0};     // w
  Vec2 illumination{0.0, 1.0};  // w-perp
  double angle_deg = 0.0;       // direction of w
  std::vector<Vec2> chroma;     // per-pixel log-chromaticity
};

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

/// Shannon entropy (nats) of the projections onto `dir`, histogrammed over the
/// middle 90% with Scott's-rule bin width.
inline double projection_entropy(std::span<const Vec2> x, const Vec2& dir) {
  std::vector<double> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = dot(x[i], dir);
  std::sort(p.begin(), p.end());
  const std::size_t n = p.size();
  const auto lo = static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(n)));
  const auto hi = std::max(lo + 1, static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))));
  std::span<const double> t(p.data() + lo, hi - lo);
  const double nt = static_cast<double>(t.size());
  double mean = 0.0;
  for (double v : t) mean += v;
  mean /= nt;
  double var = 0.0;
  for (double v : t) var += (v - mean) * (v - mean);
  const double sd = t.size() > 1 ? std::sqrt(var / (nt - 1.0)) : 0.0;
  const double range = t.back() - t.front();
  if (!(sd > 0.0) || !(range > 0.0)) return 0.0;
  const double width = 3.5 * sd * std::pow(nt, -1.0 / 3.0);
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil(range / width)));
  std::vector<std::size_t> hist(bins, 0);
  for (double v : t) {
    auto b = static_cast<std::size_t>((v - t.front()) / width);
    hist[std::min(b, bins - 1)]++;
  }
  double h = 0.0;
  for (auto c : hist)
    if (c) {
      const double q = static_cast<double>(c) / nt;
      h -= q * std::log(q);
    }
  return h;
}

/// Sweep projection angles over [0, 180) degrees and keep the entropy minimiser.
inline ChromaticitySpace find_invariant_axis(std::vector<Vec2> x, double step_deg = 1.0) {
  if (x.size() < 2) throw Error("invariant axis needs at least two chromaticity points");
  const bool distinct = std::any_of(x.begin(), x.end(), [&](const Vec2& v) { return v != x.front(); });
  if (!distinct) throw Error("invariant axis undefined: all chromaticity points coincide");
  double best_h = std::numeric_limits<double>::infinity();
  double best_deg = 0.0;
  const auto steps = static_cast<std::size_t>(std::llround(180.0 / step_deg));
  for (std::size_t i = 0; i < steps; ++i) {
    const double deg = step_deg * static_cast<double>(i);
    const double rad = deg * std::numbers::pi / 180.0;
    const double h = projection_entropy(x, {std::cos(rad), std::sin(rad)});
    if (h < best_h) {
      best_h = h;
      best_deg = deg;
    }
  }
  const double rad = best_deg * std::numbers::pi / 180.0;
  ChromaticitySpace cs;
  cs.angle_deg = best_deg;
  cs.invariant = {std::cos(rad), std::sin(rad)};
  cs.illumination = {-std::sin(rad), std::cos(rad)};
  cs.chroma = std::move(x);
  return cs;
}

struct PairValidityConfig {
  double mu = 0.3;
  double xi = 1.2;
  std::vector<std::size_t> offsets{1, 2, 4};

  void validate() const {
    if (!(mu > 0.0) || !(xi > 0.0)) throw Error("pair thresholds mu and xi must be positive");
    if (offsets.empty()) throw Error("pair scanning needs at least one offset");
  }
};

/// Sun/shadow test for members 1 (brighter) and 2 (dimmer) of a candidate pair.
inline bool is_sun_shadow_pair(double inv1, double inv2, double ill1, double ill2, const PairValidityConfig& cfg) {
  const bool same_material = std::abs(inv1 - inv2) / inv2 < cfg.mu;
  const bool illumination_step = std::abs(ill1 - ill2) / std::min(ill1, ill2) > cfg.xi;
  return same_material && illumination_step;
}

struct SunShadowPair {
  PixelCoord sunlit;
  PixelCoord shadow;
  friend auto operator<=>(const SunShadowPair&, const SunShadowPair&) = default;
};

/// Scan horizontal and vertical transects at each configured pixel offset and
/// keep the pairs that look like one material across a shadow edge. The
/// brighter member (mean pseudo-RGB) is the sunlit one. Sorted by coordinates.
inline std::vector<SunShadowPair> scan_transect_pairs(const PseudoRgb& rgb, const ChromaticitySpace& space,
                                                      const PairValidityConfig& cfg = {}) {
  cfg.validate();
  if (space.chroma.size() != rgb.pixels.size()) throw Error("chromaticity space was computed on a different image");
  const std::size_t h = rgb.height, w = rgb.width;
  std::vector<double> inv(h * w), ill(h * w), bright(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    inv[i] = std::exp(dot(space.chroma[i], space.invariant));
    ill[i] = std::exp(dot(space.chroma[i], space.illumination));
    bright[i] = (rgb.pixels[i][0] + rgb.pixels[i][1] + rgb.pixels[i][2]) / 3.0;
  }
  std::vector<SunShadowPair> pairs;
  auto consider = [&](std::size_t ra, std::size_t ca, std::size_t rb, std::size_t cb) {
    std::size_t a = ra * w + ca, b = rb * w + cb;
    PixelCoord pa{ra, ca}, pb{rb, cb};
    if (bright[b] > bright[a]) {
      std::swap(a, b);
      std::swap(pa, pb);
    }
    if (is_sun_shadow_pair(inv[a], inv[b], ill[a], ill[b], cfg)) pairs.push_back({pa, pb});
  };
  for (std::size_t off : cfg.offsets) {
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c + off < w; ++c) consider(r, c, r, c + off);
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t r = 0; r + off < h; ++r) consider(r, c, r + off, c);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

struct RatioEstimate {
  illumination::IrradianceRatio curve;  // proportional to the true ratio
  std::vector<double> raw_mean;         // mean over pairs before smoothing
  std::size_t n_pairs = 0;
  std::vector<SunShadowPair> pairs;
};

struct SmoothingConfig {
  std::size_t window = 11;
  std::size_t order = 2;
  double floor = 1e-6;
};

/// Mean of L_sun/L_shadow - 1 over all pairs, Savitzky-Golay smoothed and floored.
inline RatioEstimate estimate_ratio(const HyperCube& cube, std::vector<SunShadowPair> pairs,
                                    const SmoothingConfig& sg = {}) {
  if (pairs.empty()) throw Error("ratio estimation needs at least one sun/shadow pair");
  if (sg.window % 2 == 0 || sg.window <= sg.order) throw Error("Savitzky-Golay window must be odd and exceed the order");
  const std::size_t d = cube.bands();
  std::vector<double> acc(d, 0.0);
  for (const auto& p : pairs) {
    const auto sun = cube.pixel(p.sunlit.row, p.sunlit.col);
    const auto sh = cube.pixel(p.shadow.row, p.shadow.col);
    for (std::size_t k = 0; k < d; ++k) {
      if (sh[k] == 0.0f)
        throw Error("shadowed spectrum at (" + std::to_string(p.shadow.row) + "," + std::to_string(p.shadow.col) +
                    ") is zero at channel " + std::to_string(k));
      acc[k] += static_cast<double>(sun[k]) / static_cast<double>(sh[k]) - 1.0;
    }
  }
  for (auto& a : acc) a /= static_cast<double>(pairs.size());
  auto smooth = savitzky_golay(acc, sg.window, sg.order);
  for (auto& v : smooth)
    if (!(v > sg.floor) || !std::isfinite(v)) v = sg.floor;
  RatioEstimate est;
  est.curve = illumination::IrradianceRatio(std::move(smooth));
  est.raw_mean = std::move(acc);
  est.n_pairs = pairs.size();
  est.pairs = std::move(pairs);
  return est;
}

struct EstimatorOptions {
  std::optional<std::array<double, 3>> bands;  // default_bands(grid) when unset
  PairValidityConfig pairs;
  SmoothingConfig smoothing;
};

/// Full image-based estimate from a raw cube.
inline RatioEstimate estimate_ratio_from_image(const HyperCube& cube, const EstimatorOptions& opt = {}) {
  const auto rgb = make_pseudo_rgb(cube, opt.bands.value_or(default_bands(cube.grid())));
  const auto space = find_invariant_axis(log_chromaticity(rgb));
  return estimate_ratio(cube, scan_transect_pairs(rgb, space, opt.pairs), opt.smoothing);
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("cosine similarity: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace spectro::ratio
