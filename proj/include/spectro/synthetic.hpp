// Synthetic hyperspectral scenes rendered from the outdoor illumination model.
//
// The generator knows every albedo, geometry term, shadow pixel and the true
// sun/sky ratio, so it serves as ground truth for the estimator, the
// augmentation and the classifier experiments.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spectro/core.hpp"
#include "spectro/illumination.hpp"
#include "spectro/ratio_estimation.hpp"
#include "spectro/rng.hpp"

namespace spectro::synth {

using illumination::GeometryParams;
using illumination::IrradianceRatio;

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

struct SceneSpec {
  std::size_t height = 128;
  std::size_t width = 256;
  std::size_t bands = 60;
  double lambda_min_nm = 400.0;
  double lambda_max_nm = 990.0;
  std::size_t n_classes = 6;
  double shadow_frac = 0.3;
  double noise_sigma = 0.005;  // relative, multiplicative
  std::uint64_t seed = 7;

  // Illumination: r(l) = ratio_ref * (l / lambda_min)^ratio_exponent, times a gentle ripple.
  double ratio_ref = 1.0;
  double ratio_exponent = 6.0;
  double sun_peak = 1.5 * std::numbers::pi;  // sun irradiance scale

  // Sun position; shadows are cast away from the sun along `shadow_dir_deg`
  // measured from the +column axis towards +row.
  double sun_elevation_deg = 55.0;
  double shadow_dir_deg = 20.0;

  // Layout.
  double cell_rows_px = 42.0;       // approximate facet cell size
  double cell_cols_px = 64.0;
  double max_tilt_deg = 35.0;
  std::size_t n_occluders = 12;

  // Minimum spacing of class chromaticities along the true invariant axis,
  // measured in log units at the pseudo-RGB bands.
  double class_separation = 0.35;
  double axis_tolerance_deg = 3.0;
  std::size_t max_albedo_sets = 50;

  // Each facet cell carries its own variant of the class albedo: the class
  // spectrum times (1 + albedo_variation * p(l)) with p a smooth curve in [-1, 1].
  double albedo_variation = 0.4;

  static SceneSpec visible() { return SceneSpec{}; }

  static SceneSpec swir() {
    SceneSpec s;
    s.lambda_min_nm = 1009.0;
    s.lambda_max_nm = 2482.0;
    s.ratio_exponent = 4.5;
    return s;
  }

  WavelengthGrid grid() const { return WavelengthGrid::linear(lambda_min_nm, lambda_max_nm, bands); }

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;

  void validate() const {
    if (height == 0 || width == 0) throw Error("scene must be non-empty");
    if (bands < 2) throw Error("scene needs at least 2 bands");
    if (n_classes < 1) throw Error("scene needs at least one class");
    if (!(shadow_frac >= 0.0 && shadow_frac < 1.0)) throw Error("shadow fraction must lie in [0, 1)");
    if (!(noise_sigma >= 0.0)) throw Error("noise sigma must be non-negative");
    if (!(albedo_variation >= 0.0 && albedo_variation < 1.0)) throw Error("albedo variation must lie in [0, 1)");
    if (!(sun_elevation_deg > 0.0 && sun_elevation_deg < 90.0)) throw Error("sun elevation must lie in (0, 90) degrees");
  }
};

struct Occluder {
  double row = 0.0, col = 0.0, radius = 0.0, height = 0.0;
};

/// Everything about a scene that does not depend on the time of day.
struct SceneLayout {
  SceneSpec spec;
  WavelengthGrid grid;
  std::vector<std::vector<double>> albedos;  // per class
  std::vector<std::vector<double>> variation;  // per cell, values in [-1, 1]
  std::vector<std::size_t> cell_map;         // H*W facet cell index
  std::vector<double> sky;                   // Esky
  std::vector<double> ratio;                 // Esun tau / Esky
  std::vector<int> class_map;                // H*W
  std::vector<std::array<double, 3>> normals;  // H*W unit surface normals
  std::vector<double> sky_factor;            // H*W
  std::vector<Occluder> occluders;
  double shadow_scale = 0.0;                 // calibrated occluder height multiplier
  double invariant_axis_deg = 0.0;           // chromaticity direction unaffected by shadow
};

struct SyntheticScene {
  HyperCube cube;
  LabelMap labels;  // every pixel labelled; carries the shadow mask
  IrradianceRatio true_ratio;
  std::vector<double> sky;
  std::vector<GeometryParams> geometry;  // H*W
  std::vector<std::vector<double>> albedos;       // per class
  std::vector<std::vector<double>> cell_albedos;  // per facet cell
  std::vector<std::size_t> cell_map;              // H*W
  double sun_elevation_deg = 0.0;

  const std::vector<double>& albedo_at(std::size_t idx) const { return cell_albedos.at(cell_map.at(idx)); }
};

namespace detail {

inline std::vector<double> smooth_bumps(Rng& rng, const WavelengthGrid& grid) {
  const double lo = grid.min(), hi = grid.max(), span = hi - lo;
  const std::size_t n_bumps = 3 + static_cast<std::size_t>(rng.below(4));
  std::vector<double> c(n_bumps), s(n_bumps), a(n_bumps);
  for (std::size_t i = 0; i < n_bumps; ++i) {
    c[i] = rng.uniform(lo - 0.1 * span, hi + 0.1 * span);
    s[i] = rng.uniform(0.05, 0.25) * span;
    a[i] = rng.uniform(-1.0, 1.0);
  }
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_bumps; ++i) {
      const double z = (grid[k] - c[i]) / s[i];
      acc += a[i] * std::exp(-0.5 * z * z);
    }
    v[k] = acc;
  }
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double vmin = *mn, vmax = *mx;
  const double out_lo = rng.uniform(0.05, 0.25), out_hi = rng.uniform(0.6, 0.95);
  for (auto& x : v) x = vmax > vmin ? out_lo + (x - vmin) / (vmax - vmin) * (out_hi - out_lo) : 0.5;
  return v;
}

inline std::vector<double> variation_curve(Rng& rng, const WavelengthGrid& grid) {
  auto v = smooth_bumps(rng, grid);
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn, hi = *mx;
  for (auto& x : v) x = hi > lo ? 2.0 * (x - lo) / (hi - lo) - 1.0 : 0.0;
  return v;
}

inline std::vector<double> cell_albedo(const std::vector<double>& base, const std::vector<double>& var, double amp) {
  std::vector<double> a(base.size());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::clamp(base[k] * (1.0 + amp * var[k]), 0.0, 1.0);
  return a;
}

inline double chroma_coordinate(const std::vector<double>& spectrum, const std::array<std::size_t, 3>& ch,
                                const ratio::Vec2& axis) {
  return ratio::dot(ratio::log_chromaticity({spectrum[ch[0]], spectrum[ch[1]], spectrum[ch[2]]}), axis);
}

/// Distance from point p to segment [a, b] in pixel units.
inline double segment_distance(double pr, double pc, double ar, double ac, double br, double bc) {
  const double dr = br - ar, dc = bc - ac;
  const double len2 = dr * dr + dc * dc;
  double t = len2 > 0.0 ? ((pr - ar) * dr + (pc - ac) * dc) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double er = pr - (ar + t * dr), ec = pc - (ac + t * dc);
  return std::sqrt(er * er + ec * ec);
}

}  // namespace detail

/// Unit vector towards the sun in the (col, row, up) frame; shadows fall along `shadow_dir_deg`.
inline std::array<double, 3> sun_vector(double elevation_deg, double shadow_dir_deg) {
  const double e = deg2rad(elevation_deg), az = deg2rad(shadow_dir_deg);
  return {-std::cos(e) * std::cos(az), -std::cos(e) * std::sin(az), std::sin(e)};
}

/// Shadow mask cast by the layout's occluders for a sun at `elevation_deg`.
/// Shadow length grows as 1/tan(elevation), so a lower sun gives a superset.
inline std::vector<std::uint8_t> shadow_mask(const SceneLayout& lay, double elevation_deg, double scale) {
  const auto& s = lay.spec;
  std::vector<std::uint8_t> mask(s.height * s.width, 0);
  const double dr = std::sin(deg2rad(s.shadow_dir_deg)), dc = std::cos(deg2rad(s.shadow_dir_deg));
  const double stretch = scale / std::tan(deg2rad(elevation_deg));
  for (const auto& o : lay.occluders) {
    const double len = o.height * stretch;
    const double er = o.row + dr * len, ec = o.col + dc * len;
    const auto r_lo = static_cast<long>(std::floor(std::min(o.row, er) - o.radius));
    const auto r_hi = static_cast<long>(std::ceil(std::max(o.row, er) + o.radius));
    const auto c_lo = static_cast<long>(std::floor(std::min(o.col, ec) - o.radius));
    const auto c_hi = static_cast<long>(std::ceil(std::max(o.col, ec) + o.radius));
    for (long r = std::max(0L, r_lo); r <= std::min<long>(static_cast<long>(s.height) - 1, r_hi); ++r)
      for (long c = std::max(0L, c_lo); c <= std::min<long>(static_cast<long>(s.width) - 1, c_hi); ++c)
        if (detail::segment_distance(static_cast<double>(r), static_cast<double>(c), o.row, o.col, er, ec) <= o.radius)
          mask[static_cast<std::size_t>(r) * s.width + static_cast<std::size_t>(c)] = 1;
  }
  return mask;
}

inline double mask_fraction(const std::vector<std::uint8_t>& m) {
  std::size_t n = 0;
  for (auto v : m) n += v;
  return m.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(m.size());
}

/// Build the time-independent part of a scene.
inline SceneLayout make_layout(const SceneSpec& spec) {
  spec.validate();
  SceneLayout lay;
  lay.spec = spec;
  lay.grid = spec.grid();
  const auto& grid = lay.grid;
  const std::size_t d = grid.size(), H = spec.height, W = spec.width;

  // Illumination curves.
  Rng ill_rng(spec.seed, {1});
  const double ripple_phase = ill_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double sun_center = grid.min() + ill_rng.uniform(0.1, 0.4) * (grid.max() - grid.min());
  lay.ratio.resize(d);
  lay.sky.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double u = (grid[k] - grid.min()) / (grid.max() - grid.min());
    lay.ratio[k] = spec.ratio_ref * std::pow(grid[k] / grid.min(), spec.ratio_exponent) *
                   (1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * 1.3 * u + ripple_phase));
    const double z = (grid[k] - sun_center) / (0.6 * (grid.max() - grid.min()));
    const double sun = spec.sun_peak * (0.55 + 0.45 * std::exp(-0.5 * z * z));
    lay.sky[k] = sun / lay.ratio[k];
  }

  // Facet cells: jittered-grid Voronoi, each cell one class and one orientation.
  // Small scenes get smaller cells, so every class owns at least two of them.
  auto cell_rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(H) / spec.cell_rows_px)));
  auto cell_cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(W) / spec.cell_cols_px)));
  while (cell_rows * cell_cols < 2 * spec.n_classes && (cell_rows < H || cell_cols < W)) {
    const bool taller = static_cast<double>(H) / static_cast<double>(cell_rows) >=
                        static_cast<double>(W) / static_cast<double>(cell_cols);
    if ((taller && cell_rows < H) || cell_cols >= W)
      ++cell_rows;
    else
      ++cell_cols;
  }
  const std::size_t n_cells = cell_rows * cell_cols;
  Rng cell_rng(spec.seed, {3});
  std::vector<std::array<double, 2>> sites(n_cells);
  std::vector<int> cell_class(n_cells);
  std::vector<std::array<double, 3>> cell_normal(n_cells);
  std::vector<double> cell_gamma(n_cells);
  std::vector<std::size_t> order(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) order[i] = i;
  cell_rng.shuffle(order);
  for (std::size_t i = 0; i < n_cells; ++i) {
    const std::size_t gr = i / cell_cols, gc = i % cell_cols;
    const double ch_ = static_cast<double>(H) / static_cast<double>(cell_rows);
    const double cw = static_cast<double>(W) / static_cast<double>(cell_cols);
    sites[i] = {(static_cast<double>(gr) + cell_rng.uniform(0.3, 0.7)) * ch_,
                (static_cast<double>(gc) + cell_rng.uniform(0.3, 0.7)) * cw};
    cell_class[order[i]] = static_cast<int>(i % spec.n_classes);
    const double tilt = deg2rad(cell_rng.uniform(0.0, spec.max_tilt_deg));
    const double az = cell_rng.uniform(0.0, 2.0 * std::numbers::pi);
    cell_normal[i] = {std::sin(tilt) * std::cos(az), std::sin(tilt) * std::sin(az), std::cos(tilt)};
    cell_gamma[i] = cell_rng.uniform(0.6, 0.95);
  }
  // Low-frequency perturbation fields.
  Rng field_rng(spec.seed, {4});
  std::array<double, 6> ph{};
  for (auto& p : ph) p = field_rng.uniform(0.0, 2.0 * std::numbers::pi);

  lay.variation.resize(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    Rng var_rng(spec.seed, {8, i});
    lay.variation[i] = detail::variation_curve(var_rng, grid);
  }

  lay.class_map.resize(H * W);
  lay.cell_map.resize(H * W);
  lay.normals.resize(H * W);
  lay.sky_factor.resize(H * W);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n_cells; ++i) {
        const double dr = static_cast<double>(r) - sites[i][0], dc = static_cast<double>(c) - sites[i][1];
        const double dd = dr * dr + dc * dc;
        if (dd < best_d) {
          best_d = dd;
          best = i;
        }
      }
      const std::size_t idx = r * W + c;
      lay.class_map[idx] = cell_class[best];
      lay.cell_map[idx] = best;
      const double y = static_cast<double>(r) / static_cast<double>(H), x = static_cast<double>(c) / static_cast<double>(W);
      auto n = cell_normal[best];
      n[0] += 0.08 * std::sin(2.0 * std::numbers::pi * (1.7 * x + 0.6 * y) + ph[0]);
      n[1] += 0.08 * std::sin(2.0 * std::numbers::pi * (0.5 * x + 1.9 * y) + ph[1]);
      const double nn = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      lay.normals[idx] = {n[0] / nn, n[1] / nn, n[2] / nn};
      lay.sky_factor[idx] = std::clamp(
          cell_gamma[best] + 0.04 * std::sin(2.0 * std::numbers::pi * (1.1 * x - 1.3 * y) + ph[2]), 0.0, 1.0);
    }

  // Occluders, with a global height scale calibrated to the requested shadow fraction.
  Rng occ_rng(spec.seed, {5});
  lay.occluders.resize(spec.n_occluders);
  for (auto& o : lay.occluders) {
    o.row = occ_rng.uniform(-0.1, 1.0) * static_cast<double>(H);
    o.col = occ_rng.uniform(-0.2, 0.9) * static_cast<double>(W);
    o.radius = occ_rng.uniform(4.0, 10.0);
    o.height = occ_rng.uniform(0.5, 1.5);
  }
  if (spec.shadow_frac <= 0.0 || lay.occluders.empty()) {
    lay.occluders.clear();
  } else {
    double lo = 0.0, hi = 4.0 * static_cast<double>(std::max(H, W));
    if (mask_fraction(shadow_mask(lay, spec.sun_elevation_deg, lo)) >= spec.shadow_frac) {
      hi = lo;
    } else {
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mask_fraction(shadow_mask(lay, spec.sun_elevation_deg, mid)) < spec.shadow_frac)
          lo = mid;
        else
          hi = mid;
      }
    }
    lay.shadow_scale = hi;
  }

  // Albedos, kept apart along the invariant chromaticity axis. A candidate set
  // is also rejected when the noise-free pseudo-RGB image would put the
  // entropy-minimising projection more than `axis_tolerance_deg` away from the
  // invariant direction (classes lined up along one chromaticity direction).
  const auto bands_nm = ratio::default_bands(grid);
  const bool bands_in_grid = bands_nm[0] >= grid.min() && bands_nm[2] <= grid.max();
  std::array<std::size_t, 3> ch{};
  ratio::Vec2 inv_axis{1.0, 0.0};
  if (bands_in_grid) {
    for (std::size_t i = 0; i < 3; ++i) ch[i] = grid.nearest(bands_nm[i]);
    const auto shift = ratio::log_chromaticity({1.0 + lay.ratio[ch[0]], 1.0 + lay.ratio[ch[1]], 1.0 + lay.ratio[ch[2]]});
    const double n = std::hypot(shift[0], shift[1]);
    inv_axis = {-shift[1] / n, shift[0] / n};
  }
  lay.invariant_axis_deg = std::fmod(std::atan2(inv_axis[1], inv_axis[0]) * 180.0 / std::numbers::pi + 360.0, 180.0);
  Rng alb_rng(spec.seed, {2});
  double sep = spec.class_separation;
  for (std::size_t set_attempt = 0;; ++set_attempt) {
    lay.albedos.clear();
    std::vector<double> coords;
    for (std::size_t attempts = 0; lay.albedos.size() < spec.n_classes; ++attempts) {
      if (attempts > 0 && attempts % 20000 == 0) sep *= 0.8;
      auto a = detail::smooth_bumps(alb_rng, grid);
      if (bands_in_grid) {
        const double x = detail::chroma_coordinate(a, ch, inv_axis);
        if (std::any_of(coords.begin(), coords.end(), [&](double y) { return std::abs(x - y) < sep; })) continue;
        coords.push_back(x);
      }
      lay.albedos.push_back(std::move(a));
    }
    if (!bands_in_grid || spec.n_classes < 2 || set_attempt >= spec.max_albedo_sets) break;
    std::vector<ratio::Vec2> chroma(H * W);
    const auto mask = lay.occluders.empty() ? std::vector<std::uint8_t>(H * W, 0)
                                            : shadow_mask(lay, spec.sun_elevation_deg, lay.shadow_scale);
    const auto sun = sun_vector(spec.sun_elevation_deg, spec.shadow_dir_deg);
    std::vector<std::vector<double>> cell_alb(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i)
      cell_alb[i] = detail::cell_albedo(lay.albedos[static_cast<std::size_t>(cell_class[i])], lay.variation[i],
                                        spec.albedo_variation);
    for (std::size_t i = 0; i < H * W; ++i) {
      const auto& a = cell_alb[lay.cell_map[i]];
      const double cos_t = std::clamp(lay.normals[i][0] * sun[0] + lay.normals[i][1] * sun[1] + lay.normals[i][2] * sun[2], 0.0, 1.0);
      ratio::Vec3 rgb{};
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t k = ch[j];
        rgb[j] = std::max(a[k] * lay.sky[k] * ((mask[i] ? 0.0 : lay.ratio[k] * cos_t) + lay.sky_factor[i]), ratio::kChannelFloor);
      }
      chroma[i] = ratio::log_chromaticity(rgb);
    }
    const double found = ratio::find_invariant_axis(std::move(chroma)).angle_deg;
    double diff = std::abs(found - lay.invariant_axis_deg);
    diff = std::min(diff, 180.0 - diff);
    if (diff <= spec.axis_tolerance_deg) break;
  }

  return lay;
}

/// Render a layout with the sun at `elevation_deg`. `noise_stream` keys the sensor noise.
inline SyntheticScene render(const SceneLayout& lay, double elevation_deg, std::uint64_t noise_stream = 0) {
  const auto& spec = lay.spec;
  const std::size_t H = spec.height, W = spec.width, d = lay.grid.size();
  SyntheticScene sc;
  sc.sun_elevation_deg = elevation_deg;
  sc.true_ratio = IrradianceRatio(lay.ratio);
  sc.sky = lay.sky;
  sc.albedos = lay.albedos;
  sc.cell_map = lay.cell_map;
  sc.cell_albedos.resize(lay.variation.size());
  std::vector<int> cell_class(lay.variation.size(), 0);
  for (std::size_t i = 0; i < lay.cell_map.size(); ++i) cell_class[lay.cell_map[i]] = lay.class_map[i];
  for (std::size_t i = 0; i < lay.variation.size(); ++i)
    sc.cell_albedos[i] = detail::cell_albedo(lay.albedos[static_cast<std::size_t>(cell_class[i])], lay.variation[i],
                                             spec.albedo_variation);
  sc.cube = HyperCube(H, W, lay.grid);
  sc.geometry.resize(H * W);

  const auto mask = lay.occluders.empty() ? std::vector<std::uint8_t>(H * W, 0)
                                          : shadow_mask(lay, elevation_deg, lay.shadow_scale);
  const auto sun = sun_vector(elevation_deg, spec.shadow_dir_deg);

  std::vector<LabelEntry> entries;
  entries.reserve(H * W);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      const std::size_t idx = r * W + c;
      const auto& n = lay.normals[idx];
      const double cos_t = std::clamp(n[0] * sun[0] + n[1] * sun[1] + n[2] * sun[2], 0.0, 1.0);
      GeometryParams g;
      g.visible = mask[idx] ? 0 : 1;
      g.theta = std::acos(cos_t);
      g.gamma = lay.sky_factor[idx];
      sc.geometry[idx] = g;
      const int k = lay.class_map[idx];
      auto L = illumination::render_radiance(sc.cell_albedos[lay.cell_map[idx]], lay.sky, sc.true_ratio, g);
      if (spec.noise_sigma > 0.0) {
        Rng noise(spec.seed, {6, noise_stream, idx});
        for (std::size_t b = 0; b < d; ++b) L[b] = std::max(0.0, L[b] * (1.0 + spec.noise_sigma * noise.normal()));
      }
      sc.cube.set_spectrum(r, c, L);
      entries.push_back({r, c, k});
    }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < spec.n_classes; ++k) names.push_back("material_" + std::to_string(k));
  sc.labels = LabelMap(H, W, std::move(names), std::move(entries), mask);
  return sc;
}

inline SyntheticScene generate(const SceneSpec& spec) {
  return render(make_layout(spec), spec.sun_elevation_deg, 0);
}

/// Two renders of one layout at different sun elevations (degrees). Materials,
/// labels and viewpoint are shared; shadows lengthen as the sun drops.
inline std::pair<SyntheticScene, SyntheticScene> generate_timepair(const SceneSpec& spec, double elevation1_deg,
                                                                  double elevation2_deg) {
  if (!(elevation1_deg > 0.0 && elevation1_deg < 90.0) || !(elevation2_deg > 0.0 && elevation2_deg < 90.0))
    throw Error("sun elevations must lie in (0, 90) degrees");
  const auto lay = make_layout(spec);
  // Equal elevations share the noise stream so they render identically.
  const std::uint64_t s2 = elevation1_deg == elevation2_deg ? 0 : 1;
  return {render(lay, elevation1_deg, 0), render(lay, elevation2_deg, s2)};
}

namespace detail {

/// First rectangle (squares preferred, row-major scan) of at least `min_pixels`
/// pixels that are all set in `good`.
inline std::optional<Rect> find_good_rect(const std::vector<std::uint8_t>& good, std::size_t H, std::size_t W,
                                          std::size_t min_pixels) {
  std::vector<std::size_t> integ((H + 1) * (W + 1), 0);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      integ[(r + 1) * (W + 1) + c + 1] =
          good[r * W + c] + integ[r * (W + 1) + c + 1] + integ[(r + 1) * (W + 1) + c] - integ[r * (W + 1) + c];
  auto count = [&](std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
    return integ[r1 * (W + 1) + c1] - integ[r0 * (W + 1) + c1] - integ[r1 * (W + 1) + c0] + integ[r0 * (W + 1) + c0];
  };
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(min_pixels))));
  const std::array<std::pair<double, double>, 5> shapes{{{1, 1}, {0.7, 1.45}, {1.45, 0.7}, {0.5, 2.0}, {2.0, 0.5}}};
  for (const auto& [fr, fc] : shapes) {
    const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(side) * fr)));
    const auto w = (min_pixels + h - 1) / h;
    if (h > H || w > W) continue;
    for (std::size_t r = 0; r + h <= H; ++r)
      for (std::size_t c = 0; c + w <= W; ++c)
        if (count(r, c, r + h, c + w) == h * w) return Rect{r, c, r + h, c + w};
  }
  return std::nullopt;
}

}  // namespace detail

/// Disjoint rectangles, entirely class `class_id` and sunlit, holding at least
/// `min_pixels` pixels together. One rectangle is preferred; otherwise the need
/// is split evenly over 2, 3, ... up to `max_regions` rectangles.
inline std::vector<Rect> find_sunlit_regions(const LabelMap& labels, int class_id, std::size_t min_pixels,
                                             std::size_t max_regions = 4) {
  const std::size_t H = labels.height(), W = labels.width();
  const auto dense = labels.dense();
  std::vector<std::uint8_t> base(H * W);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) base[r * W + c] = dense[r * W + c] == class_id && !labels.in_shadow(r, c);
  for (std::size_t parts = 1; parts <= max_regions; ++parts) {
    const std::size_t need = (min_pixels + parts - 1) / parts;
    auto good = base;
    std::vector<Rect> found;
    while (found.size() < parts) {
      const auto rect = detail::find_good_rect(good, H, W, need);
      if (!rect) break;
      found.push_back(*rect);
      for (std::size_t r = rect->r0; r < rect->r1; ++r)
        for (std::size_t c = rect->c0; c < rect->c1; ++c) good[r * W + c] = 0;
    }
    if (found.size() == parts) return found;
  }
  throw Error("no sunlit region of " + std::to_string(min_pixels) + " pixels for class " + std::to_string(class_id));
}

/// A single such rectangle.
inline Rect find_sunlit_region(const LabelMap& labels, int class_id, std::size_t min_pixels) {
  return find_sunlit_regions(labels, class_id, min_pixels, 1).front();
}

}  // namespace spectro::synth
