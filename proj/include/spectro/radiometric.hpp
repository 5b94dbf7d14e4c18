// Radiometric normalisation applied to spectra before classification.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spectro/core.hpp"

namespace spectro::radiometric {

enum class Method { Raw, FlatField, ResidualImage, IARR, ContinuumRemoval, ZeroWavelength };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::Raw: return "raw";
    case Method::FlatField: return "flatfield";
    case Method::ResidualImage: return "residual";
    case Method::IARR: return "iarr";
    case Method::ContinuumRemoval: return "continuum";
    case Method::ZeroWavelength: return "zerowave";
  }
  return "raw";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::Raw, Method::FlatField, Method::ResidualImage, Method::IARR, Method::ContinuumRemoval,
                   Method::ZeroWavelength})
    if (method_name(m) == s) return m;
  throw Error("unknown normalisation method: " + std::string(s));
}

/// A normalisation method plus the scene statistics it was fitted on.
struct Normalizer {
  Method method = Method::Raw;
  Rect panel;                                    // FlatField
  std::optional<std::size_t> reference_channel;  // ResidualImage; unset = channel of max scene mean
  std::size_t zero_channel = 0;                  // ZeroWavelength

  bool fitted = false;
  std::size_t bands = 0;
  std::vector<double> scene_mean;   // IARR, ResidualImage
  std::vector<double> scene_max;    // ResidualImage
  std::vector<double> band_means;   // ResidualImage, computed on the scaled scene
  std::vector<double> panel_mean;   // FlatField

  bool needs_fit() const {
    return method == Method::FlatField || method == Method::ResidualImage || method == Method::IARR;
  }
};

inline Normalizer make(Method m) {
  Normalizer n;
  n.method = m;
  return n;
}

namespace detail {

inline std::vector<double> mean_of(std::span<const Spectrum> xs, std::size_t d) {
  std::vector<double> acc(d, 0.0);
  for (const auto& s : xs)
    for (std::size_t k = 0; k < d; ++k) acc[k] += s[k];
  for (auto& a : acc) a /= static_cast<double>(xs.size());
  return acc;
}

}  // namespace detail

/// Upper convex hull of (wavelength, value), linearly interpolated at every channel.
inline std::vector<double> upper_hull(std::span<const double> nm, std::span<const double> s) {
  const std::size_t d = s.size();
  if (nm.size() != d) throw Error("continuum: wavelength/value length mismatch");
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < d; ++i) {
    // Pop while the last two hull points and i do not make a clockwise (right) turn.
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (nm[b] - nm[a]) * (s[i] - s[a]) - (s[b] - s[a]) * (nm[i] - nm[a]);
      if (cross >= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }
  std::vector<double> out(d);
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const std::size_t a = hull[h], b = hull[h + 1];
    out[a] = s[a];
    for (std::size_t i = a + 1; i < b; ++i) {
      const double t = (nm[i] - nm[a]) / (nm[b] - nm[a]);
      out[i] = s[a] + t * (s[b] - s[a]);
    }
  }
  out[hull.back()] = s[hull.back()];
  return out;
}

/// Fit scene statistics from a list of scene spectra (and panel spectra for FlatField).
inline Normalizer fit(Normalizer n, std::span<const Spectrum> scene, std::span<const Spectrum> panel = {}) {
  if (scene.empty()) throw Error("cannot fit normalisation on an empty scene");
  const std::size_t d = scene.front().size();
  for (const auto& s : scene)
    if (s.size() != d) throw Error("scene spectra have inconsistent lengths");
  n.bands = d;
  n.scene_mean.clear();
  n.scene_max.clear();
  n.band_means.clear();
  n.panel_mean.clear();

  switch (n.method) {
    case Method::Raw:
    case Method::ContinuumRemoval:
      break;
    case Method::ZeroWavelength:
      if (n.zero_channel >= d) throw Error("zero-wavelength channel out of range");
      break;
    case Method::IARR: {
      n.scene_mean = detail::mean_of(scene, d);
      for (std::size_t k = 0; k < d; ++k)
        if (n.scene_mean[k] == 0.0) throw Error("IARR: scene mean is zero at channel " + std::to_string(k));
      break;
    }
    case Method::FlatField: {
      if (panel.empty()) throw Error("flat-field panel region is empty");
      for (const auto& s : panel)
        if (s.size() != d) throw Error("panel spectra have inconsistent lengths");
      n.panel_mean = detail::mean_of(panel, d);
      for (std::size_t k = 0; k < d; ++k)
        if (n.panel_mean[k] == 0.0) throw Error("flat-field: panel mean is zero at channel " + std::to_string(k));
      break;
    }
    case Method::ResidualImage: {
      n.scene_mean = detail::mean_of(scene, d);
      n.scene_max.assign(d, -std::numeric_limits<double>::infinity());
      for (const auto& s : scene)
        for (std::size_t k = 0; k < d; ++k) n.scene_max[k] = std::max(n.scene_max[k], s[k]);
      if (!n.reference_channel)
        n.reference_channel = static_cast<std::size_t>(
            std::max_element(n.scene_mean.begin(), n.scene_mean.end()) - n.scene_mean.begin());
      const std::size_t ref = *n.reference_channel;
      if (ref >= d) throw Error("residual-image reference channel out of range");
      n.band_means.assign(d, 0.0);
      for (const auto& s : scene) {
        if (s[ref] == 0.0) throw Error("residual image: scene spectrum has zero reference channel");
        const double scale = n.scene_max[ref] / s[ref];
        for (std::size_t k = 0; k < d; ++k) n.band_means[k] += s[k] * scale;
      }
      for (auto& b : n.band_means) b /= static_cast<double>(scene.size());
      break;
    }
  }
  n.fitted = true;
  return n;
}

/// Fit on every pixel of `cube`; FlatField takes its panel from `n.panel`.
inline Normalizer fit(Normalizer n, const HyperCube& cube) {
  std::vector<Spectrum> scene, panel;
  if (n.needs_fit()) {
    scene.reserve(cube.pixels());
    for (std::size_t r = 0; r < cube.height(); ++r)
      for (std::size_t c = 0; c < cube.width(); ++c) scene.push_back(cube.spectrum(r, c));
  } else {
    scene.push_back(cube.spectrum(0, 0));
  }
  if (n.method == Method::FlatField) {
    const Rect& p = n.panel;
    if (p.r0 >= p.r1 || p.c0 >= p.c1 || p.r1 > cube.height() || p.c1 > cube.width())
      throw Error("flat-field panel region is empty or outside the cube");
    for (std::size_t r = p.r0; r < p.r1; ++r)
      for (std::size_t c = p.c0; c < p.c1; ++c) panel.push_back(cube.spectrum(r, c));
  }
  return fit(std::move(n), scene, panel);
}

/// Normalise one spectrum. `nm` is needed only for continuum removal.
inline Spectrum normalize(const Normalizer& n, std::span<const double> s, std::span<const double> nm = {}) {
  if (n.needs_fit() && !n.fitted) throw Error("normalisation method has not been fitted");
  if (n.fitted && s.size() != n.bands) throw Error("spectrum length does not match fitted band count");
  const std::size_t d = s.size();
  Spectrum out(s.begin(), s.end());
  switch (n.method) {
    case Method::Raw:
      break;
    case Method::FlatField:
      for (std::size_t k = 0; k < d; ++k) out[k] = s[k] / n.panel_mean[k];
      break;
    case Method::IARR:
      for (std::size_t k = 0; k < d; ++k) out[k] = s[k] / n.scene_mean[k];
      break;
    case Method::ResidualImage: {
      const std::size_t ref = *n.reference_channel;
      if (s[ref] == 0.0) throw Error("residual image: spectrum is zero at the reference channel");
      const double scale = n.scene_max[ref] / s[ref];
      for (std::size_t k = 0; k < d; ++k) out[k] = s[k] * scale - n.band_means[k];
      break;
    }
    case Method::ZeroWavelength: {
      if (n.zero_channel >= d) throw Error("zero-wavelength channel out of range");
      const double c = -s[n.zero_channel];
      for (std::size_t k = 0; k < d; ++k) out[k] = s[k] + c;
      out[n.zero_channel] = 0.0;
      break;
    }
    case Method::ContinuumRemoval: {
      if (nm.size() != d) throw Error("continuum removal needs the wavelength grid");
      const auto hull = upper_hull(nm, s);
      for (std::size_t k = 0; k < d; ++k) {
        if (!(hull[k] > 0.0)) throw Error("continuum is non-positive at channel " + std::to_string(k));
        // Points on the hull can land a rounding error above it.
        out[k] = std::min(1.0, s[k] / hull[k]);
      }
      break;
    }
  }
  return out;
}

/// Normalise every pixel of a cube.
inline HyperCube normalize_cube(const Normalizer& n, const HyperCube& cube) {
  HyperCube out = cube;
  const auto& nm = cube.grid().nm();
  for (std::size_t r = 0; r < cube.height(); ++r)
    for (std::size_t c = 0; c < cube.width(); ++c) out.set_spectrum(r, c, normalize(n, cube.spectrum(r, c), nm));
  return out;
}

}  // namespace spectro::radiometric
