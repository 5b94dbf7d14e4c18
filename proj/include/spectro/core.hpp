// Core data types: wavelength grid, cubes, label maps and dataset splits.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "spectro/rng.hpp"

namespace spectro {

/// Every failure the library reports is a spectro::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One D-channel spectrum. Grid association is carried by the owning container.
using Spectrum = std::vector<double>;

class WavelengthGrid {
 public:
  WavelengthGrid() = default;

  explicit WavelengthGrid(std::vector<double> nm) : nm_(std::move(nm)) {
    if (nm_.size() < 2) throw Error("wavelength grid needs at least 2 channels");
    for (std::size_t i = 0; i < nm_.size(); ++i) {
      if (!std::isfinite(nm_[i]) || nm_[i] <= 0.0) throw Error("wavelengths must be positive and finite");
      if (i > 0 && !(nm_[i] > nm_[i - 1])) throw Error("wavelengths must be strictly increasing");
    }
  }

  /// Evenly spaced grid from lo to hi inclusive.
  static WavelengthGrid linear(double lo_nm, double hi_nm, std::size_t bands) {
    if (bands < 2) throw Error("wavelength grid needs at least 2 channels");
    std::vector<double> nm(bands);
    for (std::size_t i = 0; i < bands; ++i)
      nm[i] = lo_nm + (hi_nm - lo_nm) * static_cast<double>(i) / static_cast<double>(bands - 1);
    return WavelengthGrid(std::move(nm));
  }

  std::size_t size() const { return nm_.size(); }
  double operator[](std::size_t i) const { return nm_[i]; }
  const std::vector<double>& nm() const { return nm_; }
  double min() const { return nm_.front(); }
  double max() const { return nm_.back(); }

  /// Channel whose wavelength is closest to `nm`; ties resolve to the lower index.
  std::size_t nearest(double nm) const {
    auto it = std::lower_bound(nm_.begin(), nm_.end(), nm);
    if (it == nm_.begin()) return 0;
    if (it == nm_.end()) return nm_.size() - 1;
    const auto hi = static_cast<std::size_t>(it - nm_.begin());
    return (nm - nm_[hi - 1] <= nm_[hi] - nm) ? hi - 1 : hi;
  }

  friend bool operator==(const WavelengthGrid&, const WavelengthGrid&) = default;

 private:
  std::vector<double> nm_;
};

/// H x W raster of D-channel float32 spectra, stored pixel-interleaved.
class HyperCube {
 public:
  HyperCube() = default;

  HyperCube(std::size_t height, std::size_t width, WavelengthGrid grid)
      : height_(height), width_(width), grid_(std::move(grid)),
        data_(height * width * grid_.size(), 0.0f) {
    validate();
  }

  HyperCube(std::size_t height, std::size_t width, WavelengthGrid grid, std::vector<float> data)
      : height_(height), width_(width), grid_(std::move(grid)), data_(std::move(data)) {
    validate();
    if (data_.size() != height_ * width_ * grid_.size()) throw Error("cube data size does not match dimensions");
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t bands() const { return grid_.size(); }
  std::size_t pixels() const { return height_ * width_; }
  const WavelengthGrid& grid() const { return grid_; }
  const std::vector<float>& data() const { return data_; }

  std::span<const float> pixel(std::size_t row, std::size_t col) const {
    return {data_.data() + (row * width_ + col) * bands(), bands()};
  }
  std::span<float> pixel(std::size_t row, std::size_t col) {
    return {data_.data() + (row * width_ + col) * bands(), bands()};
  }

  float at(std::size_t row, std::size_t col, std::size_t band) const {
    return data_[(row * width_ + col) * bands() + band];
  }

  Spectrum spectrum(std::size_t row, std::size_t col) const {
    auto p = pixel(row, col);
    return Spectrum(p.begin(), p.end());
  }

  void set_spectrum(std::size_t row, std::size_t col, std::span<const double> s) {
    if (s.size() != bands()) throw Error("spectrum length does not match cube bands");
    auto p = pixel(row, col);
    for (std::size_t k = 0; k < s.size(); ++k) p[k] = static_cast<float>(s[k]);
  }

  friend bool operator==(const HyperCube&, const HyperCube&) = default;

 private:
  void validate() const {
    if (height_ == 0 || width_ == 0) throw Error("cube must have non-zero height and width");
    if (grid_.size() < 2) throw Error("cube needs a wavelength grid");
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  WavelengthGrid grid_;
  std::vector<float> data_;
};

struct PixelCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

struct LabelEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  int class_id = 0;
  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

class LabelMap {
 public:
  LabelMap() = default;

  LabelMap(std::size_t height, std::size_t width, std::vector<std::string> class_names,
           std::vector<LabelEntry> entries, std::optional<std::vector<std::uint8_t>> shadow_mask = std::nullopt)
      : height_(height), width_(width), class_names_(std::move(class_names)),
        entries_(std::move(entries)), shadow_mask_(std::move(shadow_mask)) {
    std::vector<std::uint8_t> seen(height_ * width_, 0);
    for (const auto& e : entries_) {
      if (e.row >= height_ || e.col >= width_) throw Error("label outside cube bounds");
      if (e.class_id < 0 || static_cast<std::size_t>(e.class_id) >= class_names_.size())
        throw Error("label class id out of range");
      auto& s = seen[e.row * width_ + e.col];
      if (s) throw Error("duplicate label at (" + std::to_string(e.row) + "," + std::to_string(e.col) + ")");
      s = 1;
    }
    if (shadow_mask_ && shadow_mask_->size() != height_ * width_) throw Error("shadow mask size mismatch");
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t n_classes() const { return class_names_.size(); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<LabelEntry>& entries() const { return entries_; }
  const std::optional<std::vector<std::uint8_t>>& shadow_mask() const { return shadow_mask_; }

  bool in_shadow(std::size_t row, std::size_t col) const {
    return shadow_mask_ && (*shadow_mask_)[row * width_ + col] != 0;
  }

  /// Dense H*W class raster, -1 where unlabelled.
  std::vector<int> dense() const {
    std::vector<int> out(height_ * width_, -1);
    for (const auto& e : entries_) out[e.row * width_ + e.col] = e.class_id;
    return out;
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::string> class_names_;
  std::vector<LabelEntry> entries_;
  std::optional<std::vector<std::uint8_t>> shadow_mask_;
};

/// Axis-aligned pixel rectangle, half-open: rows [r0, r1), cols [c0, c1).
struct Rect {
  std::size_t r0 = 0, c0 = 0, r1 = 0, c1 = 0;
  bool contains(std::size_t r, std::size_t c) const { return r >= r0 && r < r1 && c >= c0 && c < c1; }
  std::size_t area() const { return (r1 - r0) * (c1 - c0); }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Sample {
  Spectrum spectrum;
  int label = 0;
  PixelCoord coord;
};

struct DatasetSplit {
  WavelengthGrid grid;
  std::vector<std::string> class_names;
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
};

/// Per-class training sizes spaced logarithmically from lo to hi: 100..1000 in 5 steps
/// gives {100, 178, 316, 562, 1000}.
inline std::vector<std::size_t> log_sweep(std::size_t lo, std::size_t hi, std::size_t steps) {
  if (steps < 2) return {lo};
  std::vector<std::size_t> out;
  const double a = std::log10(static_cast<double>(lo));
  const double b = std::log10(static_cast<double>(hi));
  for (std::size_t i = 0; i < steps; ++i) {
    const double e = a + (b - a) * static_cast<double>(i) / static_cast<double>(steps - 1);
    out.push_back(static_cast<std::size_t>(std::llround(std::pow(10.0, e))));
  }
  return out;
}

/// Draw a train/validation/test split.
///
/// Training pixels for class k come uniformly without replacement from the labelled
/// class-k pixels inside regions[k]. Validation pixels come from labelled pixels outside
/// every training rectangle when enough exist, otherwise from any pixel not used for
/// training. Everything left over is the test set, in row-major order.
inline DatasetSplit sample_regions(const HyperCube& cube, const LabelMap& labels,
                                   const std::vector<std::vector<Rect>>& regions, std::size_t n_per_class,
                                   std::uint64_t seed, std::size_t n_val_per_class = 50) {
  if (labels.height() != cube.height() || labels.width() != cube.width())
    throw Error("label map does not match cube dimensions");
  const std::size_t n_classes = labels.n_classes();
  if (regions.size() != n_classes) throw Error("need one region list per class");

  std::vector<std::vector<PixelCoord>> by_class(n_classes);
  auto entries = labels.entries();
  std::sort(entries.begin(), entries.end(),
            [](const LabelEntry& a, const LabelEntry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  for (const auto& e : entries) by_class[static_cast<std::size_t>(e.class_id)].push_back({e.row, e.col});

  auto in_any = [](const std::vector<Rect>& rs, const PixelCoord& p) {
    return std::any_of(rs.begin(), rs.end(), [&](const Rect& r) { return r.contains(p.row, p.col); });
  };
  std::vector<Rect> all_rects;
  for (const auto& rs : regions) all_rects.insert(all_rects.end(), rs.begin(), rs.end());

  std::vector<std::uint8_t> used(cube.pixels(), 0);
  DatasetSplit split;
  split.grid = cube.grid();
  split.class_names = labels.class_names();

  auto take = [&](std::vector<PixelCoord> pool, std::size_t n, std::uint64_t stream, std::size_t k,
                  std::vector<Sample>& out) {
    Rng rng(seed, {stream, k});
    rng.shuffle(pool);
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    for (const auto& p : pool) {
      used[p.row * cube.width() + p.col] = 1;
      out.push_back({cube.spectrum(p.row, p.col), static_cast<int>(k), p});
    }
  };

  for (std::size_t k = 0; k < n_classes; ++k) {
    for (const auto& r : regions[k])
      if (r.r1 > cube.height() || r.c1 > cube.width() || r.r0 >= r.r1 || r.c0 >= r.c1)
        throw Error("region rectangle for class " + std::to_string(k) + " is empty or out of bounds");
    std::vector<PixelCoord> pool;
    for (const auto& p : by_class[k])
      if (in_any(regions[k], p)) pool.push_back(p);
    if (pool.size() < n_per_class)
      throw Error("regions for class " + std::to_string(k) + " hold " + std::to_string(pool.size()) +
                  " labelled pixels, need " + std::to_string(n_per_class));
    take(std::move(pool), n_per_class, 1, k, split.train);
  }

  for (std::size_t k = 0; k < n_classes; ++k) {
    std::vector<PixelCoord> outside, remaining;
    for (const auto& p : by_class[k]) {
      if (used[p.row * cube.width() + p.col]) continue;
      remaining.push_back(p);
      if (!in_any(all_rects, p)) outside.push_back(p);
    }
    auto& pool = outside.size() >= n_val_per_class ? outside : remaining;
    if (pool.size() < n_val_per_class)
      throw Error("class " + std::to_string(k) + " has too few pixels left for validation");
    take(std::move(pool), n_val_per_class, 2, k, split.validation);
  }

  for (const auto& e : entries)
    if (!used[e.row * cube.width() + e.col])
      split.test.push_back({cube.spectrum(e.row, e.col), e.class_id, {e.row, e.col}});
  return split;
}

}  // namespace spectro
