// Outdoor illumination model, relighting, and relighting-based batch augmentation.
//
// A diffuse surface lit by a parallel sun source and a hemispherical sky
// source has radiance
//
//   L(l) = rho(l)/pi * [ V * Esun(l) tau(l) cos(theta) + Gamma * Esky(l) ].
//
// Only the ratio r(l) = Esun(l) tau(l) / Esky(l) is needed to move a sunlit
// spectrum from one geometry to another.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spectro/core.hpp"
#include "spectro/rng.hpp"

namespace spectro::illumination {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

/// Sun visibility, sun incidence angle and sky view factor for one surface patch.
struct GeometryParams {
  int visible = 1;     // V
  double theta = 0.0;  // radians, [0, pi/2]
  double gamma = 1.0;  // [0, 1]

  void validate() const {
    if (visible != 0 && visible != 1) throw Error("sun visibility must be 0 or 1");
    if (!(theta >= 0.0 && theta <= kHalfPi)) throw Error("sun angle must lie in [0, pi/2]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("sky factor must lie in [0, 1]");
  }
  friend bool operator==(const GeometryParams&, const GeometryParams&) = default;
};

/// Per-wavelength sun/sky irradiance ratio, known up to a positive scale.
class IrradianceRatio {
 public:
  IrradianceRatio() = default;
  explicit IrradianceRatio(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error("irradiance ratio is empty");
    for (double v : values_)
      if (!std::isfinite(v) || !(v > 0.0)) throw Error("irradiance ratio must be positive and finite");
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  IrradianceRatio scaled(double k) const {
    std::vector<double> v = values_;
    for (auto& x : v) x *= k;
    return IrradianceRatio(std::move(v));
  }

 private:
  std::vector<double> values_;
};

/// Radiance of a diffuse patch with albedo `albedo` under sky irradiance `sky`
/// and sun irradiance `ratio * sky`.
inline Spectrum render_radiance(std::span<const double> albedo, std::span<const double> sky,
                                const IrradianceRatio& ratio, const GeometryParams& g) {
  g.validate();
  const std::size_t d = albedo.size();
  if (sky.size() != d || ratio.size() != d) throw Error("render: albedo, sky and ratio lengths differ");
  const double cos_t = std::cos(g.theta);
  Spectrum out(d);
  for (std::size_t k = 0; k < d; ++k) {
    if (!(albedo[k] >= 0.0 && albedo[k] <= 1.0)) throw Error("render: albedo outside [0, 1]");
    const double sun = g.visible ? ratio[k] * sky[k] * cos_t : 0.0;
    out[k] = albedo[k] / std::numbers::pi * (sun + g.gamma * sky[k]);
  }
  return out;
}

/// Per-channel relighting gain from a sunlit source geometry to `target`.
inline std::vector<double> relight_gain(const IrradianceRatio& ratio, const GeometryParams& source,
                                        const GeometryParams& target) {
  source.validate();
  target.validate();
  if (source.visible != 1) throw Error("relight: source spectrum must be sunlit (V = 1)");
  const double cs = std::cos(source.theta);
  const double ct = std::cos(target.theta);
  std::vector<double> gain(ratio.size());
  for (std::size_t k = 0; k < ratio.size(); ++k) {
    const double den = ratio[k] * cs + source.gamma;
    if (!(den > 0.0)) throw Error("relight: zero denominator at channel " + std::to_string(k));
    gain[k] = (target.visible * ratio[k] * ct + target.gamma) / den;
  }
  return gain;
}

/// Move a raw sunlit spectrum from `source` geometry to `target` geometry.
inline Spectrum relight(std::span<const double> s, const IrradianceRatio& ratio, const GeometryParams& source,
                        const GeometryParams& target) {
  if (s.size() != ratio.size()) throw Error("relight: spectrum and ratio lengths differ");
  const auto gain = relight_gain(ratio, source, target);
  Spectrum out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = s[k] * gain[k];
  return out;
}

struct AugmentationConfig {
  std::size_t M = 10;  // irradiance-ratio draws per batch
  std::uint64_t seed = 0;
};

/// One relighting draw, exposed for auditing the sampler.
struct AugmentDraw {
  std::size_t iteration = 0;
  std::size_t element = 0;
  double theta_a = 0.0;
  GeometryParams source;
  GeometryParams target;
};

using RatioEstimator = std::function<IrradianceRatio(double theta_a)>;

/// Image-based ratio source: an estimated curve divided by cos(theta_A).
inline RatioEstimator scaled_by_sun_angle(IrradianceRatio curve) {
  return [curve = std::move(curve)](double theta_a) { return curve.scaled(1.0 / std::cos(theta_a)); };
}

inline constexpr double kMinRelightDenominator = 1e-8;

/// Augment a batch of raw sunlit spectra by relighting.
///
/// The output starts with the batch itself. Each of the M iterations draws a
/// sun angle theta_A, asks `estimator` for a ratio, then relights every batch
/// element once with freshly sampled V_j ~ B(1/2), theta_i, theta_j ~ U[0, pi/2),
/// Gamma_i, Gamma_j ~ U[0, 1]. Draws whose source denominator falls below
/// 1e-8 at any channel are rejected and redrawn. Random streams are keyed by
/// (iteration, element), so the result does not depend on evaluation order.
inline std::vector<Sample> augment_batch(std::span<const Sample> batch, const AugmentationConfig& cfg,
                                         const RatioEstimator& estimator, std::vector<AugmentDraw>* trace = nullptr) {
  std::vector<Sample> out(batch.begin(), batch.end());
  out.reserve(batch.size() * (cfg.M + 1));
  constexpr std::uint64_t kSunStream = ~std::uint64_t{0};
  for (std::size_t k = 0; k < cfg.M; ++k) {
    Rng sun_rng(cfg.seed, {k, kSunStream});
    const double theta_a = sun_rng.uniform(0.0, kHalfPi);
    const IrradianceRatio ratio = estimator(theta_a);
    for (std::size_t l = 0; l < batch.size(); ++l) {
      const auto& s = batch[l].spectrum;
      if (s.size() != ratio.size()) throw Error("augment: spectrum and ratio lengths differ");
      Rng rng(cfg.seed, {k, l});
      GeometryParams src, dst;
      for (;;) {
        dst.visible = rng.bernoulli(0.5) ? 1 : 0;
        src.theta = rng.uniform(0.0, kHalfPi);
        dst.theta = rng.uniform(0.0, kHalfPi);
        src.gamma = rng.uniform_closed(0.0, 1.0);
        dst.gamma = rng.uniform_closed(0.0, 1.0);
        const double cs = std::cos(src.theta);
        bool ok = true;
        for (std::size_t c = 0; c < ratio.size() && ok; ++c) ok = ratio[c] * cs + src.gamma >= kMinRelightDenominator;
        if (ok) break;
      }
      src.visible = 1;
      out.push_back({relight(s, ratio, src, dst), batch[l].label, batch[l].coord});
      if (trace) trace->push_back({k, l, theta_a, src, dst});
    }
  }
  return out;
}

}  // namespace spectro::illumination
