// 1-D spectral CNN trained by mini-batch SGD with momentum, and the spectral
// angle mapper baseline.
//
// Layers: valid-mode convolutions along the spectral axis (full-depth filters,
// stride 1, no pooling), fully connected layers, rectifier activations after
// every hidden layer, softmax output, cross-entropy loss.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spectro/core.hpp"
#include "spectro/io.hpp"
#include "spectro/radiometric.hpp"
#include "spectro/rng.hpp"

namespace spectro::cnn {

struct ArchitectureSpec {
  std::size_t n_conv = 2;
  std::size_t n_fc = 2;  // hidden fully connected layers; the softmax layer comes on top
  std::size_t conv1_filters = 30;
  std::size_t conv1_width = 30;
  std::size_t later_filters = 10;
  std::size_t later_width = 10;
  std::size_t fc_units = 20;
  std::size_t n_classes = 2;
  std::size_t input_length = 0;

  /// Parse names like "2conv2fc".
  static ArchitectureSpec parse(std::string_view name) {
    ArchitectureSpec a;
    const auto c = name.find("conv");
    const auto f = name.find("fc");
    if (c == std::string_view::npos || f == std::string_view::npos || f < c + 4 || f + 2 != name.size())
      throw Error("architecture must look like <k>conv<m>fc, got '" + std::string(name) + "'");
    auto num = [&](std::string_view s) {
      std::size_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
        throw Error("architecture must look like <k>conv<m>fc, got '" + std::string(name) + "'");
      return v;
    };
    a.n_conv = num(name.substr(0, c));
    a.n_fc = num(name.substr(c + 4, f - c - 4));
    return a;
  }

  std::string name() const { return std::to_string(n_conv) + "conv" + std::to_string(n_fc) + "fc"; }

  void validate() const {
    if (n_conv < 1) throw Error("architecture needs at least one convolutional layer");
    if (n_fc < 1) throw Error("architecture needs at least one fully connected layer");
    if (n_classes < 2) throw Error("classifier needs at least two classes");
    if (conv1_filters == 0 || later_filters == 0 || fc_units == 0 || conv1_width == 0 || later_width == 0)
      throw Error("layer sizes must be positive");
    std::size_t len = input_length;
    for (std::size_t l = 0; l < n_conv; ++l) {
      const std::size_t w = l == 0 ? conv1_width : later_width;
      if (w > len)
        throw Error("convolution width " + std::to_string(w) + " exceeds feature length " + std::to_string(len) +
                    " at layer " + std::to_string(l + 1));
      len = len - w + 1;
    }
  }
};

enum class LayerKind { Conv, Dense };

/// Shapes and parameter offsets of one layer. Activations are stored channel-major
/// ([channel][position]); dense layers see them flattened.
struct LayerShape {
  LayerKind kind = LayerKind::Dense;
  std::size_t in_ch = 0, in_len = 0, out_ch = 0, out_len = 0, width = 0;
  std::size_t w_off = 0, n_w = 0, b_off = 0, n_b = 0;
  bool relu = true;
  std::size_t in_size() const { return in_ch * in_len; }
  std::size_t out_size() const { return out_ch * out_len; }
};

inline std::vector<LayerShape> layer_shapes(const ArchitectureSpec& a) {
  a.validate();
  std::vector<LayerShape> ls;
  std::size_t ch = 1, len = a.input_length, off = 0;
  auto place = [&](LayerShape& s) {
    s.w_off = off;
    off += s.n_w;
    s.b_off = off;
    off += s.n_b;
  };
  for (std::size_t l = 0; l < a.n_conv; ++l) {
    LayerShape s;
    s.kind = LayerKind::Conv;
    s.width = l == 0 ? a.conv1_width : a.later_width;
    s.in_ch = ch;
    s.in_len = len;
    s.out_ch = l == 0 ? a.conv1_filters : a.later_filters;
    s.out_len = len - s.width + 1;
    s.n_w = s.out_ch * s.in_ch * s.width;
    s.n_b = s.out_ch;
    place(s);
    ls.push_back(s);
    ch = s.out_ch;
    len = s.out_len;
  }
  std::size_t in = ch * len;
  for (std::size_t l = 0; l <= a.n_fc; ++l) {
    LayerShape s;
    s.kind = LayerKind::Dense;
    s.in_ch = in;
    s.in_len = 1;
    s.out_ch = l == a.n_fc ? a.n_classes : a.fc_units;
    s.out_len = 1;
    s.n_w = s.out_ch * s.in_ch;
    s.n_b = s.out_ch;
    s.relu = l != a.n_fc;
    place(s);
    ls.push_back(s);
    in = s.out_ch;
  }
  return ls;
}

/// Per-sample scratch buffers for forward and backward passes.
template <class T>
struct Workspace {
  std::vector<std::vector<T>> act;    // act[0] = input, act[l + 1] = output of layer l
  std::vector<std::vector<T>> delta;  // delta[l] = dLoss/d(pre-activation of layer l)
  std::vector<std::vector<T>> patch;  // conv layers: input unrolled to [position][channel * width]
  std::vector<T> dpatch;              // scratch for the backward pass through one patch row
};

namespace detail {

/// Dot product with a fixed eight-lane summation order (vectorisable without
/// reassociating floating-point sums).
template <class T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8)
    for (std::size_t u = 0; u < 8; ++u) acc[u] += a[j + u] * b[j + u];
  for (std::size_t u = 0; j < n; ++j, ++u) acc[u] += a[j] * b[j];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

}  // namespace detail

template <class T>
class Network {
 public:
  Network() = default;
  explicit Network(const ArchitectureSpec& arch) : arch_(arch), shapes_(layer_shapes(arch)) {
    params_.assign(shapes_.back().b_off + shapes_.back().n_b, T(0));
  }

  const ArchitectureSpec& arch() const { return arch_; }
  const std::vector<LayerShape>& layers() const { return shapes_; }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  std::size_t n_params() const { return params_.size(); }
  std::size_t input_length() const { return arch_.input_length; }
  std::size_t n_classes() const { return arch_.n_classes; }

  /// He initialisation: weights ~ N(0, 2 / fan_in), biases zero.
  void init(std::uint64_t seed) {
    std::fill(params_.begin(), params_.end(), T(0));
    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      const auto& s = shapes_[l];
      const double fan_in = static_cast<double>(s.kind == LayerKind::Conv ? s.in_ch * s.width : s.in_ch);
      const double sd = std::sqrt(2.0 / fan_in);
      Rng rng(seed, {0x696e6974, l});
      for (std::size_t i = 0; i < s.n_w; ++i) params_[s.w_off + i] = static_cast<T>(sd * rng.normal());
    }
  }

  Workspace<T> workspace() const {
    Workspace<T> ws;
    ws.act.resize(shapes_.size() + 1);
    ws.delta.resize(shapes_.size());
    ws.patch.resize(shapes_.size());
    ws.act[0].resize(arch_.input_length);
    std::size_t widest = 0;
    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      if (shapes_[l].kind == LayerKind::Conv) {
        ws.patch[l].resize(shapes_[l].out_len * shapes_[l].in_ch * shapes_[l].width);
        widest = std::max(widest, shapes_[l].in_ch * shapes_[l].width);
      }
      ws.act[l + 1].resize(shapes_[l].out_size());
      ws.delta[l].resize(shapes_[l].out_size());
    }
    ws.dpatch.resize(widest);
    return ws;
  }

  /// Forward pass; leaves class probabilities in ws.act.back().
  void forward(std::span<const T> x, Workspace<T>& ws) const {
    if (x.size() != arch_.input_length)
      throw Error("input length " + std::to_string(x.size()) + " does not match network input length " +
                  std::to_string(arch_.input_length));
    std::copy(x.begin(), x.end(), ws.act[0].begin());
    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      const auto& s = shapes_[l];
      const T* in = ws.act[l].data();
      T* out = ws.act[l + 1].data();
      const T* w = params_.data() + s.w_off;
      const T* b = params_.data() + s.b_off;
      if (s.kind == LayerKind::Conv) {
        const std::size_t K = s.in_ch * s.width;
        T* patch = ws.patch[l].data();
        for (std::size_t t = 0; t < s.out_len; ++t)
          for (std::size_t i = 0; i < s.in_ch; ++i)
            std::copy_n(in + i * s.in_len + t, s.width, patch + t * K + i * s.width);
        for (std::size_t o = 0; o < s.out_ch; ++o)
          for (std::size_t t = 0; t < s.out_len; ++t)
            out[o * s.out_len + t] = b[o] + detail::dot(w + o * K, patch + t * K, K);
      } else {
        for (std::size_t o = 0; o < s.out_ch; ++o) out[o] = b[o] + detail::dot(w + o * s.in_ch, in, s.in_ch);
      }
      if (s.relu)
        for (std::size_t i = 0; i < s.out_size(); ++i) out[i] = std::max(out[i], T(0));
    }
    softmax_in_place(ws.act.back());
  }

  std::vector<T> predict(std::span<const T> x) const {
    auto ws = workspace();
    forward(x, ws);
    return ws.act.back();
  }

  /// Cross-entropy loss of one sample; ws must hold the forward pass.
  T loss_from(const Workspace<T>& ws, int label) const {
    const auto& p = ws.act.back();
    return -std::log(std::max(p[static_cast<std::size_t>(label)], std::numeric_limits<T>::min()));
  }

  T loss(std::span<const T> x, int label) const {
    auto ws = workspace();
    forward(x, ws);
    return loss_from(ws, label);
  }

  /// Forward + backward for one sample, adding dLoss/dparams into grad. Returns the loss.
  T accumulate_gradient(std::span<const T> x, int label, std::vector<T>& grad, Workspace<T>& ws) const {
    if (label < 0 || static_cast<std::size_t>(label) >= arch_.n_classes) throw Error("label out of range");
    forward(x, ws);
    const T loss = loss_from(ws, label);
    const std::size_t L = shapes_.size();
    {
      auto& d = ws.delta[L - 1];
      const auto& p = ws.act.back();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = p[k];
      d[static_cast<std::size_t>(label)] -= T(1);
    }
    for (std::size_t l = L; l-- > 0;) {
      const auto& s = shapes_[l];
      const T* in = ws.act[l].data();
      const T* d = ws.delta[l].data();
      const T* w = params_.data() + s.w_off;
      T* gw = grad.data() + s.w_off;
      T* gb = grad.data() + s.b_off;
      T* din = l > 0 ? ws.delta[l - 1].data() : nullptr;
      if (din) std::fill(din, din + s.in_size(), T(0));
      if (s.kind == LayerKind::Conv) {
        const std::size_t K = s.in_ch * s.width;
        const T* patch = ws.patch[l].data();
        T* dp = ws.dpatch.data();
        for (std::size_t t = 0; t < s.out_len; ++t) {
          const T* row = patch + t * K;
          bool any = false;
          if (din) std::fill(dp, dp + K, T(0));
          for (std::size_t o = 0; o < s.out_ch; ++o) {
            const T dv = d[o * s.out_len + t];
            if (dv == T(0)) continue;
            any = true;
            gb[o] += dv;
            T* g = gw + o * K;
            for (std::size_t j = 0; j < K; ++j) g[j] += dv * row[j];
            if (din) {
              const T* wr = w + o * K;
              for (std::size_t j = 0; j < K; ++j) dp[j] += dv * wr[j];
            }
          }
          if (din && any)
            for (std::size_t i = 0; i < s.in_ch; ++i) {
              T* dst = din + i * s.in_len + t;
              const T* src = dp + i * s.width;
              for (std::size_t k = 0; k < s.width; ++k) dst[k] += src[k];
            }
        }
      } else {
        for (std::size_t o = 0; o < s.out_ch; ++o) {
          const T dv = d[o];
          if (dv == T(0)) continue;
          gb[o] += dv;
          T* g = gw + o * s.in_ch;
          for (std::size_t i = 0; i < s.in_ch; ++i) g[i] += dv * in[i];
          if (din) {
            const T* row = w + o * s.in_ch;
            for (std::size_t i = 0; i < s.in_ch; ++i) din[i] += row[i] * dv;
          }
        }
      }
      // Gate by the rectifier of the layer below: its output is this layer's input.
      if (din && shapes_[l - 1].relu)
        for (std::size_t i = 0; i < s.in_size(); ++i)
          if (!(in[i] > T(0))) din[i] = T(0);
    }
    return loss;
  }

  /// Sign pattern of every hidden rectifier for input x (used to detect kinks).
  std::vector<std::uint8_t> activation_pattern(std::span<const T> x) const {
    auto ws = workspace();
    forward(x, ws);
    std::vector<std::uint8_t> pat;
    for (std::size_t l = 0; l < shapes_.size(); ++l)
      if (shapes_[l].relu)
        for (T v : ws.act[l + 1]) pat.push_back(v > T(0));
    return pat;
  }

  template <class U>
  Network<U> cast() const {
    Network<U> out(arch_);
    for (std::size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<U>(params_[i]);
    return out;
  }

 private:
  static void softmax_in_place(std::vector<T>& z) {
    const T m = *std::max_element(z.begin(), z.end());
    T sum = 0;
    for (auto& v : z) {
      v = std::exp(v - m);
      sum += v;
    }
    for (auto& v : z) v /= sum;
  }

  ArchitectureSpec arch_;
  std::vector<LayerShape> shapes_;
  std::vector<T> params_;
};

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheckConfig {
  std::size_t n_params = 200;  // minimum number of parameters compared
  double step = 1e-4;
  std::uint64_t seed = 0;
};

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::size_t n_checked = 0;
  std::size_t n_skipped_kinks = 0;
  std::vector<double> layer_max_rel_error;  // per layer, weights and biases together
};

/// Compare analytic gradients with central differences on a stratified random
/// subset of parameters (every layer's weights and biases are represented).
/// Perturbations that flip any rectifier are skipped: the loss is not
/// differentiable across such a kink, so the difference quotient is meaningless there.
inline GradientCheckResult gradient_check(const Network<double>& net, std::span<const double> x, int label,
                                          const GradientCheckConfig& cfg = {}) {
  Network<double> probe = net;
  std::vector<double> grad(net.n_params(), 0.0);
  auto ws = net.workspace();
  net.accumulate_gradient(x, label, grad, ws);
  const auto base_pattern = net.activation_pattern(x);

  const auto& ls = net.layers();
  struct Group {
    std::size_t layer, off, n;
  };
  std::vector<Group> groups;
  for (std::size_t l = 0; l < ls.size(); ++l) {
    groups.push_back({l, ls[l].w_off, ls[l].n_w});
    groups.push_back({l, ls[l].b_off, ls[l].n_b});
  }
  const std::size_t per_group = (cfg.n_params + groups.size() - 1) / groups.size();

  GradientCheckResult res;
  res.layer_max_rel_error.assign(ls.size(), 0.0);
  Rng rng(cfg.seed, {0x67726164});
  std::vector<std::uint8_t> used(net.n_params(), 0);
  std::vector<std::size_t> layer_of(net.n_params(), 0);
  for (const auto& g : groups)
    for (std::size_t i = 0; i < g.n; ++i) layer_of[g.off + i] = g.layer;

  // Returns false when the parameter sits next to a rectifier kink.
  auto check = [&](std::size_t p) {
    used[p] = 1;
    const double orig = probe.params()[p];
    probe.params()[p] = orig + cfg.step;
    const double lp = probe.loss(x, label);
    const bool kink_p = probe.activation_pattern(x) != base_pattern;
    probe.params()[p] = orig - cfg.step;
    const double lm = probe.loss(x, label);
    const bool kink_m = probe.activation_pattern(x) != base_pattern;
    probe.params()[p] = orig;
    if (kink_p || kink_m) {
      ++res.n_skipped_kinks;
      return false;
    }
    const double numeric = (lp - lm) / (2.0 * cfg.step);
    const double analytic = grad[p];
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-7});
    res.max_rel_error = std::max(res.max_rel_error, rel);
    res.layer_max_rel_error[layer_of[p]] = std::max(res.layer_max_rel_error[layer_of[p]], rel);
    ++res.n_checked;
    return true;
  };

  for (const auto& g : groups) {
    std::vector<std::size_t> idx(g.n);
    std::iota(idx.begin(), idx.end(), g.off);
    rng.shuffle(idx);
    std::size_t done = 0;
    for (std::size_t j = 0; j < idx.size() && done < per_group; ++j) done += check(idx[j]) ? 1 : 0;
  }
  // Small groups (biases) may not fill their share; top up from the rest.
  if (res.n_checked < cfg.n_params) {
    std::vector<std::size_t> rest;
    for (std::size_t p = 0; p < used.size(); ++p)
      if (!used[p]) rest.push_back(p);
    rng.shuffle(rest);
    for (std::size_t j = 0; j < rest.size() && res.n_checked < cfg.n_params; ++j) check(rest[j]);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 1e-5;
  double momentum = 0.9;
  std::size_t batch_size = 50;
  std::uint64_t seed = 0;
  std::size_t min_steps = 0;  // raise the epoch count until at least this many SGD steps run
  double clip_norm = 0.0;     // rescale the mean batch gradient to at most this L2 norm; 0 = off

  std::size_t effective_epochs(std::size_t n_train) const {
    if (min_steps == 0 || n_train == 0) return epochs;
    const std::size_t batches = (n_train + batch_size - 1) / batch_size;
    return std::max(epochs, (min_steps + batches - 1) / batches);
  }

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw Error("learning rate must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("momentum must lie in [0, 1)");
    if (batch_size < 1) throw Error("batch size must be at least 1");
    if (!(clip_norm >= 0.0)) throw Error("gradient clip norm must be non-negative");
  }
};

/// Optional per-batch transform of raw spectra (e.g. relighting augmentation).
/// The second argument is a seed unique to (epoch, batch).
using BatchTransform = std::function<std::vector<Sample>(std::span<const Sample>, std::uint64_t)>;

struct TrainMetadata {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  double momentum = 0.0;
  std::size_t batch_size = 0;
  double clip_norm = 0.0;
  bool augmented = false;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // mean loss per epoch
};

struct ClassifierModel {
  Network<float> net;
  radiometric::Normalizer normalizer;
  std::vector<double> wavelengths_nm;
  std::vector<std::string> class_names;
  std::vector<double> thresholds;  // per class; empty until selected on validation data
  TrainMetadata meta;

  std::size_t n_classes() const { return net.n_classes(); }

  /// Normalised, float-converted network input for a raw spectrum.
  std::vector<float> prepare(std::span<const double> raw) const {
    const auto s = radiometric::normalize(normalizer, raw, wavelengths_nm);
    return {s.begin(), s.end()};
  }

  std::vector<float> probabilities(std::span<const double> raw) const { return net.predict(prepare(raw)); }
};

/// Train a CNN on data.train. Each mini-batch is transformed by `augment` (on
/// raw spectra), then normalised with the fitted `normalizer`, then used for one
/// SGD-with-momentum step on the mean cross-entropy.
inline ClassifierModel train(const DatasetSplit& data, ArchitectureSpec arch, const TrainConfig& cfg,
                             const radiometric::Normalizer& normalizer, const BatchTransform& augment = {}) {
  cfg.validate();
  if (data.train.empty()) throw Error("training set is empty");
  arch.input_length = data.grid.size();
  arch.n_classes = data.class_names.size();
  if (normalizer.needs_fit() && !normalizer.fitted) throw Error("normalisation method has not been fitted");

  ClassifierModel model;
  model.net = Network<float>(arch);
  model.net.init(cfg.seed);
  model.normalizer = normalizer;
  model.wavelengths_nm = data.grid.nm();
  model.class_names = data.class_names;
  const std::size_t epochs = cfg.effective_epochs(data.train.size());
  model.meta = {cfg.seed,          epochs, cfg.learning_rate, cfg.momentum, cfg.batch_size, cfg.clip_norm,
                static_cast<bool>(augment), 0.0,  {}};

  auto& params = model.net.params();
  std::vector<float> velocity(params.size(), 0.0f), grad(params.size(), 0.0f);
  auto ws = model.net.workspace();
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto lr = static_cast<float>(cfg.learning_rate);
  const auto mom = static_cast<float>(cfg.momentum);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng shuffle_rng(cfg.seed, {0x73687566, epoch});
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t b0 = 0, batch = 0; b0 < order.size(); b0 += cfg.batch_size, ++batch) {
      std::vector<Sample> raw;
      for (std::size_t i = b0; i < std::min(order.size(), b0 + cfg.batch_size); ++i) raw.push_back(data.train[order[i]]);
      if (augment) raw = augment(raw, derive_seed(cfg.seed, {0x61756720, epoch, batch}));
      std::fill(grad.begin(), grad.end(), 0.0f);
      double batch_loss = 0.0;
      for (const auto& s : raw) batch_loss += model.net.accumulate_gradient(model.prepare(s.spectrum), s.label, grad, ws);
      if (!std::isfinite(batch_loss))
        throw Error("training loss became non-finite at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch));
      float scale = 1.0f / static_cast<float>(raw.size());
      if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (float g : grad) sq += static_cast<double>(g) * g;
        const double norm = std::sqrt(sq) * scale;
        if (norm > cfg.clip_norm) scale *= static_cast<float>(cfg.clip_norm / norm);
      }
      for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p] = mom * velocity[p] - lr * grad[p] * scale;
        params[p] += velocity[p];
      }
      epoch_loss += batch_loss;
      epoch_count += raw.size();
    }
    model.meta.loss_history.push_back(epoch_loss / static_cast<double>(epoch_count));
  }
  if (!model.meta.loss_history.empty()) model.meta.final_loss = model.meta.loss_history.back();
  return model;
}

// ---------------------------------------------------------------------------
// Spectral angle mapper

inline double spectral_angle(std::span<const double> s, std::span<const double> m) {
  if (s.size() != m.size()) throw Error("SAM: spectrum and library lengths differ");
  double dot = 0.0, ns = 0.0, nm = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    dot += s[k] * m[k];
    ns += s[k] * s[k];
    nm += m[k] * m[k];
  }
  if (ns == 0.0) throw Error("SAM: zero-norm spectrum");
  if (nm == 0.0) throw Error("SAM: zero-norm library spectrum");
  return std::acos(std::clamp(dot / (std::sqrt(ns) * std::sqrt(nm)), -1.0, 1.0));
}

/// Class scores as negative spectral angles (higher is better).
inline std::vector<double> sam_classify(std::span<const double> s, const std::vector<Spectrum>& library) {
  std::vector<double> scores(library.size());
  for (std::size_t k = 0; k < library.size(); ++k) scores[k] = -spectral_angle(s, library[k]);
  return scores;
}

inline int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Per-class mean spectra of a labelled sample set.
inline std::vector<Spectrum> class_means(std::span<const Sample> samples, std::size_t n_classes) {
  if (samples.empty()) throw Error("cannot build a SAM library from no samples");
  const std::size_t d = samples.front().spectrum.size();
  std::vector<Spectrum> lib(n_classes, Spectrum(d, 0.0));
  std::vector<std::size_t> count(n_classes, 0);
  for (const auto& s : samples) {
    auto& m = lib[static_cast<std::size_t>(s.label)];
    for (std::size_t k = 0; k < d; ++k) m[k] += s.spectrum[k];
    ++count[static_cast<std::size_t>(s.label)];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (count[c] == 0) throw Error("SAM library: class " + std::to_string(c) + " has no samples");
    for (auto& v : lib[c]) v /= static_cast<double>(count[c]);
  }
  return lib;
}

// ---------------------------------------------------------------------------
// Serialisation: "SPCM", u32 version, u32 header length, JSON header, float32 parameters.

inline constexpr char kModelMagic[4] = {'S', 'P', 'C', 'M'};

inline io::json normalizer_to_json(const radiometric::Normalizer& n) {
  io::json j;
  j["method"] = std::string(radiometric::method_name(n.method));
  j["panel"] = {n.panel.r0, n.panel.c0, n.panel.r1, n.panel.c1};
  j["reference_channel"] = n.reference_channel ? io::json(*n.reference_channel) : io::json(nullptr);
  j["zero_channel"] = n.zero_channel;
  j["fitted"] = n.fitted;
  j["bands"] = n.bands;
  j["scene_mean"] = n.scene_mean;
  j["scene_max"] = n.scene_max;
  j["band_means"] = n.band_means;
  j["panel_mean"] = n.panel_mean;
  if (n.method == radiometric::Method::ResidualImage) j["band_means_computed_on"] = "scaled scene";
  return j;
}

inline radiometric::Normalizer normalizer_from_json(const io::json& j) {
  radiometric::Normalizer n;
  n.method = radiometric::parse_method(j.at("method").get<std::string>());
  const auto p = j.at("panel").get<std::vector<std::size_t>>();
  if (p.size() != 4) throw Error("normaliser panel must have 4 entries");
  n.panel = {p[0], p[1], p[2], p[3]};
  if (!j.at("reference_channel").is_null()) n.reference_channel = j.at("reference_channel").get<std::size_t>();
  n.zero_channel = j.at("zero_channel").get<std::size_t>();
  n.fitted = j.at("fitted").get<bool>();
  n.bands = j.at("bands").get<std::size_t>();
  n.scene_mean = j.at("scene_mean").get<std::vector<double>>();
  n.scene_max = j.at("scene_max").get<std::vector<double>>();
  n.band_means = j.at("band_means").get<std::vector<double>>();
  n.panel_mean = j.at("panel_mean").get<std::vector<double>>();
  return n;
}

inline io::json model_header(const ClassifierModel& m) {
  const auto& a = m.net.arch();
  io::json h;
  h["architecture"] = {{"name", a.name()},
                       {"n_conv", a.n_conv},
                       {"n_fc", a.n_fc},
                       {"conv1_filters", a.conv1_filters},
                       {"conv1_width", a.conv1_width},
                       {"later_filters", a.later_filters},
                       {"later_width", a.later_width},
                       {"fc_units", a.fc_units},
                       {"n_classes", a.n_classes},
                       {"input_length", a.input_length},
                       {"activation", "relu"},
                       {"conv_filters", "full-depth"},
                       {"padding", "valid"},
                       {"stride", 1}};
  h["n_params"] = m.net.n_params();
  h["param_order"] = "per layer: weights [out][in][width] then biases";
  h["wavelengths_nm"] = m.wavelengths_nm;
  h["class_names"] = m.class_names;
  h["thresholds"] = m.thresholds;
  h["normalizer"] = normalizer_to_json(m.normalizer);
  h["training"] = {{"seed", m.meta.seed},
                   {"epochs", m.meta.epochs},
                   {"learning_rate", m.meta.learning_rate},
                   {"momentum", m.meta.momentum},
                   {"batch_size", m.meta.batch_size},
                   {"clip_norm", m.meta.clip_norm},
                   {"augmented", m.meta.augmented},
                   {"final_loss", m.meta.final_loss},
                   {"loss_history", m.meta.loss_history}};
  return h;
}

inline void save_model(const ClassifierModel& m, const std::filesystem::path& path) {
  const std::string header = model_header(m).dump();
  std::string out(kModelMagic, 4);
  io::detail::put_u32(out, 1);
  io::detail::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (float v : m.net.params()) io::detail::put_f32(out, v);
  io::detail::write_file(path, out);
}

inline ClassifierModel load_model(const std::filesystem::path& path) {
  const std::string bytes = io::detail::read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || bytes.compare(0, 4, std::string(kModelMagic, 4)) != 0)
    throw Error("not a model file: " + path.string());
  if (io::detail::get_u32(p + 4) != 1) throw Error("unsupported model file version");
  const std::uint32_t hlen = io::detail::get_u32(p + 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(hlen)) throw Error("model header is truncated");
  io::json h;
  try {
    h = io::json::parse(bytes.substr(12, hlen));
  } catch (const io::json::exception& e) {
    throw Error("malformed model header: " + std::string(e.what()));
  }
  const auto& ja = h.at("architecture");
  ArchitectureSpec a;
  a.n_conv = ja.at("n_conv");
  a.n_fc = ja.at("n_fc");
  a.conv1_filters = ja.at("conv1_filters");
  a.conv1_width = ja.at("conv1_width");
  a.later_filters = ja.at("later_filters");
  a.later_width = ja.at("later_width");
  a.fc_units = ja.at("fc_units");
  a.n_classes = ja.at("n_classes");
  a.input_length = ja.at("input_length");
  ClassifierModel m;
  m.net = Network<float>(a);
  const std::size_t payload = bytes.size() - 12 - hlen;
  if (payload != m.net.n_params() * 4)
    throw Error("model payload holds " + std::to_string(payload) + " bytes, expected " +
                std::to_string(m.net.n_params() * 4));
  const auto* q = p + 12 + hlen;
  for (std::size_t i = 0; i < m.net.n_params(); ++i) m.net.params()[i] = io::detail::get_f32(q + 4 * i);
  m.wavelengths_nm = h.at("wavelengths_nm").get<std::vector<double>>();
  m.class_names = h.at("class_names").get<std::vector<std::string>>();
  m.thresholds = h.at("thresholds").get<std::vector<double>>();
  m.normalizer = normalizer_from_json(h.at("normalizer"));
  const auto& t = h.at("training");
  m.meta.seed = t.at("seed");
  m.meta.epochs = t.at("epochs");
  m.meta.learning_rate = t.at("learning_rate");
  m.meta.momentum = t.at("momentum");
  m.meta.batch_size = t.at("batch_size");
  m.meta.clip_norm = t.at("clip_norm");
  m.meta.augmented = t.at("augmented");
  m.meta.final_loss = t.at("final_loss");
  m.meta.loss_history = t.at("loss_history").get<std::vector<double>>();
  return m;
}

}  // namespace spectro::cnn
