// Savitzky-Golay smoothing.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "spectro/core.hpp"

namespace spectro {

namespace detail {

/// Least-squares weights that evaluate a degree-`order` polynomial fitted to
/// samples at integer offsets xs, at offset 0.
inline std::vector<double> sg_weights(std::span<const double> xs, std::size_t order) {
  const std::size_t n = xs.size(), m = order + 1;
  // Normal matrix G = A^T A with A_ij = x_i^j.
  std::vector<double> g(m * m, 0.0);
  for (double x : xs) {
    std::vector<double> pw(2 * m - 1, 1.0);
    for (std::size_t p = 1; p < pw.size(); ++p) pw[p] = pw[p - 1] * x;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) g[a * m + b] += pw[a + b];
  }
  // Solve G c = e0 by Gauss-Jordan with partial pivoting.
  std::vector<double> rhs(m, 0.0);
  rhs[0] = 1.0;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(g[r * m + col]) > std::abs(g[piv * m + col])) piv = r;
    if (std::abs(g[piv * m + col]) < 1e-300) throw Error("Savitzky-Golay system is singular");
    if (piv != col) {
      for (std::size_t c = 0; c < m; ++c) std::swap(g[col * m + c], g[piv * m + c]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = g[r * m + col] / g[col * m + col];
      for (std::size_t c = col; c < m; ++c) g[r * m + c] -= f * g[col * m + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> c(m);
  for (std::size_t i = 0; i < m; ++i) c[i] = rhs[i] / g[i * m + i];
  // weights_i = sum_j c_j x_i^j
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double pw = 1.0;
    for (std::size_t j = 0; j < m; ++j, pw *= xs[i]) w[i] += c[j] * pw;
  }
  return w;
}

}  // namespace detail

/// Savitzky-Golay filter with an odd `window` and polynomial `order < window`.
/// Near the ends the polynomial fitted to the first/last full window is
/// evaluated in place, so any polynomial of degree <= order passes through unchanged.
/// If the signal is shorter than the window, the window shrinks to the largest
/// usable odd length.
inline std::vector<double> savitzky_golay(std::span<const double> y, std::size_t window, std::size_t order) {
  if (window % 2 == 0) throw Error("Savitzky-Golay window must be odd");
  if (window <= order) throw Error("Savitzky-Golay window must exceed the polynomial order");
  const std::size_t n = y.size();
  if (n == 0) return {};
  if (n < window) {
    window = (n % 2 == 1) ? n : n - 1;
    if (window <= order) return std::vector<double>(y.begin(), y.end());
  }
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  std::vector<double> xs(window);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = std::min(i >= half ? i - half : 0, n - window);
    for (std::size_t j = 0; j < window; ++j)
      xs[j] = static_cast<double>(start + j) - static_cast<double>(i);
    const auto w = detail::sg_weights(xs, order);
    double acc = 0.0;
    for (std::size_t j = 0; j < window; ++j) acc += w[j] * y[start + j];
    out[i] = acc;
  }
  return out;
}

}  // namespace spectro
