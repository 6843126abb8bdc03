// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used to verify the library kernels. Everything
// here is written directly from the mathematical definitions with plain
// nested loops and stays independent of the op implementations.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "udc/ops.hpp"
#include "udc/rng.hpp"
#include "udc/tape.hpp"
#include "udc/tensor.hpp"

namespace oracle {

using udc::Shape;
using udc::Tensor;

template <typename T>
Tensor<T> random_tensor(Shape s, udc::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(s);
  for (auto& v : t.vec()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
Tensor<T> random_int_tensor(Shape s, udc::Rng& rng, int lo = -4, int hi = 4) {
  Tensor<T> t(s);
  for (auto& v : t.vec()) v = static_cast<T>(lo + rng.uniform_int(hi - lo + 1));
  return t;
}

// Shuffled arithmetic progression with pairwise gaps of 0.1: safe input for
// finite-differencing argmax-style ops, where near-ties would flip the
// selected element under the probe step.
template <typename T>
Tensor<T> distinct_tensor(Shape s, udc::Rng& rng) {
  Tensor<T> t(s);
  const int64_t n = t.size();
  for (int64_t i = 0; i < n; ++i) t.data()[i] = static_cast<T>(0.1) * static_cast<T>(i - n / 2);
  for (int64_t i = n - 1; i > 0; --i) std::swap(t.data()[i], t.data()[rng.uniform_int(i + 1)]);
  return t;
}

// Dense cross-correlation with zero padding: one accumulator per output
// element, summation in ascending (ci, ky, kx) order.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, int stride, int pad) {
  const Shape xs = x.shape(), ws = w.shape();
  const int64_t k = ws.h;
  const int64_t oh = (xs.h + 2 * pad - k) / stride + 1;
  const int64_t ow = (xs.w + 2 * pad - k) / stride + 1;
  Tensor<T> out(Shape{xs.n, ws.n, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t o = 0; o < ws.n; ++o)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          T acc = T(0);
          for (int64_t ci = 0; ci < xs.c; ++ci)
            for (int64_t u = 0; u < k; ++u)
              for (int64_t v = 0; v < k; ++v) {
                const int64_t iy = oy * stride - pad + u;
                const int64_t ix = ox * stride - pad + v;
                if (iy >= 0 && iy < xs.h && ix >= 0 && ix < xs.w) acc += x.at(n, ci, iy, ix) * w.at(o, ci, u, v);
              }
          if (bias) acc += bias->at(0, o, 0, 0);
          out.at(n, o, oy, ox) = acc;
        }
  return out;
}

// Per-channel convolution, weight (c, 1, k, k).
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, int stride, int pad) {
  const Shape xs = x.shape();
  const int64_t k = w.shape().h;
  const int64_t oh = (xs.h + 2 * pad - k) / stride + 1;
  const int64_t ow = (xs.w + 2 * pad - k) / stride + 1;
  Tensor<T> out(Shape{xs.n, xs.c, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          T acc = T(0);
          for (int64_t u = 0; u < k; ++u)
            for (int64_t v = 0; v < k; ++v) {
              const int64_t iy = oy * stride - pad + u;
              const int64_t ix = ox * stride - pad + v;
              if (iy >= 0 && iy < xs.h && ix >= 0 && ix < xs.w) acc += x.at(n, c, iy, ix) * w.at(c, 0, u, v);
            }
          if (bias) acc += bias->at(0, c, 0, 0);
          out.at(n, c, oy, ox) = acc;
        }
  return out;
}

// Half-pixel-center bilinear interpolation. Shared convention with the
// library: source coord (d + 0.5) * in/out - 0.5, clamped neighbors, and the
// two-stage lerp a + t * (b - a).
template <typename T>
Tensor<T> bilinear(const Tensor<T>& x, int64_t oh, int64_t ow) {
  const Shape xs = x.shape();
  Tensor<T> out(Shape{xs.n, xs.c, oh, ow});
  auto clampi = [](int64_t v, int64_t n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          const T sy = (static_cast<T>(oy) + T(0.5)) * static_cast<T>(xs.h) / static_cast<T>(oh) - T(0.5);
          const T sx = (static_cast<T>(ox) + T(0.5)) * static_cast<T>(xs.w) / static_cast<T>(ow) - T(0.5);
          const T fy = std::floor(sy), fx = std::floor(sx);
          const T ty = sy - fy, tx = sx - fx;
          const int64_t y0 = clampi(static_cast<int64_t>(fy), xs.h), y1 = clampi(static_cast<int64_t>(fy) + 1, xs.h);
          const int64_t x0 = clampi(static_cast<int64_t>(fx), xs.w), x1 = clampi(static_cast<int64_t>(fx) + 1, xs.w);
          const T a = x.at(n, c, y0, x0) + tx * (x.at(n, c, y0, x1) - x.at(n, c, y0, x0));
          const T b = x.at(n, c, y1, x0) + tx * (x.at(n, c, y1, x1) - x.at(n, c, y1, x0));
          out.at(n, c, oy, ox) = a + ty * (b - a);
        }
  return out;
}

// Structural similarity from the windowed definition: per valid window
// position, Gaussian-weighted means, biased variances, and covariance feed
// the stabilized ratio; the result is the plain average over all positions
// and channels. Always accumulates in double.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b) {
  constexpr int kWin = 11;
  double g[kWin];
  double gs = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gs += g[i];
  }
  const double c1 = 1e-4, c2 = 9e-4;
  const Shape s = a.shape();
  double total = 0.0;
  int64_t count = 0;
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y0 = 0; y0 + kWin <= s.h; ++y0)
        for (int64_t x0 = 0; x0 + kWin <= s.w; ++x0) {
          double mp = 0, mt = 0, pp = 0, tt = 0, pt = 0;
          for (int u = 0; u < kWin; ++u)
            for (int v = 0; v < kWin; ++v) {
              const double w = g[u] * g[v] / (gs * gs);
              const double av = a.at(n, c, y0 + u, x0 + v);
              const double bv = b.at(n, c, y0 + u, x0 + v);
              mp += w * av;
              mt += w * bv;
              pp += w * av * av;
              tt += w * bv * bv;
              pt += w * av * bv;
            }
          const double vp = pp - mp * mp, vt = tt - mt * mt, cov = pt - mp * mt;
          total += ((2 * mp * mt + c1) * (2 * cov + c2)) / ((mp * mp + mt * mt + c1) * (vp + vt + c2));
          ++count;
        }
  return total / static_cast<double>(count);
}

// ------------------------------------------------ finite-difference checker

// Central finite differences against the recorded backward pass. The output
// is contracted with a fixed random cotangent so a single scalar exercises
// the full Jacobian. Returns the worst relative error, where the denominator
// floors at 1 (values under test are O(1)).
template <typename T>
struct GradCheck {
  using Fn = std::function<udc::Value<T>(udc::Tape<T>*, const std::vector<udc::Value<T>>&)>;

  static double run(const Fn& f, std::vector<Tensor<T>> init, uint64_t seed, T eps = T(1e-3)) {
    std::vector<udc::Value<T>> leaves;
    leaves.reserve(init.size());
    for (const auto& t : init) leaves.push_back(udc::leaf(t, true));

    udc::Tape<T> tape;
    auto out = f(&tape, leaves);
    udc::Rng rng(seed);
    Tensor<T> cotangent = random_tensor<T>(out->value.shape(), rng);
    auto loss = udc::reduce(&tape, udc::mul(&tape, out, udc::constant(cotangent)), udc::ReduceMode::Sum);
    tape.backward(loss);

    std::vector<Tensor<T>> analytic;
    analytic.reserve(leaves.size());
    for (const auto& l : leaves) analytic.push_back(udc::grad_or_zeros(l));

    auto eval = [&](const std::vector<Tensor<T>>& vals) -> T {
      std::vector<udc::Value<T>> ls;
      ls.reserve(vals.size());
      for (const auto& t : vals) ls.push_back(udc::leaf(t, true));
      auto o = f(nullptr, ls);
      auto s = udc::reduce<T>(nullptr, udc::mul<T>(nullptr, o, udc::constant(cotangent)), udc::ReduceMode::Sum);
      return s->value.data()[0];
    };

    double worst = 0.0;
    for (size_t i = 0; i < init.size(); ++i) {
      for (int64_t j = 0; j < init[i].size(); ++j) {
        const T saved = init[i].data()[j];
        init[i].data()[j] = saved + eps;
        const T up = eval(init);
        init[i].data()[j] = saved - eps;
        const T dn = eval(init);
        init[i].data()[j] = saved;
        const double numeric = (static_cast<double>(up) - static_cast<double>(dn)) / (2.0 * static_cast<double>(eps));
        const double a = static_cast<double>(analytic[i].data()[j]);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1.0});
        worst = std::max(worst, std::abs(a - numeric) / denom);
      }
    }
    return worst;
  }
};

}  // namespace oracle
