// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode primitives on dense NCHW tensors. Kernels are single-threaded;
// every output element is produced by one fixed-order accumulation chain, so
// results are bit-reproducible run to run. Convolutions accumulate with a
// single accumulator per output element in the compute precision.

#include "udc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace udc {

namespace {

// ---------------------------------------------------------------- helpers

// The backward rule is only materialized into a std::function when the node
// is actually recorded; detached execution never pays for it.
template <typename T, typename F>
Value<T> finish(Tape<T>* tape, Tensor<T> out, std::vector<Value<T>> inputs, F&& bp) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(out);
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->requires_grad;
  if (tape != nullptr && needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backprop = std::forward<F>(bp);
    tape->record(node);
  }
  return node;
}

template <typename T>
void require_same_shape(const Value<T>& a, const Value<T>& b, const char* op) {
  check(a->value.same_shape(b->value), ErrorCode::ShapeMismatch,
        std::string(op) + ": operand shapes " + a->value.shape().str() + " and " + b->value.shape().str() +
            " must match exactly (no implicit broadcasting)");
}

inline int64_t conv_out_extent(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// C (MxN) += A (MxK) * B (KxN), all row-major. The j-inner loop vectorizes;
// for a fixed (i, j) the additions happen in ascending k order, matching a
// naive per-element accumulator loop.
template <typename T>
void gemm_acc(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
  for (int64_t i = 0; i < M; ++i) {
    const T* __restrict a = A + i * K;
    T* __restrict c = C + i * N;
    for (int64_t k = 0; k < K; ++k) {
      const T av = a[k];
      const T* __restrict b = B + k * N;
      for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// Patch matrix for one image: cols[(ci*kh + u)*kw + v][oy*ow + ox], zero
// outside the padded extent. Row order matches the (co, ci, kh, kw) weight
// layout flattened per output channel.
template <typename T>
void im2col(const T* src, int64_t c, int64_t h, int64_t w, int64_t k, int64_t stride, int64_t pad, int64_t oh,
            int64_t ow, T* cols) {
  const int64_t ohw = oh * ow;
  for (int64_t ci = 0; ci < c; ++ci) {
    const T* plane = src + ci * h * w;
    for (int64_t u = 0; u < k; ++u) {
      for (int64_t v = 0; v < k; ++v) {
        T* row = cols + ((ci * k + u) * k + v) * ohw;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + u;
          T* out = row + oy * ow;
          if (iy < 0 || iy >= h) {
            std::memset(out, 0, sizeof(T) * static_cast<size_t>(ow));
            continue;
          }
          const T* in = plane + iy * w;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + v;
            out[ox] = (ix >= 0 && ix < w) ? in[ix] : T(0);
          }
        }
      }
    }
  }
}

// Transposed patch matrix: rows[oy*ow + ox][(ci*k + u)*k + v]. Feeds the
// weight-gradient GEMM with contiguous inner rows.
template <typename T>
void im2row(const T* src, int64_t c, int64_t h, int64_t w, int64_t k, int64_t stride, int64_t pad, int64_t oh,
            int64_t ow, T* rows) {
  const int64_t ckk = c * k * k;
  for (int64_t oy = 0; oy < oh; ++oy) {
    for (int64_t ox = 0; ox < ow; ++ox) {
      T* row = rows + (oy * ow + ox) * ckk;
      for (int64_t ci = 0; ci < c; ++ci) {
        const T* plane = src + ci * h * w;
        for (int64_t u = 0; u < k; ++u) {
          const int64_t iy = oy * stride - pad + u;
          for (int64_t v = 0; v < k; ++v) {
            const int64_t ix = ox * stride - pad + v;
            *row++ = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? plane[iy * w + ix] : T(0);
          }
        }
      }
    }
  }
}

// Scatter of a patch-matrix gradient back onto the input plane grid.
template <typename T>
void col2im_add(const T* cols, int64_t c, int64_t h, int64_t w, int64_t k, int64_t stride, int64_t pad, int64_t oh,
                int64_t ow, T* dst) {
  const int64_t ohw = oh * ow;
  for (int64_t ci = 0; ci < c; ++ci) {
    T* plane = dst + ci * h * w;
    for (int64_t u = 0; u < k; ++u) {
      for (int64_t v = 0; v < k; ++v) {
        const T* row = cols + ((ci * k + u) * k + v) * ohw;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + u;
          if (iy < 0 || iy >= h) continue;
          T* out = plane + iy * w;
          const T* in = row + oy * ow;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + v;
            if (ix >= 0 && ix < w) out[ix] += in[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void check_conv_args(const Value<T>& x, const Value<T>& weight, const Value<T>& bias, int stride, int padding,
                     bool depthwise, const char* op) {
  const Shape& xs = x->value.shape();
  const Shape& ws = weight->value.shape();
  check(stride >= 1, ErrorCode::InvalidArgument, std::string(op) + ": stride must be >= 1, got " + std::to_string(stride));
  check(padding >= 0, ErrorCode::InvalidArgument,
        std::string(op) + ": padding must be >= 0, got " + std::to_string(padding));
  check(ws.h == ws.w, ErrorCode::ShapeMismatch,
        std::string(op) + ": kernel must be square, got " + std::to_string(ws.h) + "x" + std::to_string(ws.w));
  if (depthwise) {
    check(ws.c == 1, ErrorCode::ShapeMismatch,
          std::string(op) + ": weight dim 1 must be 1 for per-channel convolution, got " + std::to_string(ws.c));
    check(ws.n == xs.c, ErrorCode::ShapeMismatch,
          std::string(op) + ": weight channel count " + std::to_string(ws.n) + " does not match input channels " +
              std::to_string(xs.c));
  } else {
    check(ws.c == xs.c, ErrorCode::ShapeMismatch,
          std::string(op) + ": weight input-channel dim " + std::to_string(ws.c) + " does not match input channels " +
              std::to_string(xs.c));
  }
  const int64_t co = depthwise ? xs.c : ws.n;
  if (bias) {
    const Shape want{1, co, 1, 1};
    check(bias->value.shape() == want, ErrorCode::ShapeMismatch,
          std::string(op) + ": bias shape " + bias->value.shape().str() + " must be " + want.str());
  }
  check(conv_out_extent(xs.h, ws.h, stride, padding) >= 1, ErrorCode::ShapeMismatch,
        std::string(op) + ": output height would be < 1 for input h=" + std::to_string(xs.h));
  check(conv_out_extent(xs.w, ws.w, stride, padding) >= 1, ErrorCode::ShapeMismatch,
        std::string(op) + ": output width would be < 1 for input w=" + std::to_string(xs.w));
}

template <typename T>
struct ResizePlan {
  std::vector<int64_t> lo0, lo1;  // clamped neighbor indices per output index
  std::vector<T> t;               // interpolation fraction per output index
};

// Half-pixel-center source coordinate: src = (dst + 0.5) * in/out - 0.5.
template <typename T>
ResizePlan<T> resize_plan(int64_t in, int64_t out) {
  ResizePlan<T> p;
  p.lo0.resize(out);
  p.lo1.resize(out);
  p.t.resize(out);
  const T ratio = static_cast<T>(in) / static_cast<T>(out);
  for (int64_t d = 0; d < out; ++d) {
    T src = (static_cast<T>(d) + T(0.5)) * ratio - T(0.5);
    T f = std::floor(src);
    int64_t i0 = static_cast<int64_t>(f);
    p.t[d] = src - f;
    p.lo0[d] = std::clamp<int64_t>(i0, 0, in - 1);
    p.lo1[d] = std::clamp<int64_t>(i0 + 1, 0, in - 1);
  }
  return p;
}

}  // namespace

// ------------------------------------------------------------------ conv2d

template <typename T>
Value<T> conv2d(Tape<T>* tape, const Value<T>& x, const Value<T>& weight, const Value<T>& bias, int stride,
                int padding) {
  check_conv_args(x, weight, bias, stride, padding, false, "conv2d");
  const Shape xs = x->value.shape();
  const Shape ws = weight->value.shape();
  const int64_t k = ws.h, co = ws.n, ci = ws.c;
  const int64_t oh = conv_out_extent(xs.h, k, stride, padding);
  const int64_t ow = conv_out_extent(xs.w, k, stride, padding);
  const int64_t ohw = oh * ow, ckk = ci * k * k;
  const bool unit = (k == 1 && stride == 1 && padding == 0);

  Tensor<T> out(Shape{xs.n, co, oh, ow});
  {
    std::vector<T> cols;
    if (!unit) cols.resize(static_cast<size_t>(ckk * ohw));
    for (int64_t n = 0; n < xs.n; ++n) {
      const T* src = x->value.plane(n, 0);
      const T* B = src;
      if (!unit) {
        im2col(src, ci, xs.h, xs.w, k, stride, padding, oh, ow, cols.data());
        B = cols.data();
      }
      gemm_acc(weight->value.data(), B, out.plane(n, 0), co, ckk, ohw);
    }
    if (bias) {
      const T* b = bias->value.data();
      for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t o = 0; o < co; ++o) {
          T* p = out.plane(n, o);
          const T bv = b[o];
          for (int64_t i = 0; i < ohw; ++i) p[i] += bv;
        }
    }
  }

  std::vector<Value<T>> inputs{x, weight};
  if (bias) inputs.push_back(bias);
  auto bp = [x, weight, bias, stride, padding, k, co, ci, oh, ow, xs](Node<T>& self) {
    const int64_t ohw = oh * ow, ckk = ci * k * k;
    const bool unit = (k == 1 && stride == 1 && padding == 0);
    const T* dy = self.grad.data();
    if (x->requires_grad) {
      // dX per image: patch-grad = W^T (ckk x co) * dY (co x ohw), scattered
      // back onto the input grid.
      Tensor<T>& dx = grad_buffer(*x);
      std::vector<T> wt(static_cast<size_t>(ckk * co));
      const T* w = weight->value.data();
      for (int64_t o = 0; o < co; ++o)
        for (int64_t r = 0; r < ckk; ++r) wt[static_cast<size_t>(r * co + o)] = w[o * ckk + r];
      std::vector<T> dcols(static_cast<size_t>(ckk * ohw));
      for (int64_t n = 0; n < xs.n; ++n) {
        std::fill(dcols.begin(), dcols.end(), T(0));
        gemm_acc(wt.data(), dy + n * co * ohw, dcols.data(), ckk, co, ohw);
        if (unit) {
          T* dst = dx.plane(n, 0);
          for (int64_t i = 0; i < ckk * ohw; ++i) dst[i] += dcols[static_cast<size_t>(i)];
        } else {
          col2im_add(dcols.data(), ci, xs.h, xs.w, k, stride, padding, oh, ow, dx.plane(n, 0));
        }
      }
    }
    if (weight->requires_grad) {
      // dW += dY (co x ohw) * patches (ohw x ckk), accumulated image by image.
      Tensor<T>& dw = grad_buffer(*weight);
      std::vector<T> rows(static_cast<size_t>(ohw * ckk));
      for (int64_t n = 0; n < xs.n; ++n) {
        im2row(x->value.plane(n, 0), ci, xs.h, xs.w, k, stride, padding, oh, ow, rows.data());
        gemm_acc(dy + n * co * ohw, rows.data(), dw.data(), co, ohw, ckk);
      }
    }
    if (bias && bias->requires_grad) {
      Tensor<T>& db = grad_buffer(*bias);
      for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t o = 0; o < co; ++o) {
          const T* p = dy + (n * co + o) * ohw;
          T acc = T(0);
          for (int64_t i = 0; i < ohw; ++i) acc += p[i];
          db.data()[o] += acc;
        }
    }
  };
  return finish(tape, std::move(out), std::move(inputs), std::move(bp));
}

// -------------------------------------------------------- depthwise_conv2d

template <typename T>
Value<T> depthwise_conv2d(Tape<T>* tape, const Value<T>& x, const Value<T>& weight, const Value<T>& bias, int stride,
                          int padding) {
  check_conv_args(x, weight, bias, stride, padding, true, "depthwise_conv2d");
  const Shape xs = x->value.shape();
  const int64_t k = weight->value.shape().h;
  const int64_t oh = conv_out_extent(xs.h, k, stride, padding);
  const int64_t ow = conv_out_extent(xs.w, k, stride, padding);

  Tensor<T> out(Shape{xs.n, xs.c, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c) {
      const T* src = x->value.plane(n, c);
      const T* ker = weight->value.data() + c * k * k;
      const T bv = bias ? bias->value.data()[c] : T(0);
      T* dst = out.plane(n, c);
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          T acc = T(0);
          for (int64_t u = 0; u < k; ++u) {
            const int64_t iy = oy * stride - padding + u;
            if (iy < 0 || iy >= xs.h) continue;
            for (int64_t v = 0; v < k; ++v) {
              const int64_t ix = ox * stride - padding + v;
              if (ix >= 0 && ix < xs.w) acc += src[iy * xs.w + ix] * ker[u * k + v];
            }
          }
          dst[oy * ow + ox] = acc + bv;
        }
    }

  std::vector<Value<T>> inputs{x, weight};
  if (bias) inputs.push_back(bias);
  auto bp = [x, weight, bias, stride, padding, k, oh, ow, xs](Node<T>& self) {
    const T* dy = self.grad.data();
    const int64_t ohw = oh * ow;
    for (int64_t n = 0; n < xs.n; ++n)
      for (int64_t c = 0; c < xs.c; ++c) {
        const T* g = dy + (n * xs.c + c) * ohw;
        const T* src = x->value.plane(n, c);
        const T* ker = weight->value.data() + c * k * k;
        T* dxp = x->requires_grad ? grad_buffer(*x).plane(n, c) : nullptr;
        T* dwp = weight->requires_grad ? grad_buffer(*weight).data() + c * k * k : nullptr;
        for (int64_t oy = 0; oy < oh; ++oy)
          for (int64_t ox = 0; ox < ow; ++ox) {
            const T gv = g[oy * ow + ox];
            for (int64_t u = 0; u < k; ++u) {
              const int64_t iy = oy * stride - padding + u;
              if (iy < 0 || iy >= xs.h) continue;
              for (int64_t v = 0; v < k; ++v) {
                const int64_t ix = ox * stride - padding + v;
                if (ix < 0 || ix >= xs.w) continue;
                if (dxp) dxp[iy * xs.w + ix] += gv * ker[u * k + v];
                if (dwp) dwp[u * k + v] += gv * src[iy * xs.w + ix];
              }
            }
          }
        if (bias && bias->requires_grad) {
          T acc = T(0);
          for (int64_t i = 0; i < ohw; ++i) acc += g[i];
          grad_buffer(*bias).data()[c] += acc;
        }
      }
  };
  return finish(tape, std::move(out), std::move(inputs), std::move(bp));
}

// --------------------------------------------------------- bilinear_resize

template <typename T>
Value<T> bilinear_resize(Tape<T>* tape, const Value<T>& x, ResizeScale scale) {
  const Shape xs = x->value.shape();
  const double f = (scale == ResizeScale::Half) ? 0.5 : 2.0;
  const int64_t oh = std::max<int64_t>(1, std::llround(static_cast<double>(xs.h) * f));
  const int64_t ow = std::max<int64_t>(1, std::llround(static_cast<double>(xs.w) * f));

  const ResizePlan<T> py = resize_plan<T>(xs.h, oh);
  const ResizePlan<T> px = resize_plan<T>(xs.w, ow);

  Tensor<T> out(Shape{xs.n, xs.c, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c) {
      const T* src = x->value.plane(n, c);
      T* dst = out.plane(n, c);
      for (int64_t oy = 0; oy < oh; ++oy) {
        const T* r0 = src + py.lo0[oy] * xs.w;
        const T* r1 = src + py.lo1[oy] * xs.w;
        const T ty = py.t[oy];
        for (int64_t ox = 0; ox < ow; ++ox) {
          const int64_t x0 = px.lo0[ox], x1 = px.lo1[ox];
          const T tx = px.t[ox];
          // lerp form: exact for equal neighbors, so constants survive
          // round trips bit-for-bit.
          const T a = r0[x0] + tx * (r0[x1] - r0[x0]);
          const T b = r1[x0] + tx * (r1[x1] - r1[x0]);
          dst[oy * ow + ox] = a + ty * (b - a);
        }
      }
    }

  auto bp = [x, xs, oh, ow, py, px](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    const T* dy = self.grad.data();
    for (int64_t n = 0; n < xs.n; ++n)
      for (int64_t c = 0; c < xs.c; ++c) {
        T* dst = dx.plane(n, c);
        const T* g = dy + (n * xs.c + c) * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t y0 = py.lo0[oy], y1 = py.lo1[oy];
          const T ty = py.t[oy];
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t x0 = px.lo0[ox], x1 = px.lo1[ox];
            const T tx = px.t[ox];
            const T gv = g[oy * ow + ox];
            dst[y0 * xs.w + x0] += gv * (T(1) - ty) * (T(1) - tx);
            dst[y0 * xs.w + x1] += gv * (T(1) - ty) * tx;
            dst[y1 * xs.w + x0] += gv * ty * (T(1) - tx);
            dst[y1 * xs.w + x1] += gv * ty * tx;
          }
        }
      }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

// ------------------------------------------------------------------- pools

template <typename T>
Value<T> global_pool(Tape<T>* tape, const Value<T>& x, PoolMode mode) {
  const Shape xs = x->value.shape();
  const int64_t hw = xs.h * xs.w;
  Tensor<T> out(Shape{xs.n, xs.c, 1, 1});
  std::vector<int64_t> argmax;
  if (mode == PoolMode::Max) argmax.resize(static_cast<size_t>(xs.n * xs.c));
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c) {
      const T* p = x->value.plane(n, c);
      if (mode == PoolMode::Avg) {
        T acc = T(0);
        for (int64_t i = 0; i < hw; ++i) acc += p[i];
        out.at(n, c, 0, 0) = acc / static_cast<T>(hw);
      } else {
        int64_t best = 0;
        for (int64_t i = 1; i < hw; ++i)
          if (p[i] > p[best]) best = i;  // first maximum wins ties
        argmax[static_cast<size_t>(n * xs.c + c)] = best;
        out.at(n, c, 0, 0) = p[best];
      }
    }

  auto bp = [x, xs, hw, mode, argmax](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    for (int64_t n = 0; n < xs.n; ++n)
      for (int64_t c = 0; c < xs.c; ++c) {
        const T g = self.grad.at(n, c, 0, 0);
        T* p = dx.plane(n, c);
        if (mode == PoolMode::Avg) {
          const T share = g / static_cast<T>(hw);
          for (int64_t i = 0; i < hw; ++i) p[i] += share;
        } else {
          p[argmax[static_cast<size_t>(n * xs.c + c)]] += g;
        }
      }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

template <typename T>
Value<T> channel_pool(Tape<T>* tape, const Value<T>& x, PoolMode mode) {
  const Shape xs = x->value.shape();
  const int64_t hw = xs.h * xs.w;
  Tensor<T> out(Shape{xs.n, 1, xs.h, xs.w});
  std::vector<int64_t> argmax;
  if (mode == PoolMode::Max) argmax.resize(static_cast<size_t>(xs.n * hw));
  for (int64_t n = 0; n < xs.n; ++n) {
    const T* base = x->value.plane(n, 0);
    T* dst = out.plane(n, 0);
    for (int64_t i = 0; i < hw; ++i) {
      if (mode == PoolMode::Avg) {
        T acc = T(0);
        for (int64_t c = 0; c < xs.c; ++c) acc += base[c * hw + i];
        dst[i] = acc / static_cast<T>(xs.c);
      } else {
        int64_t best = 0;
        for (int64_t c = 1; c < xs.c; ++c)
          if (base[c * hw + i] > base[best * hw + i]) best = c;
        argmax[static_cast<size_t>(n * hw + i)] = best;
        dst[i] = base[best * hw + i];
      }
    }
  }

  auto bp = [x, xs, hw, mode, argmax](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    for (int64_t n = 0; n < xs.n; ++n) {
      const T* g = self.grad.plane(n, 0);
      T* base = dx.plane(n, 0);
      for (int64_t i = 0; i < hw; ++i) {
        if (mode == PoolMode::Avg) {
          const T share = g[i] / static_cast<T>(xs.c);
          for (int64_t c = 0; c < xs.c; ++c) base[c * hw + i] += share;
        } else {
          base[argmax[static_cast<size_t>(n * hw + i)] * hw + i] += g[i];
        }
      }
    }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

// -------------------------------------------------------------- broadcasts

template <typename T>
Value<T> broadcast_hw(Tape<T>* tape, const Value<T>& x, int64_t n, int64_t h, int64_t w) {
  const Shape xs = x->value.shape();
  check(xs.h == 1 && xs.w == 1, ErrorCode::ShapeMismatch,
        "broadcast_hw: input spatial extent must be 1x1, got " + xs.str());
  check(xs.n == n || xs.n == 1, ErrorCode::ShapeMismatch,
        "broadcast_hw: input batch " + std::to_string(xs.n) + " must be 1 or " + std::to_string(n));
  const int64_t hw = h * w;
  Tensor<T> out(Shape{n, xs.c, h, w});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t c = 0; c < xs.c; ++c) {
      const T v = x->value.at(xs.n == 1 ? 0 : i, c, 0, 0);
      T* dst = out.plane(i, c);
      for (int64_t j = 0; j < hw; ++j) dst[j] = v;
    }

  auto bp = [x, xs, n, hw](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t c = 0; c < xs.c; ++c) {
        const T* g = self.grad.plane(i, c);
        T acc = T(0);
        for (int64_t j = 0; j < hw; ++j) acc += g[j];
        dx.at(xs.n == 1 ? 0 : i, c, 0, 0) += acc;
      }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

template <typename T>
Value<T> broadcast_c(Tape<T>* tape, const Value<T>& x, int64_t c) {
  const Shape xs = x->value.shape();
  check(xs.c == 1, ErrorCode::ShapeMismatch, "broadcast_c: input channel extent must be 1, got " + xs.str());
  const int64_t hw = xs.h * xs.w;
  Tensor<T> out(Shape{xs.n, c, xs.h, xs.w});
  for (int64_t n = 0; n < xs.n; ++n) {
    const T* src = x->value.plane(n, 0);
    for (int64_t ci = 0; ci < c; ++ci) std::memcpy(out.plane(n, ci), src, sizeof(T) * static_cast<size_t>(hw));
  }

  auto bp = [x, xs, c, hw](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    for (int64_t n = 0; n < xs.n; ++n) {
      T* dst = dx.plane(n, 0);
      for (int64_t ci = 0; ci < c; ++ci) {
        const T* g = self.grad.plane(n, ci);
        for (int64_t j = 0; j < hw; ++j) dst[j] += g[j];
      }
    }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

// ------------------------------------------------------------- activations

template <typename T>
Value<T> activation(Tape<T>* tape, const Value<T>& x, Act kind) {
  const int64_t sz = x->value.size();
  Tensor<T> out(x->value.shape());
  const T* in = x->value.data();
  T* o = out.data();
  switch (kind) {
    case Act::Relu:
      for (int64_t i = 0; i < sz; ++i) o[i] = in[i] > T(0) ? in[i] : T(0);
      break;
    case Act::Relu6:
      for (int64_t i = 0; i < sz; ++i) o[i] = std::min(std::max(in[i], T(0)), T(6));
      break;
    case Act::Sigmoid:
      for (int64_t i = 0; i < sz; ++i) {
        // split form avoids overflow in exp for large |x|
        if (in[i] >= T(0)) {
          o[i] = T(1) / (T(1) + std::exp(-in[i]));
        } else {
          const T e = std::exp(in[i]);
          o[i] = e / (T(1) + e);
        }
      }
      break;
    case Act::Tanh:
      for (int64_t i = 0; i < sz; ++i) o[i] = std::tanh(in[i]);
      break;
  }

  auto bp = [x, kind, sz](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    const T* g = self.grad.data();
    const T* in = x->value.data();
    const T* y = self.value.data();
    T* d = dx.data();
    switch (kind) {
      case Act::Relu:
        for (int64_t i = 0; i < sz; ++i) d[i] += in[i] > T(0) ? g[i] : T(0);
        break;
      case Act::Relu6:
        for (int64_t i = 0; i < sz; ++i) d[i] += (in[i] > T(0) && in[i] < T(6)) ? g[i] : T(0);
        break;
      case Act::Sigmoid:
        for (int64_t i = 0; i < sz; ++i) d[i] += g[i] * y[i] * (T(1) - y[i]);
        break;
      case Act::Tanh:
        for (int64_t i = 0; i < sz; ++i) d[i] += g[i] * (T(1) - y[i] * y[i]);
        break;
    }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

template <typename T>
Value<T> abs_val(Tape<T>* tape, const Value<T>& x) {
  const int64_t sz = x->value.size();
  Tensor<T> out(x->value.shape());
  const T* in = x->value.data();
  T* o = out.data();
  for (int64_t i = 0; i < sz; ++i) o[i] = std::abs(in[i]);

  auto bp = [x, sz](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    const T* g = self.grad.data();
    const T* in = x->value.data();
    T* d = dx.data();
    for (int64_t i = 0; i < sz; ++i) {
      // subgradient 0 at the kink
      if (in[i] > T(0))
        d[i] += g[i];
      else if (in[i] < T(0))
        d[i] -= g[i];
    }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

// ------------------------------------------------------------- elementwise

template <typename T>
Value<T> add(Tape<T>* tape, const Value<T>& a, const Value<T>& b) {
  require_same_shape(a, b, "add");
  const int64_t sz = a->value.size();
  Tensor<T> out(a->value.shape());
  const T* pa = a->value.data();
  const T* pb = b->value.data();
  T* o = out.data();
  for (int64_t i = 0; i < sz; ++i) o[i] = pa[i] + pb[i];
  auto bp = [a, b, sz](Node<T>& self) {
    const T* g = self.grad.data();
    if (a->requires_grad) {
      T* d = grad_buffer(*a).data();
      for (int64_t i = 0; i < sz; ++i) d[i] += g[i];
    }
    if (b->requires_grad) {
      T* d = grad_buffer(*b).data();
      for (int64_t i = 0; i < sz; ++i) d[i] += g[i];
    }
  };
  return finish(tape, std::move(out), {a, b}, std::move(bp));
}

template <typename T>
Value<T> sub(Tape<T>* tape, const Value<T>& a, const Value<T>& b) {
  require_same_shape(a, b, "sub");
  const int64_t sz = a->value.size();
  Tensor<T> out(a->value.shape());
  const T* pa = a->value.data();
  const T* pb = b->value.data();
  T* o = out.data();
  for (int64_t i = 0; i < sz; ++i) o[i] = pa[i] - pb[i];
  auto bp = [a, b, sz](Node<T>& self) {
    const T* g = self.grad.data();
    if (a->requires_grad) {
      T* d = grad_buffer(*a).data();
      for (int64_t i = 0; i < sz; ++i) d[i] += g[i];
    }
    if (b->requires_grad) {
      T* d = grad_buffer(*b).data();
      for (int64_t i = 0; i < sz; ++i) d[i] -= g[i];
    }
  };
  return finish(tape, std::move(out), {a, b}, std::move(bp));
}

template <typename T>
Value<T> mul(Tape<T>* tape, const Value<T>& a, const Value<T>& b) {
  require_same_shape(a, b, "mul");
  const int64_t sz = a->value.size();
  Tensor<T> out(a->value.shape());
  const T* pa = a->value.data();
  const T* pb = b->value.data();
  T* o = out.data();
  for (int64_t i = 0; i < sz; ++i) o[i] = pa[i] * pb[i];
  auto bp = [a, b, sz](Node<T>& self) {
    const T* g = self.grad.data();
    if (a->requires_grad) {
      T* d = grad_buffer(*a).data();
      const T* pb = b->value.data();
      for (int64_t i = 0; i < sz; ++i) d[i] += g[i] * pb[i];
    }
    if (b->requires_grad) {
      T* d = grad_buffer(*b).data();
      const T* pa = a->value.data();
      for (int64_t i = 0; i < sz; ++i) d[i] += g[i] * pa[i];
    }
  };
  return finish(tape, std::move(out), {a, b}, std::move(bp));
}

template <typename T>
Value<T> div(Tape<T>* tape, const Value<T>& a, const Value<T>& b) {
  require_same_shape(a, b, "div");
  const int64_t sz = a->value.size();
  Tensor<T> out(a->value.shape());
  const T* pa = a->value.data();
  const T* pb = b->value.data();
  T* o = out.data();
  for (int64_t i = 0; i < sz; ++i) o[i] = pa[i] / pb[i];
  auto bp = [a, b, sz](Node<T>& self) {
    const T* g = self.grad.data();
    const T* pb = b->value.data();
    const T* y = self.value.data();
    if (a->requires_grad) {
      T* d = grad_buffer(*a).data();
      for (int64_t i = 0; i < sz; ++i) d[i] += g[i] / pb[i];
    }
    if (b->requires_grad) {
      T* d = grad_buffer(*b).data();
      for (int64_t i = 0; i < sz; ++i) d[i] -= g[i] * y[i] / pb[i];
    }
  };
  return finish(tape, std::move(out), {a, b}, std::move(bp));
}

template <typename T>
Value<T> add_scalar(Tape<T>* tape, const Value<T>& x, T s) {
  const int64_t sz = x->value.size();
  Tensor<T> out(x->value.shape());
  const T* in = x->value.data();
  T* o = out.data();
  for (int64_t i = 0; i < sz; ++i) o[i] = in[i] + s;
  auto bp = [x, sz](Node<T>& self) {
    if (!x->requires_grad) return;
    T* d = grad_buffer(*x).data();
    const T* g = self.grad.data();
    for (int64_t i = 0; i < sz; ++i) d[i] += g[i];
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

template <typename T>
Value<T> mul_scalar(Tape<T>* tape, const Value<T>& x, T s) {
  const int64_t sz = x->value.size();
  Tensor<T> out(x->value.shape());
  const T* in = x->value.data();
  T* o = out.data();
  for (int64_t i = 0; i < sz; ++i) o[i] = in[i] * s;
  auto bp = [x, s, sz](Node<T>& self) {
    if (!x->requires_grad) return;
    T* d = grad_buffer(*x).data();
    const T* g = self.grad.data();
    for (int64_t i = 0; i < sz; ++i) d[i] += g[i] * s;
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

// ---------------------------------------------------------------- movement

template <typename T>
Value<T> concat_channels(Tape<T>* tape, const std::vector<Value<T>>& xs) {
  check(!xs.empty(), ErrorCode::InvalidArgument, "concat_channels: need at least one input");
  const Shape s0 = xs[0]->value.shape();
  int64_t ctotal = 0;
  for (const auto& v : xs) {
    const Shape s = v->value.shape();
    check(s.n == s0.n && s.h == s0.h && s.w == s0.w, ErrorCode::ShapeMismatch,
          "concat_channels: input shape " + s.str() + " does not match " + s0.str() + " outside the channel dim");
    ctotal += s.c;
  }
  const int64_t hw = s0.h * s0.w;
  Tensor<T> out(Shape{s0.n, ctotal, s0.h, s0.w});
  for (int64_t n = 0; n < s0.n; ++n) {
    int64_t coff = 0;
    for (const auto& v : xs) {
      const int64_t ci = v->value.shape().c;
      std::memcpy(out.plane(n, coff), v->value.plane(n, 0), sizeof(T) * static_cast<size_t>(ci * hw));
      coff += ci;
    }
  }

  auto bp = [xs, s0, hw](Node<T>& self) {
    for (int64_t n = 0; n < s0.n; ++n) {
      int64_t coff = 0;
      for (const auto& v : xs) {
        const int64_t ci = v->value.shape().c;
        if (v->requires_grad) {
          T* d = grad_buffer(*v).plane(n, 0);
          const T* g = self.grad.plane(n, coff);
          for (int64_t i = 0; i < ci * hw; ++i) d[i] += g[i];
        }
        coff += ci;
      }
    }
  };
  return finish(tape, std::move(out), xs, std::move(bp));
}

template <typename T>
Value<T> slice_spatial(Tape<T>* tape, const Value<T>& x, int64_t y0, int64_t x0, int64_t h, int64_t w) {
  const Shape xs = x->value.shape();
  check(h >= 1 && w >= 1, ErrorCode::InvalidArgument, "slice_spatial: extent must be >= 1");
  check(y0 >= 0 && x0 >= 0 && y0 + h <= xs.h && x0 + w <= xs.w, ErrorCode::ShapeMismatch,
        "slice_spatial: window [" + std::to_string(y0) + "," + std::to_string(y0 + h) + ")x[" + std::to_string(x0) +
            "," + std::to_string(x0 + w) + ") exceeds input " + xs.str());
  Tensor<T> out(Shape{xs.n, xs.c, h, w});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c) {
      const T* src = x->value.plane(n, c);
      T* dst = out.plane(n, c);
      for (int64_t y = 0; y < h; ++y)
        std::memcpy(dst + y * w, src + (y0 + y) * xs.w + x0, sizeof(T) * static_cast<size_t>(w));
    }

  auto bp = [x, xs, y0, x0, h, w](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    for (int64_t n = 0; n < xs.n; ++n)
      for (int64_t c = 0; c < xs.c; ++c) {
        T* dst = dx.plane(n, c);
        const T* g = self.grad.plane(n, c);
        for (int64_t y = 0; y < h; ++y)
          for (int64_t xw = 0; xw < w; ++xw) dst[(y0 + y) * xs.w + x0 + xw] += g[y * w + xw];
      }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

namespace {

// Source row/column for a padded output index; reflection excludes the edge
// sample (so pad < extent is required).
inline int64_t pad_src_index(int64_t o, int64_t before, int64_t extent, PadMode mode) {
  int64_t i = o - before;
  if (mode == PadMode::Zero) return (i >= 0 && i < extent) ? i : -1;
  if (i < 0) i = -i;
  if (i >= extent) i = 2 * extent - 2 - i;
  return i;
}

}  // namespace

template <typename T>
Value<T> pad_spatial(Tape<T>* tape, const Value<T>& x, int64_t top, int64_t bottom, int64_t left, int64_t right,
                     PadMode mode) {
  const Shape xs = x->value.shape();
  check(top >= 0 && bottom >= 0 && left >= 0 && right >= 0, ErrorCode::InvalidArgument,
        "pad_spatial: pad amounts must be >= 0");
  if (mode == PadMode::Reflect)
    check(top < xs.h && bottom < xs.h && left < xs.w && right < xs.w, ErrorCode::InvalidArgument,
          "pad_spatial: reflect pad must be smaller than the input extent " + xs.str());
  const int64_t oh = xs.h + top + bottom, ow = xs.w + left + right;
  Tensor<T> out(Shape{xs.n, xs.c, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c) {
      const T* src = x->value.plane(n, c);
      T* dst = out.plane(n, c);
      for (int64_t oy = 0; oy < oh; ++oy) {
        const int64_t iy = pad_src_index(oy, top, xs.h, mode);
        for (int64_t ox = 0; ox < ow; ++ox) {
          const int64_t ix = pad_src_index(ox, left, xs.w, mode);
          dst[oy * ow + ox] = (iy >= 0 && ix >= 0) ? src[iy * xs.w + ix] : T(0);
        }
      }
    }

  auto bp = [x, xs, top, left, oh, ow, mode](Node<T>& self) {
    if (!x->requires_grad) return;
    Tensor<T>& dx = grad_buffer(*x);
    for (int64_t n = 0; n < xs.n; ++n)
      for (int64_t c = 0; c < xs.c; ++c) {
        T* dst = dx.plane(n, c);
        const T* g = self.grad.plane(n, c);
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = pad_src_index(oy, top, xs.h, mode);
          if (iy < 0) continue;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = pad_src_index(ox, left, xs.w, mode);
            if (ix >= 0) dst[iy * xs.w + ix] += g[oy * ow + ox];
          }
        }
      }
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

template <typename T>
Value<T> reduce(Tape<T>* tape, const Value<T>& x, ReduceMode mode) {
  const int64_t sz = x->value.size();
  const T* in = x->value.data();
  T acc = T(0);
  for (int64_t i = 0; i < sz; ++i) acc += in[i];
  if (mode == ReduceMode::Mean) acc /= static_cast<T>(sz);
  Tensor<T> out = Tensor<T>::full(Shape{1, 1, 1, 1}, acc);

  auto bp = [x, sz, mode](Node<T>& self) {
    if (!x->requires_grad) return;
    const T g = self.grad.data()[0];
    const T share = (mode == ReduceMode::Mean) ? g / static_cast<T>(sz) : g;
    T* d = grad_buffer(*x).data();
    for (int64_t i = 0; i < sz; ++i) d[i] += share;
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

template <typename T>
Value<T> clamp(Tape<T>* tape, const Value<T>& x, T lo, T hi) {
  check(lo <= hi, ErrorCode::InvalidArgument, "clamp: lower bound must not exceed upper bound");
  const int64_t sz = x->value.size();
  Tensor<T> out(x->value.shape());
  const T* in = x->value.data();
  T* o = out.data();
  for (int64_t i = 0; i < sz; ++i) o[i] = std::min(std::max(in[i], lo), hi);

  auto bp = [x, lo, hi, sz](Node<T>& self) {
    if (!x->requires_grad) return;
    T* d = grad_buffer(*x).data();
    const T* g = self.grad.data();
    const T* in = x->value.data();
    for (int64_t i = 0; i < sz; ++i)
      if (in[i] >= lo && in[i] <= hi) d[i] += g[i];
  };
  return finish(tape, std::move(out), {x}, std::move(bp));
}

// ------------------------------------------------------ batch normalization

template <typename T>
Value<T> batch_norm_train(Tape<T>* tape, const Value<T>& x, const Value<T>& gamma, const Value<T>& beta, T eps,
                          Tensor<T>* out_mean, Tensor<T>* out_var) {
  const Shape xs = x->value.shape();
  const Shape want{1, xs.c, 1, 1};
  check(gamma->value.shape() == want && beta->value.shape() == want, ErrorCode::ShapeMismatch,
        "batch_norm: gamma/beta must have shape " + want.str());
  const int64_t hw = xs.h * xs.w;
  const int64_t m = xs.n * hw;
  check(m >= 1, ErrorCode::ShapeMismatch, "batch_norm: empty normalization extent");

  std::vector<T> mean(static_cast<size_t>(xs.c)), invstd(static_cast<size_t>(xs.c)), var(static_cast<size_t>(xs.c));
  for (int64_t c = 0; c < xs.c; ++c) {
    T acc = T(0);
    for (int64_t n = 0; n < xs.n; ++n) {
      const T* p = x->value.plane(n, c);
      for (int64_t i = 0; i < hw; ++i) acc += p[i];
    }
    const T mu = acc / static_cast<T>(m);
    T vacc = T(0);
    for (int64_t n = 0; n < xs.n; ++n) {
      const T* p = x->value.plane(n, c);
      for (int64_t i = 0; i < hw; ++i) {
        const T d = p[i] - mu;
        vacc += d * d;
      }
    }
    const T v = vacc / static_cast<T>(m);  // biased variance
    mean[static_cast<size_t>(c)] = mu;
    var[static_cast<size_t>(c)] = v;
    invstd[static_cast<size_t>(c)] = T(1) / std::sqrt(v + eps);
  }

  Tensor<T> out(xs);
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c) {
      const T mu = mean[static_cast<size_t>(c)], is = invstd[static_cast<size_t>(c)];
      const T ga = gamma->value.data()[c], be = beta->value.data()[c];
      const T* p = x->value.plane(n, c);
      T* o = out.plane(n, c);
      for (int64_t i = 0; i < hw; ++i) o[i] = ga * ((p[i] - mu) * is) + be;
    }

  if (out_mean) {
    *out_mean = Tensor<T>(want);
    std::copy(mean.begin(), mean.end(), out_mean->data());
  }
  if (out_var) {
    *out_var = Tensor<T>(want);
    std::copy(var.begin(), var.end(), out_var->data());
  }

  auto bp = [x, gamma, beta, xs, hw, m, mean, invstd](Node<T>& self) {
    for (int64_t c = 0; c < xs.c; ++c) {
      const T mu = mean[static_cast<size_t>(c)], is = invstd[static_cast<size_t>(c)];
      // s1 = sum(dy), s2 = sum(dy * xhat) over the channel
      T s1 = T(0), s2 = T(0);
      for (int64_t n = 0; n < xs.n; ++n) {
        const T* g = self.grad.plane(n, c);
        const T* p = x->value.plane(n, c);
        for (int64_t i = 0; i < hw; ++i) {
          s1 += g[i];
          s2 += g[i] * ((p[i] - mu) * is);
        }
      }
      if (beta->requires_grad) grad_buffer(*beta).data()[c] += s1;
      if (gamma->requires_grad) grad_buffer(*gamma).data()[c] += s2;
      if (x->requires_grad) {
        const T ga = gamma->value.data()[c];
        const T k1 = s1 / static_cast<T>(m), k2 = s2 / static_cast<T>(m);
        Tensor<T>& dx = grad_buffer(*x);
        for (int64_t n = 0; n < xs.n; ++n) {
          const T* g = self.grad.plane(n, c);
          const T* p = x->value.plane(n, c);
          T* d = dx.plane(n, c);
          for (int64_t i = 0; i < hw; ++i) {
            const T xhat = (p[i] - mu) * is;
            d[i] += ga * is * (g[i] - k1 - xhat * k2);
          }
        }
      }
    }
  };
  return finish(tape, std::move(out), {x, gamma, beta}, std::move(bp));
}

template <typename T>
Value<T> batch_norm_eval(Tape<T>* tape, const Value<T>& x, const Value<T>& gamma, const Value<T>& beta,
                         const Tensor<T>& running_mean, const Tensor<T>& running_var, T eps) {
  const Shape xs = x->value.shape();
  const Shape want{1, xs.c, 1, 1};
  check(gamma->value.shape() == want && beta->value.shape() == want && running_mean.shape() == want &&
            running_var.shape() == want,
        ErrorCode::ShapeMismatch, "batch_norm: per-channel parameters must have shape " + want.str());
  const int64_t hw = xs.h * xs.w;
  std::vector<T> rinv(static_cast<size_t>(xs.c));
  for (int64_t c = 0; c < xs.c; ++c) rinv[static_cast<size_t>(c)] = T(1) / std::sqrt(running_var.data()[c] + eps);

  Tensor<T> out(xs);
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t c = 0; c < xs.c; ++c) {
      const T mu = running_mean.data()[c], is = rinv[static_cast<size_t>(c)];
      const T ga = gamma->value.data()[c], be = beta->value.data()[c];
      const T* p = x->value.plane(n, c);
      T* o = out.plane(n, c);
      for (int64_t i = 0; i < hw; ++i) o[i] = ga * ((p[i] - mu) * is) + be;
    }

  Tensor<T> rm = running_mean;
  auto bp = [x, gamma, beta, xs, hw, rm, rinv](Node<T>& self) {
    for (int64_t c = 0; c < xs.c; ++c) {
      const T mu = rm.data()[c], is = rinv[static_cast<size_t>(c)];
      const T ga = gamma->value.data()[c];
      T s1 = T(0), s2 = T(0);
      for (int64_t n = 0; n < xs.n; ++n) {
        const T* g = self.grad.plane(n, c);
        const T* p = x->value.plane(n, c);
        if (x->requires_grad) {
          T* d = grad_buffer(*x).plane(n, c);
          for (int64_t i = 0; i < hw; ++i) d[i] += g[i] * ga * is;
        }
        for (int64_t i = 0; i < hw; ++i) {
          s1 += g[i];
          s2 += g[i] * ((p[i] - mu) * is);
        }
      }
      if (beta->requires_grad) grad_buffer(*beta).data()[c] += s1;
      if (gamma->requires_grad) grad_buffer(*gamma).data()[c] += s2;
    }
  };
  return finish(tape, std::move(out), {x, gamma, beta}, std::move(bp));
}

// ------------------------------------------------------- coordinate channels

template <typename T>
Value<T> coord_conv_augment(Tape<T>* tape, const Value<T>& x) {
  const Shape xs = x->value.shape();
  Tensor<T> coords(Shape{xs.n, 2, xs.h, xs.w});
  for (int64_t n = 0; n < xs.n; ++n) {
    T* cx = coords.plane(n, 0);
    T* cy = coords.plane(n, 1);
    for (int64_t y = 0; y < xs.h; ++y) {
      const T yv = xs.h > 1 ? T(-1) + T(2) * static_cast<T>(y) / static_cast<T>(xs.h - 1) : T(0);
      for (int64_t w = 0; w < xs.w; ++w) {
        const T xv = xs.w > 1 ? T(-1) + T(2) * static_cast<T>(w) / static_cast<T>(xs.w - 1) : T(0);
        cx[y * xs.w + w] = xv;
        cy[y * xs.w + w] = yv;
      }
    }
  }
  return concat_channels(tape, {x, constant(std::move(coords))});
}

// --------------------------------------------------- explicit instantiation

#define UDC_INSTANTIATE_OPS(T)                                                                                     \
  template Value<T> conv2d<T>(Tape<T>*, const Value<T>&, const Value<T>&, const Value<T>&, int, int);              \
  template Value<T> depthwise_conv2d<T>(Tape<T>*, const Value<T>&, const Value<T>&, const Value<T>&, int, int);    \
  template Value<T> bilinear_resize<T>(Tape<T>*, const Value<T>&, ResizeScale);                                    \
  template Value<T> global_pool<T>(Tape<T>*, const Value<T>&, PoolMode);                                           \
  template Value<T> channel_pool<T>(Tape<T>*, const Value<T>&, PoolMode);                                          \
  template Value<T> broadcast_hw<T>(Tape<T>*, const Value<T>&, int64_t, int64_t, int64_t);                         \
  template Value<T> broadcast_c<T>(Tape<T>*, const Value<T>&, int64_t);                                            \
  template Value<T> activation<T>(Tape<T>*, const Value<T>&, Act);                                                 \
  template Value<T> abs_val<T>(Tape<T>*, const Value<T>&);                                                         \
  template Value<T> add<T>(Tape<T>*, const Value<T>&, const Value<T>&);                                            \
  template Value<T> sub<T>(Tape<T>*, const Value<T>&, const Value<T>&);                                            \
  template Value<T> mul<T>(Tape<T>*, const Value<T>&, const Value<T>&);                                            \
  template Value<T> div<T>(Tape<T>*, const Value<T>&, const Value<T>&);                                            \
  template Value<T> add_scalar<T>(Tape<T>*, const Value<T>&, T);                                                   \
  template Value<T> mul_scalar<T>(Tape<T>*, const Value<T>&, T);                                                   \
  template Value<T> concat_channels<T>(Tape<T>*, const std::vector<Value<T>>&);                                    \
  template Value<T> slice_spatial<T>(Tape<T>*, const Value<T>&, int64_t, int64_t, int64_t, int64_t);               \
  template Value<T> pad_spatial<T>(Tape<T>*, const Value<T>&, int64_t, int64_t, int64_t, int64_t, PadMode);        \
  template Value<T> reduce<T>(Tape<T>*, const Value<T>&, ReduceMode);                                              \
  template Value<T> clamp<T>(Tape<T>*, const Value<T>&, T, T);                                                     \
  template Value<T> batch_norm_train<T>(Tape<T>*, const Value<T>&, const Value<T>&, const Value<T>&, T, Tensor<T>*, \
                                        Tensor<T>*);                                                               \
  template Value<T> batch_norm_eval<T>(Tape<T>*, const Value<T>&, const Value<T>&, const Value<T>&,                \
                                       const Tensor<T>&, const Tensor<T>&, T);                                     \
  template Value<T> coord_conv_augment<T>(Tape<T>*, const Value<T>&);

UDC_INSTANTIATE_OPS(float)
UDC_INSTANTIATE_OPS(double)

#undef UDC_INSTANTIATE_OPS

}  // namespace udc
