// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "udc/tape.hpp"

namespace udc {

enum class Act { Relu, Relu6, Sigmoid, Tanh };
enum class PoolMode { Avg, Max };
enum class ReduceMode { Mean, Sum };
enum class PadMode { Zero, Reflect };
enum class ResizeScale { Half, Double };

// Every operation computes its result eagerly. When `tape` is non-null and
// any input requires gradient, the result node is recorded together with a
// backward rule; otherwise the node is detached. Shapes must match exactly:
// there is no implicit broadcasting anywhere, broadcasts are explicit ops.

// dense cross-correlation, zero padding, square kernel, bias optional (may be
// null). weight layout (co, ci, kh, kw).
template <typename T>
Value<T> conv2d(Tape<T>* tape, const Value<T>& x, const Value<T>& weight, const Value<T>& bias, int stride,
                int padding);

// per-channel convolution, weight layout (c, 1, kh, kw).
template <typename T>
Value<T> depthwise_conv2d(Tape<T>* tape, const Value<T>& x, const Value<T>& weight, const Value<T>& bias,
                          int stride, int padding);

// half-pixel-center bilinear interpolation, scale restricted to {1/2, 2}.
template <typename T>
Value<T> bilinear_resize(Tape<T>* tape, const Value<T>& x, ResizeScale scale);

template <typename T>
Value<T> global_pool(Tape<T>* tape, const Value<T>& x, PoolMode mode);  // (n,c,h,w) -> (n,c,1,1)

template <typename T>
Value<T> channel_pool(Tape<T>* tape, const Value<T>& x, PoolMode mode);  // (n,c,h,w) -> (n,1,h,w)

// (n|1, c, 1, 1) -> (n, c, h, w); batch dim replicates when input n == 1.
template <typename T>
Value<T> broadcast_hw(Tape<T>* tape, const Value<T>& x, int64_t n, int64_t h, int64_t w);

template <typename T>
Value<T> broadcast_c(Tape<T>* tape, const Value<T>& x, int64_t c);  // (n,1,h,w) -> (n,c,h,w)

template <typename T>
Value<T> activation(Tape<T>* tape, const Value<T>& x, Act kind);

template <typename T>
Value<T> abs_val(Tape<T>* tape, const Value<T>& x);  // subgradient 0 at the origin

template <typename T>
Value<T> add(Tape<T>* tape, const Value<T>& a, const Value<T>& b);
template <typename T>
Value<T> sub(Tape<T>* tape, const Value<T>& a, const Value<T>& b);
template <typename T>
Value<T> mul(Tape<T>* tape, const Value<T>& a, const Value<T>& b);
template <typename T>
Value<T> div(Tape<T>* tape, const Value<T>& a, const Value<T>& b);

template <typename T>
Value<T> add_scalar(Tape<T>* tape, const Value<T>& x, T s);
template <typename T>
Value<T> mul_scalar(Tape<T>* tape, const Value<T>& x, T s);

template <typename T>
Value<T> concat_channels(Tape<T>* tape, const std::vector<Value<T>>& xs);

// crop of the spatial extent; backward scatters into the cropped region.
template <typename T>
Value<T> slice_spatial(Tape<T>* tape, const Value<T>& x, int64_t y0, int64_t x0, int64_t h, int64_t w);

template <typename T>
Value<T> pad_spatial(Tape<T>* tape, const Value<T>& x, int64_t top, int64_t bottom, int64_t left, int64_t right,
                     PadMode mode);

template <typename T>
Value<T> reduce(Tape<T>* tape, const Value<T>& x, ReduceMode mode);  // -> (1,1,1,1)

template <typename T>
Value<T> clamp(Tape<T>* tape, const Value<T>& x, T lo, T hi);

// Batch normalization over (n, h, w) per channel with batch statistics
// (biased variance). gamma/beta have shape (1, c, 1, 1). Batch mean and
// biased variance are written to out_mean/out_var (shape (1,c,1,1)) when
// non-null so the caller can maintain running statistics.
template <typename T>
Value<T> batch_norm_train(Tape<T>* tape, const Value<T>& x, const Value<T>& gamma, const Value<T>& beta, T eps,
                          Tensor<T>* out_mean, Tensor<T>* out_var);

// Normalization by fixed statistics (an affine map per channel).
template <typename T>
Value<T> batch_norm_eval(Tape<T>* tape, const Value<T>& x, const Value<T>& gamma, const Value<T>& beta,
                         const Tensor<T>& running_mean, const Tensor<T>& running_var, T eps);

// Appends two coordinate channels, each constant per row/column and running
// linearly from -1 (top/left) to +1 (bottom/right).
template <typename T>
Value<T> coord_conv_augment(Tape<T>* tape, const Value<T>& x);

}  // namespace udc
