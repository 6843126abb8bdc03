// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Architectural building blocks: convolution layers with named parameters,
// batch normalization with running statistics, the dense residual module,
// the CBAM attention block, inverted linear residual blocks, and the strided
// downsampling unit. Blocks own their parameters as graph leaves; a registry
// walk yields a stable, ordered naming for the optimizer and serialization.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "udc/ops.hpp"
#include "udc/rng.hpp"

namespace udc {

// Ordered view over a model's state. `params` are trainable leaves, `buffers`
// are persistent non-trainable tensors (running statistics). Order is the
// registration order, which is fixed by construction, so it doubles as the
// serialization order.
template <typename T>
struct ParamRegistry {
  std::vector<std::pair<std::string, Value<T>>> params;
  std::vector<std::pair<std::string, Tensor<T>*>> buffers;

  void add_param(std::string name, const Value<T>& p) { params.emplace_back(std::move(name), p); }
  void add_buffer(std::string name, Tensor<T>* b) { buffers.emplace_back(std::move(name), b); }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& [name, p] : params) n += p->value.size();
    return n;
  }
};

// Dense 2-D convolution layer. Weights start from a fan-in-scaled normal
// draw (He initialization), biases from zero.
template <typename T>
class Conv2d {
 public:
  Conv2d(int64_t cin, int64_t cout, int kernel, int stride, int pad, bool bias, Rng& rng);

  Value<T> forward(Tape<T>* tape, const Value<T>& x) const;
  void collect(const std::string& prefix, ParamRegistry<T>& reg);
  void zero_init();  // for residual heads that must start as the identity

  int64_t in_channels() const { return weight_->value.shape().c; }
  int64_t out_channels() const { return weight_->value.shape().n; }
  int kernel() const { return static_cast<int>(weight_->value.shape().h); }
  int stride() const { return stride_; }
  int pad() const { return pad_; }

 private:
  Value<T> weight_;
  Value<T> bias_;  // null when the layer is bias-free
  int stride_ = 1;
  int pad_ = 0;
};

// Per-channel 3x3 convolution used inside inverted residual blocks.
template <typename T>
class DepthwiseConv2d {
 public:
  DepthwiseConv2d(int64_t channels, int kernel, int stride, int pad, bool bias, Rng& rng);

  Value<T> forward(Tape<T>* tape, const Value<T>& x) const;
  void collect(const std::string& prefix, ParamRegistry<T>& reg);

 private:
  Value<T> weight_;
  Value<T> bias_;
  int stride_ = 1;
  int pad_ = 0;
};

// Per-channel normalization. Training mode normalizes by batch statistics
// (biased variance) and folds them into the running estimates; eval mode is
// a fixed affine map and performs no mutation, so concurrent inference is
// safe.
template <typename T>
class BatchNorm2d {
 public:
  explicit BatchNorm2d(int64_t channels);

  Value<T> forward(Tape<T>* tape, const Value<T>& x, bool training);
  void collect(const std::string& prefix, ParamRegistry<T>& reg);

  T momentum = T(0.1);
  T eps = T(1e-5);

 private:
  Value<T> gamma_;
  Value<T> beta_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
};

struct DrmConfig {
  int64_t in_channels = 0;
  int num_dense_layers = 4;
  int64_t growth = 16;
  bool use_batchnorm = true;
};

// Dense residual module: a chain of 3x3 convolutions where layer k sees the
// concatenation of the module input and every previous layer's output, a 1x1
// fusion back to the input width, and a local residual connection. Shape
// preserving by construction.
template <typename T>
class DenseResidualModule {
 public:
  DenseResidualModule(DrmConfig cfg, Rng& rng);

  Value<T> forward(Tape<T>* tape, const Value<T>& x, bool training);
  void collect(const std::string& prefix, ParamRegistry<T>& reg);
  void zero_init();  // zeroing the fusion layer makes the module the identity

  const DrmConfig& config() const { return cfg_; }

 private:
  DrmConfig cfg_;
  std::vector<Conv2d<T>> dense_;
  std::vector<BatchNorm2d<T>> norms_;
  std::vector<Conv2d<T>> fusion_;  // single element; indirection keeps init order tidy
};

struct CbamConfig {
  int64_t channels = 0;
  int64_t reduction = 8;
  int spatial_kernel = 7;
};

// Convolutional block attention: a channel gate built from global average
// and max descriptors pushed through a shared bottleneck MLP, then a spatial
// gate built from channelwise average/max maps through a wide convolution.
// Both gates are sigmoid-bounded, so the block is elementwise contractive.
template <typename T>
class Cbam {
 public:
  Cbam(CbamConfig cfg, Rng& rng);

  Value<T> forward(Tape<T>* tape, const Value<T>& x) const;
  void collect(const std::string& prefix, ParamRegistry<T>& reg);

 private:
  CbamConfig cfg_;
  Conv2d<T> fc1_;      // 1x1 squeeze, shared by both pooled descriptors
  Conv2d<T> fc2_;      // 1x1 excite
  Conv2d<T> spatial_;  // 2 -> 1 wide kernel
};

struct InvertedResidualConfig {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int expand_ratio = 2;
  int stride = 1;
};

// MobileNet-style inverted bottleneck: 1x1 expansion with relu6, depthwise
// 3x3 with relu6, linear 1x1 projection. The identity skip engages exactly
// when stride is 1 and the channel count is preserved.
template <typename T>
class InvertedResidual {
 public:
  InvertedResidual(InvertedResidualConfig cfg, Rng& rng);

  Value<T> forward(Tape<T>* tape, const Value<T>& x) const;
  void collect(const std::string& prefix, ParamRegistry<T>& reg);

  bool has_skip() const { return skip_; }

 private:
  InvertedResidualConfig cfg_;
  bool skip_ = false;
  Conv2d<T> expand_;
  DepthwiseConv2d<T> dw_;
  Conv2d<T> project_;
};

// Encoder transition: stride-2 3x3 convolution plus relu. Rejects odd
// spatial extents so the caller pads explicitly instead of silently
// truncating.
template <typename T>
class Downsample {
 public:
  Downsample(int64_t cin, int64_t cout, Rng& rng);

  Value<T> forward(Tape<T>* tape, const Value<T>& x) const;
  void collect(const std::string& prefix, ParamRegistry<T>& reg);

 private:
  Conv2d<T> conv_;
};

}  // namespace udc
