// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#include "udc/blocks.hpp"

#include <cmath>
#include <string>

namespace udc {

namespace {

template <typename T>
Value<T> he_normal(int64_t cin_per_group, int kernel, Shape shape, Rng& rng) {
  Tensor<T> w(shape);
  const double fan_in = static_cast<double>(cin_per_group) * kernel * kernel;
  const double stddev = std::sqrt(2.0 / fan_in);
  for (auto& v : w.vec()) v = static_cast<T>(rng.normal() * stddev);
  return leaf(std::move(w), true);
}

CbamConfig validated(CbamConfig cfg) {
  check(cfg.channels >= 1 && cfg.reduction >= 1 && cfg.channels % cfg.reduction == 0, ErrorCode::InvalidArgument,
        "attention channels must divide evenly by the reduction");
  check(cfg.spatial_kernel >= 3 && cfg.spatial_kernel % 2 == 1, ErrorCode::InvalidArgument,
        "spatial attention kernel must be odd and at least 3");
  return cfg;
}

InvertedResidualConfig validated(InvertedResidualConfig cfg) {
  check(cfg.in_channels >= 1 && cfg.out_channels >= 1, ErrorCode::InvalidArgument,
        "inverted residual needs positive channel counts");
  check(cfg.expand_ratio >= 1 && (cfg.stride == 1 || cfg.stride == 2), ErrorCode::InvalidArgument,
        "inverted residual needs expand_ratio >= 1 and stride in {1,2}");
  return cfg;
}

}  // namespace

// ------------------------------------------------------------------ Conv2d

template <typename T>
Conv2d<T>::Conv2d(int64_t cin, int64_t cout, int kernel, int stride, int pad, bool bias, Rng& rng)
    : stride_(stride), pad_(pad) {
  check(cin >= 1 && cout >= 1 && kernel >= 1, ErrorCode::InvalidArgument, "conv layer extents must be positive");
  weight_ = he_normal<T>(cin, kernel, Shape{cout, cin, kernel, kernel}, rng);
  if (bias) bias_ = leaf(Tensor<T>::zeros({1, cout, 1, 1}), true);
}

template <typename T>
Value<T> Conv2d<T>::forward(Tape<T>* tape, const Value<T>& x) const {
  return conv2d(tape, x, weight_, bias_, stride_, pad_);
}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, ParamRegistry<T>& reg) {
  reg.add_param(prefix + ".weight", weight_);
  if (bias_) reg.add_param(prefix + ".bias", bias_);
}

template <typename T>
void Conv2d<T>::zero_init() {
  weight_->value.fill(T(0));
  if (bias_) bias_->value.fill(T(0));
}

// --------------------------------------------------------- DepthwiseConv2d

template <typename T>
DepthwiseConv2d<T>::DepthwiseConv2d(int64_t channels, int kernel, int stride, int pad, bool bias, Rng& rng)
    : stride_(stride), pad_(pad) {
  weight_ = he_normal<T>(1, kernel, Shape{channels, 1, kernel, kernel}, rng);
  if (bias) bias_ = leaf(Tensor<T>::zeros({1, channels, 1, 1}), true);
}

template <typename T>
Value<T> DepthwiseConv2d<T>::forward(Tape<T>* tape, const Value<T>& x) const {
  return depthwise_conv2d(tape, x, weight_, bias_, stride_, pad_);
}

template <typename T>
void DepthwiseConv2d<T>::collect(const std::string& prefix, ParamRegistry<T>& reg) {
  reg.add_param(prefix + ".weight", weight_);
  if (bias_) reg.add_param(prefix + ".bias", bias_);
}

// ------------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int64_t channels) {
  gamma_ = leaf(Tensor<T>::ones({1, channels, 1, 1}), true);
  beta_ = leaf(Tensor<T>::zeros({1, channels, 1, 1}), true);
  running_mean_ = Tensor<T>::zeros({1, channels, 1, 1});
  running_var_ = Tensor<T>::ones({1, channels, 1, 1});
}

template <typename T>
Value<T> BatchNorm2d<T>::forward(Tape<T>* tape, const Value<T>& x, bool training) {
  if (!training) return batch_norm_eval(tape, x, gamma_, beta_, running_mean_, running_var_, eps);
  Tensor<T> mean, var;
  auto out = batch_norm_train(tape, x, gamma_, beta_, eps, &mean, &var);
  for (int64_t i = 0; i < running_mean_.size(); ++i) {
    running_mean_.data()[i] = (T(1) - momentum) * running_mean_.data()[i] + momentum * mean.data()[i];
    running_var_.data()[i] = (T(1) - momentum) * running_var_.data()[i] + momentum * var.data()[i];
  }
  return out;
}

template <typename T>
void BatchNorm2d<T>::collect(const std::string& prefix, ParamRegistry<T>& reg) {
  reg.add_param(prefix + ".gamma", gamma_);
  reg.add_param(prefix + ".beta", beta_);
  reg.add_buffer(prefix + ".running_mean", &running_mean_);
  reg.add_buffer(prefix + ".running_var", &running_var_);
}

// -------------------------------------------------------------------- DRM

template <typename T>
DenseResidualModule<T>::DenseResidualModule(DrmConfig cfg, Rng& rng) : cfg_(cfg) {
  check(cfg.in_channels >= 1 && cfg.num_dense_layers >= 1 && cfg.growth >= 1, ErrorCode::InvalidArgument,
        "dense residual module needs positive channels, layers, and growth");
  dense_.reserve(cfg.num_dense_layers);
  for (int i = 0; i < cfg.num_dense_layers; ++i) {
    const int64_t cin = cfg.in_channels + i * cfg.growth;
    // With normalization the conv bias is redundant (beta absorbs it).
    dense_.emplace_back(cin, cfg.growth, 3, 1, 1, !cfg.use_batchnorm, rng);
    if (cfg.use_batchnorm) norms_.emplace_back(cfg.growth);
  }
  const int64_t fused_in = cfg.in_channels + cfg.num_dense_layers * cfg.growth;
  fusion_.emplace_back(fused_in, cfg.in_channels, 1, 1, 0, true, rng);
}

template <typename T>
Value<T> DenseResidualModule<T>::forward(Tape<T>* tape, const Value<T>& x, bool training) {
  check(x->value.shape().c == cfg_.in_channels, ErrorCode::ShapeMismatch,
        "dense residual module expects " + std::to_string(cfg_.in_channels) + " input channels, got " +
            std::to_string(x->value.shape().c));
  std::vector<Value<T>> feats{x};
  for (size_t i = 0; i < dense_.size(); ++i) {
    auto in = feats.size() == 1 ? feats[0] : concat_channels(tape, feats);
    auto h = dense_[i].forward(tape, in);
    if (cfg_.use_batchnorm) h = norms_[i].forward(tape, h, training);
    feats.push_back(activation(tape, h, Act::Relu));
  }
  auto fused = fusion_[0].forward(tape, concat_channels(tape, feats));
  return add(tape, fused, x);
}

template <typename T>
void DenseResidualModule<T>::collect(const std::string& prefix, ParamRegistry<T>& reg) {
  for (size_t i = 0; i < dense_.size(); ++i) {
    dense_[i].collect(prefix + ".dense" + std::to_string(i), reg);
    if (cfg_.use_batchnorm) norms_[i].collect(prefix + ".norm" + std::to_string(i), reg);
  }
  fusion_[0].collect(prefix + ".fusion", reg);
}

template <typename T>
void DenseResidualModule<T>::zero_init() {
  fusion_[0].zero_init();
}

// ------------------------------------------------------------------- CBAM

template <typename T>
Cbam<T>::Cbam(CbamConfig cfg, Rng& rng)
    : cfg_(validated(cfg)),
      fc1_(cfg.channels, cfg.channels / cfg.reduction, 1, 1, 0, true, rng),
      fc2_(cfg.channels / cfg.reduction, cfg.channels, 1, 1, 0, true, rng),
      spatial_(2, 1, cfg.spatial_kernel, 1, cfg.spatial_kernel / 2, true, rng) {}

template <typename T>
Value<T> Cbam<T>::forward(Tape<T>* tape, const Value<T>& x) const {
  check(x->value.shape().c == cfg_.channels, ErrorCode::ShapeMismatch,
        "attention block expects " + std::to_string(cfg_.channels) + " channels, got " +
            std::to_string(x->value.shape().c));
  const Shape s = x->value.shape();

  auto squeeze = [&](const Value<T>& pooled) {
    return fc2_.forward(tape, activation(tape, fc1_.forward(tape, pooled), Act::Relu));
  };
  auto chan = activation(
      tape, add(tape, squeeze(global_pool(tape, x, PoolMode::Avg)), squeeze(global_pool(tape, x, PoolMode::Max))),
      Act::Sigmoid);
  auto gated = mul(tape, x, broadcast_hw(tape, chan, s.n, s.h, s.w));

  auto maps = concat_channels(
      tape, {channel_pool(tape, gated, PoolMode::Avg), channel_pool(tape, gated, PoolMode::Max)});
  auto spat = activation(tape, spatial_.forward(tape, maps), Act::Sigmoid);
  return mul(tape, gated, broadcast_c(tape, spat, s.c));
}

template <typename T>
void Cbam<T>::collect(const std::string& prefix, ParamRegistry<T>& reg) {
  fc1_.collect(prefix + ".ca.fc1", reg);
  fc2_.collect(prefix + ".ca.fc2", reg);
  spatial_.collect(prefix + ".sa.conv", reg);
}

// --------------------------------------------------------- InvertedResidual

template <typename T>
InvertedResidual<T>::InvertedResidual(InvertedResidualConfig cfg, Rng& rng)
    : cfg_(validated(cfg)),
      skip_(cfg.stride == 1 && cfg.in_channels == cfg.out_channels),
      expand_(cfg.in_channels, cfg.in_channels * cfg.expand_ratio, 1, 1, 0, true, rng),
      dw_(cfg.in_channels * cfg.expand_ratio, 3, cfg.stride, 1, true, rng),
      project_(cfg.in_channels * cfg.expand_ratio, cfg.out_channels, 1, 1, 0, true, rng) {}

template <typename T>
Value<T> InvertedResidual<T>::forward(Tape<T>* tape, const Value<T>& x) const {
  check(x->value.shape().c == cfg_.in_channels, ErrorCode::ShapeMismatch,
        "inverted residual expects " + std::to_string(cfg_.in_channels) + " channels, got " +
            std::to_string(x->value.shape().c));
  auto h = activation(tape, expand_.forward(tape, x), Act::Relu6);
  h = activation(tape, dw_.forward(tape, h), Act::Relu6);
  h = project_.forward(tape, h);  // linear bottleneck: no activation
  return skip_ ? add(tape, h, x) : h;
}

template <typename T>
void InvertedResidual<T>::collect(const std::string& prefix, ParamRegistry<T>& reg) {
  expand_.collect(prefix + ".expand", reg);
  dw_.collect(prefix + ".dw", reg);
  project_.collect(prefix + ".project", reg);
}

// -------------------------------------------------------------- Downsample

template <typename T>
Downsample<T>::Downsample(int64_t cin, int64_t cout, Rng& rng) : conv_(cin, cout, 3, 2, 1, true, rng) {}

template <typename T>
Value<T> Downsample<T>::forward(Tape<T>* tape, const Value<T>& x) const {
  const Shape s = x->value.shape();
  check(s.h % 2 == 0 && s.w % 2 == 0, ErrorCode::ShapeMismatch,
        "downsample requires even spatial extents, got " + s.str() + "; pad the input first");
  return activation(tape, conv_.forward(tape, x), Act::Relu);
}

template <typename T>
void Downsample<T>::collect(const std::string& prefix, ParamRegistry<T>& reg) {
  conv_.collect(prefix + ".conv", reg);
}

// --------------------------------------------------- explicit instantiation

#define UDC_INSTANTIATE_BLOCKS(T)   \
  template class Conv2d<T>;         \
  template class DepthwiseConv2d<T>; \
  template class BatchNorm2d<T>;    \
  template class DenseResidualModule<T>; \
  template class Cbam<T>;           \
  template class InvertedResidual<T>; \
  template class Downsample<T>;

UDC_INSTANTIATE_BLOCKS(float)
UDC_INSTANTIATE_BLOCKS(double)

#undef UDC_INSTANTIATE_BLOCKS

}  // namespace udc
