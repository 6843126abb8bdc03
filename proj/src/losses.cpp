// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#include "udc/losses.hpp"

#include <cmath>
#include <limits>

namespace udc {

namespace {

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1 and replicated per
// channel as a depthwise kernel so local statistics come from one op.
template <typename T>
Value<T> ssim_window(int64_t channels) {
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  double g[kWin];
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  Tensor<T> w({channels, 1, kWin, kWin});
  for (int64_t c = 0; c < channels; ++c) {
    T* p = w.plane(c, 0);
    for (int y = 0; y < kWin; ++y)
      for (int x = 0; x < kWin; ++x) p[y * kWin + x] = static_cast<T>(g[y] * g[x] / (sum * sum));
  }
  return constant(std::move(w));
}

}  // namespace

template <typename T>
Value<T> l1_loss(Tape<T>* tape, const Value<T>& pred, const Value<T>& target) {
  return reduce(tape, abs_val(tape, sub(tape, pred, target)), ReduceMode::Mean);
}

template <typename T>
Value<T> ssim(Tape<T>* tape, const Value<T>& pred, const Value<T>& target) {
  const Shape s = pred->value.shape();
  check(s == target->value.shape(), ErrorCode::ShapeMismatch,
        "structural similarity needs matching shapes, got " + s.str() + " vs " + target->value.shape().str());
  check(s.h >= 11 && s.w >= 11, ErrorCode::ShapeMismatch,
        "structural similarity needs at least the 11x11 window, got " + s.str());
  const T c1 = T(1e-4);  // (0.01 * L)^2 with L = 1
  const T c2 = T(9e-4);  // (0.03 * L)^2

  auto win = ssim_window<T>(s.c);
  auto local_mean = [&](const Value<T>& v) { return depthwise_conv2d<T>(tape, v, win, nullptr, 1, 0); };

  auto mu_p = local_mean(pred);
  auto mu_t = local_mean(target);
  auto mu_pp = mul(tape, mu_p, mu_p);
  auto mu_tt = mul(tape, mu_t, mu_t);
  auto mu_pt = mul(tape, mu_p, mu_t);
  auto var_p = sub(tape, local_mean(mul(tape, pred, pred)), mu_pp);
  auto var_t = sub(tape, local_mean(mul(tape, target, target)), mu_tt);
  auto cov = sub(tape, local_mean(mul(tape, pred, target)), mu_pt);

  auto num = mul(tape, add_scalar(tape, mul_scalar(tape, mu_pt, T(2)), c1),
                 add_scalar(tape, mul_scalar(tape, cov, T(2)), c2));
  auto den = mul(tape, add_scalar(tape, add(tape, mu_pp, mu_tt), c1),
                 add_scalar(tape, add(tape, var_p, var_t), c2));
  return reduce(tape, div(tape, num, den), ReduceMode::Mean);
}

template <typename T>
Value<T> ssim_loss(Tape<T>* tape, const Value<T>& pred, const Value<T>& target) {
  return add_scalar(tape, mul_scalar(tape, ssim(tape, pred, target), T(-1)), T(1));
}

template <typename T>
Value<T> gradient_loss(Tape<T>* tape, const Value<T>& pred, const Value<T>& target) {
  const Shape s = pred->value.shape();
  check(s == target->value.shape(), ErrorCode::ShapeMismatch,
        "gradient loss needs matching shapes, got " + s.str() + " vs " + target->value.shape().str());
  check(s.h >= 2 && s.w >= 2, ErrorCode::ShapeMismatch,
        "gradient loss needs at least 2x2 images for forward differences, got " + s.str());

  auto dx = [&](const Value<T>& v) {
    return sub(tape, slice_spatial(tape, v, 0, 1, s.h, s.w - 1), slice_spatial(tape, v, 0, 0, s.h, s.w - 1));
  };
  auto dy = [&](const Value<T>& v) {
    return sub(tape, slice_spatial(tape, v, 1, 0, s.h - 1, s.w), slice_spatial(tape, v, 0, 0, s.h - 1, s.w));
  };
  auto gx = reduce(tape, abs_val(tape, sub(tape, dx(pred), dx(target))), ReduceMode::Mean);
  auto gy = reduce(tape, abs_val(tape, sub(tape, dy(pred), dy(target))), ReduceMode::Mean);
  return add(tape, gx, gy);
}

template <typename T>
LossBundle<T> combined_loss(Tape<T>* tape, const Value<T>& pred, const Value<T>& target) {
  LossBundle<T> b;
  b.l1 = l1_loss(tape, pred, target);
  b.ssim_loss = ssim_loss(tape, pred, target);
  b.grad_loss = gradient_loss(tape, pred, target);
  b.total = add(tape, add(tape, mul_scalar(tape, b.ssim_loss, T(0.1)), b.l1), b.grad_loss);
  return b;
}

template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& target, double peak) {
  check(pred.shape() == target.shape(), ErrorCode::ShapeMismatch,
        "psnr needs matching shapes, got " + pred.shape().str() + " vs " + target.shape().str());
  double mse = 0.0;
  for (int64_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.data()[i]) - static_cast<double>(target.data()[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(pred.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

#define UDC_INSTANTIATE_LOSSES(T)                                                  \
  template Value<T> l1_loss<T>(Tape<T>*, const Value<T>&, const Value<T>&);        \
  template Value<T> ssim<T>(Tape<T>*, const Value<T>&, const Value<T>&);           \
  template Value<T> ssim_loss<T>(Tape<T>*, const Value<T>&, const Value<T>&);      \
  template Value<T> gradient_loss<T>(Tape<T>*, const Value<T>&, const Value<T>&);  \
  template LossBundle<T> combined_loss<T>(Tape<T>*, const Value<T>&, const Value<T>&); \
  template double psnr<T>(const Tensor<T>&, const Tensor<T>&, double);

UDC_INSTANTIATE_LOSSES(float)
UDC_INSTANTIATE_LOSSES(double)

#undef UDC_INSTANTIATE_LOSSES

}  // namespace udc
