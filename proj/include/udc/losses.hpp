// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Training objective and evaluation metrics: mean absolute error, Gaussian-
// windowed structural similarity, forward-difference gradient loss, their
// weighted sum, and peak signal-to-noise ratio.

#pragma once

#include "udc/ops.hpp"

namespace udc {

// The four scalars of one objective evaluation, kept as graph values so a
// single backward pass trains on `total` while the components remain
// readable for logging.
template <typename T>
struct LossBundle {
  Value<T> l1;
  Value<T> ssim_loss;
  Value<T> grad_loss;
  Value<T> total;
};

// Mean absolute difference over all elements.
template <typename T>
Value<T> l1_loss(Tape<T>* tape, const Value<T>& pred, const Value<T>& target);

// Mean structural similarity over an 11x11 Gaussian window (sigma 1.5),
// valid-region convolution, stabilizers C1=(0.01L)^2, C2=(0.03L)^2 with
// dynamic range L=1. Result lies in [-1, 1].
template <typename T>
Value<T> ssim(Tape<T>* tape, const Value<T>& pred, const Value<T>& target);

// 1 - ssim, in [0, 2].
template <typename T>
Value<T> ssim_loss(Tape<T>* tape, const Value<T>& pred, const Value<T>& target);

// Mean L1 distance between horizontal forward differences plus the same for
// vertical ones; the trailing column/row drops out. Invariant to constant
// offsets.
template <typename T>
Value<T> gradient_loss(Tape<T>* tape, const Value<T>& pred, const Value<T>& target);

// total = 0.1 * ssim_loss + l1 + grad_loss, composed in exactly that order.
template <typename T>
LossBundle<T> combined_loss(Tape<T>* tape, const Value<T>& pred, const Value<T>& target);

// Evaluation-only metric in dB; identical tensors yield +infinity.
template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& target, double peak = 1.0);

}  // namespace udc
