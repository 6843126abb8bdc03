// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Optimization: bias-corrected Adam over a model's parameter registry, a
// reduce-on-plateau learning-rate schedule, and the deterministic training
// loop (sample, augment, forward, composite loss, backward, update) with a
// line-oriented log.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "udc/blocks.hpp"
#include "udc/models.hpp"
#include "udc/tensor.hpp"

namespace udc {

// -------------------------------------------------------------------- adam

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second-moment state for every parameter in a registry, in registry
// order. step() consumes whatever gradients the preceding backward pass left
// on the parameter nodes; parameters the loss never touched read as zero
// gradient and stay put.
template <typename T>
class Adam {
 public:
  explicit Adam(ParamRegistry<T>& registry, AdamConfig cfg = {});

  void step(double lr);
  int64_t t() const { return t_; }

 private:
  ParamRegistry<T>* reg_;
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

// -------------------------------------------------------------- scheduling

struct PlateauConfig {
  double factor = 0.5;
  int patience = 5;
  double lr_min = 1e-6;
};

// Halves the learning rate after `patience` consecutive epochs without a
// strict improvement of the monitored value, never dropping below lr_min.
// The first observation has nothing to improve on, so it starts the
// no-improvement count.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr_init, PlateauConfig cfg);

  // Feed one epoch's monitored value; returns the learning rate to use next.
  double observe(double monitored);
  double lr() const { return lr_; }

 private:
  PlateauConfig cfg_;
  double lr_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_epochs_ = 0;
};

// Replays a whole history through a fresh scheduler seeded with current_lr.
double plateau_schedule(const std::vector<double>& history, double current_lr, PlateauConfig cfg);

// ----------------------------------------------------------- training loop

struct TrainConfig {
  double lr_init = 1e-3;
  double lr_min = 1e-6;
  double plateau_factor = 0.5;
  int plateau_patience = 5;
  int batch_size = 4;
  int64_t max_steps = 0;  // required: total optimization steps to run
  uint64_t seed = 0;
  bool augment = true;
  int64_t checkpoint_every = 0;      // 0: no intermediate checkpoints
  std::string checkpoint_prefix;     // "<prefix><step>.udcw" when enabled
};

struct TrainLogRow {
  int64_t step = 0;
  double lr = 0.0;
  double l1 = 0.0;
  double ssim_loss = 0.0;
  double grad_loss = 0.0;
  double total = 0.0;
  double psnr = 0.0;  // of the training batch
};

// Append-only structured log: '#' comment lines plus one row per step,
// columns "step lr l1 ssim_loss grad_loss total psnr". Deliberately carries
// no timestamps so identical runs serialize identically.
struct TrainLog {
  std::vector<TrainLogRow> rows;
  std::vector<std::pair<int64_t, double>> epoch_val_loss;  // (epoch, validation combined loss)
  std::vector<int64_t> epoch_end_step;                     // last step id of each epoch

  std::string text() const;
};

struct TrainResult {
  ModelWeights weights;
  TrainLog log;
  double final_val_loss = 0.0;
};

// Paired tone-mapped tensors: (degraded input, clean target), equal shapes.
using PairedSample = std::pair<Tensor<float>, Tensor<float>>;

// Runs the full loop: a seeded 10% split (at least one pair) is held out
// for validation, the rest is sampled into batches with paired geometric
// augmentation; every step forwards in training mode, applies the composite
// objective, backpropagates, and takes one Adam step. Validation after each
// epoch drives the plateau schedule. Aborts with NumericFailure naming the
// step if the loss leaves the finite range.
TrainResult train(RestorationModel<float>& model, const std::vector<PairedSample>& pairs,
                  const TrainConfig& cfg);

}  // namespace udc
