// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#include "udc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "udc/data.hpp"
#include "udc/losses.hpp"
#include "udc/ops.hpp"
#include "udc/rng.hpp"
#include "udc/tape.hpp"

namespace udc {

// -------------------------------------------------------------------- adam

template <typename T>
Adam<T>::Adam(ParamRegistry<T>& registry, AdamConfig cfg) : reg_(&registry), cfg_(cfg) {
  check(cfg_.beta1 > 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 > 0.0 && cfg_.beta2 < 1.0 && cfg_.eps > 0.0,
        ErrorCode::InvalidArgument, "optimizer decay rates must lie in (0,1) and eps must be positive");
  m_.reserve(reg_->params.size());
  v_.reserve(reg_->params.size());
  for (const auto& [name, p] : reg_->params) {
    m_.push_back(Tensor<T>::zeros(p->value.shape()));
    v_.push_back(Tensor<T>::zeros(p->value.shape()));
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  check(m_.size() == reg_->params.size(), ErrorCode::StateError,
        "optimizer state no longer mirrors the parameter registry");
  t_ += 1;
  const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (size_t i = 0; i < m_.size(); ++i) {
    Node<T>& p = *reg_->params[i].second;
    check(m_[i].shape() == p.value.shape(), ErrorCode::ShapeMismatch,
          reg_->params[i].first + ": optimizer state shape does not match the parameter");
    const bool has_grad = !p.grad.empty();
    T* w = p.value.data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    const T* g = has_grad ? p.grad.data() : nullptr;
    const int64_t n = p.value.size();
    for (int64_t j = 0; j < n; ++j) {
      const double gj = g ? static_cast<double>(g[j]) : 0.0;
      const double mj = cfg_.beta1 * static_cast<double>(m[j]) + (1.0 - cfg_.beta1) * gj;
      const double vj = cfg_.beta2 * static_cast<double>(v[j]) + (1.0 - cfg_.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      w[j] -= static_cast<T>(lr * (mj / bias1) / (std::sqrt(vj / bias2) + cfg_.eps));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

// -------------------------------------------------------------- scheduling

PlateauScheduler::PlateauScheduler(double lr_init, PlateauConfig cfg) : cfg_(cfg), lr_(lr_init) {
  check(cfg_.factor > 0.0 && cfg_.factor < 1.0, ErrorCode::InvalidArgument,
        "plateau factor must lie strictly between 0 and 1");
  check(cfg_.patience >= 1, ErrorCode::InvalidArgument, "plateau patience must be at least 1");
  check(cfg_.lr_min <= lr_init, ErrorCode::InvalidArgument,
        "minimum learning rate cannot exceed the initial rate");
}

double PlateauScheduler::observe(double monitored) {
  const bool improved = has_best_ && monitored < best_;
  if (!has_best_ || monitored < best_) {
    best_ = monitored;
    has_best_ = true;
  }
  bad_epochs_ = improved ? 0 : bad_epochs_ + 1;
  if (bad_epochs_ >= cfg_.patience) {
    lr_ = std::max(lr_ * cfg_.factor, cfg_.lr_min);
    bad_epochs_ = 0;
  }
  return lr_;
}

double plateau_schedule(const std::vector<double>& history, double current_lr, PlateauConfig cfg) {
  PlateauScheduler sched(current_lr, cfg);
  for (double m : history) sched.observe(m);
  return sched.lr();
}

// ------------------------------------------------------------------- log

namespace {

std::string format_row(const TrainLogRow& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%lld %.10e %.10e %.10e %.10e %.10e %.10e",
                static_cast<long long>(r.step), r.lr, r.l1, r.ssim_loss, r.grad_loss, r.total, r.psnr);
  return buf;
}

}  // namespace

std::string TrainLog::text() const {
  std::string out = "# train log v1\n# columns: step lr l1 ssim_loss grad_loss total psnr\n";
  size_t next_epoch = 0;
  // Epoch markers are emitted after the last row of their epoch; rows carry
  // ascending step ids so the interleave is reproducible from the data.
  for (size_t i = 0; i < rows.size(); ++i) {
    out += format_row(rows[i]);
    out += '\n';
    while (next_epoch < epoch_end_step.size() && epoch_end_step[next_epoch] == rows[i].step) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "# epoch %lld val_loss %.10e",
                    static_cast<long long>(epoch_val_loss[next_epoch].first),
                    epoch_val_loss[next_epoch].second);
      out += buf;
      out += '\n';
      ++next_epoch;
    }
  }
  return out;
}

// ----------------------------------------------------------- training loop

namespace {

void validate(const TrainConfig& cfg) {
  check(cfg.max_steps >= 1, ErrorCode::InvalidArgument, "max_steps must be at least 1");
  check(cfg.batch_size >= 1, ErrorCode::InvalidArgument, "batch_size must be at least 1");
  check(cfg.lr_min <= cfg.lr_init, ErrorCode::InvalidArgument,
        "minimum learning rate cannot exceed the initial rate");
  check(cfg.plateau_factor > 0.0 && cfg.plateau_factor < 1.0, ErrorCode::InvalidArgument,
        "plateau factor must lie strictly between 0 and 1");
  check(cfg.plateau_patience >= 1, ErrorCode::InvalidArgument, "plateau patience must be at least 1");
  check(cfg.checkpoint_every >= 0, ErrorCode::InvalidArgument, "checkpoint interval cannot be negative");
}

// Fisher-Yates with the run's generator; std::shuffle's draws are
// implementation-defined, which would break cross-platform determinism.
void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)))]);
}

// Paired geometric augmentation. Non-square samples only draw from the
// shape-preserving transforms so the batch stays stackable.
std::pair<Tensor<float>, Tensor<float>> draw_augment(const Tensor<float>& a, const Tensor<float>& b,
                                                     Rng& rng) {
  const Shape s = a.shape();
  if (s.h == s.w) return augment_pair(a, b, rng);
  static constexpr AugmentKind kFlat[4] = {AugmentKind::Identity, AugmentKind::HFlip,
                                           AugmentKind::VFlip, AugmentKind::Rot180};
  const AugmentKind kind = kFlat[rng.uniform_int(4)];
  return {apply_augment(a, kind), apply_augment(b, kind)};
}

Tensor<float> stack_batch(const std::vector<Tensor<float>>& samples) {
  const Shape s = samples[0].shape();
  Tensor<float> out({static_cast<int64_t>(samples.size()), s.c, s.h, s.w});
  const int64_t per = s.c * s.h * s.w;
  for (size_t i = 0; i < samples.size(); ++i)
    std::copy(samples[i].data(), samples[i].data() + per, out.data() + static_cast<int64_t>(i) * per);
  return out;
}

}  // namespace

TrainResult train(RestorationModel<float>& model, const std::vector<PairedSample>& pairs,
                  const TrainConfig& cfg) {
  validate(cfg);
  check(pairs.size() >= 2, ErrorCode::InvalidArgument,
        "training needs at least two pairs (one is held out for validation)");
  const Shape sample_shape = pairs[0].first.shape();
  check(sample_shape.n == 1 && sample_shape.c == 3, ErrorCode::ShapeMismatch,
        "training pairs must be single (1,3,h,w) images, got " + sample_shape.str());
  for (const auto& [degraded, target] : pairs) {
    check(degraded.shape() == sample_shape && target.shape() == sample_shape, ErrorCode::ShapeMismatch,
          "all training pairs must share one shape");
  }

  Rng rng(cfg.seed);

  // Seeded split: shuffle once, hold out the tail tenth (at least one pair).
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle_indices(order, rng);
  const size_t val_count =
      std::max<size_t>(1, static_cast<size_t>(std::llround(0.1 * static_cast<double>(pairs.size()))));
  std::vector<size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val_count));
  std::vector<size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(val_count), order.end());

  Adam<float> opt(model.registry());
  PlateauScheduler sched(cfg.lr_init, PlateauConfig{cfg.plateau_factor, cfg.plateau_patience, cfg.lr_min});
  double lr = cfg.lr_init;

  TrainResult res;
  int64_t step = 0, epoch = 0;
  double val_loss = 0.0;

  while (step < cfg.max_steps) {
    shuffle_indices(train_idx, rng);
    for (size_t at = 0; at < train_idx.size() && step < cfg.max_steps; at += static_cast<size_t>(cfg.batch_size)) {
      const size_t take = std::min<size_t>(static_cast<size_t>(cfg.batch_size), train_idx.size() - at);
      std::vector<Tensor<float>> xs, ys;
      xs.reserve(take);
      ys.reserve(take);
      for (size_t k = 0; k < take; ++k) {
        const auto& [degraded, target] = pairs[train_idx[at + k]];
        if (cfg.augment) {
          auto [ax, ay] = draw_augment(degraded, target, rng);
          xs.push_back(std::move(ax));
          ys.push_back(std::move(ay));
        } else {
          xs.push_back(degraded);
          ys.push_back(target);
        }
      }

      Tape<float> tape;
      Value<float> x = constant(stack_batch(xs));
      Value<float> y = constant(stack_batch(ys));
      Value<float> pred = model.forward(&tape, x, true);
      LossBundle<float> loss = combined_loss(&tape, pred, y);

      const double total = static_cast<double>(loss.total->value.at(0, 0, 0, 0));
      check(std::isfinite(total), ErrorCode::NumericFailure,
            "non-finite loss at step " + std::to_string(step));

      tape.backward(loss.total);
      opt.step(lr);

      res.log.rows.push_back({step, lr, static_cast<double>(loss.l1->value.at(0, 0, 0, 0)),
                              static_cast<double>(loss.ssim_loss->value.at(0, 0, 0, 0)),
                              static_cast<double>(loss.grad_loss->value.at(0, 0, 0, 0)), total,
                              psnr(pred->value, y->value)});
      ++step;
      if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && !cfg.checkpoint_prefix.empty())
        save_weights(model, cfg.checkpoint_prefix + std::to_string(step) + ".udcw");
    }

    // Per-epoch validation drives the plateau schedule; evaluation mode, no
    // recording, one sample at a time.
    double acc = 0.0;
    for (size_t i : val_idx) {
      Value<float> vx = constant(pairs[i].first);
      Value<float> vy = constant(pairs[i].second);
      Value<float> out = model.forward(nullptr, vx, false);
      acc += static_cast<double>(combined_loss<float>(nullptr, out, vy).total->value.at(0, 0, 0, 0));
    }
    val_loss = acc / static_cast<double>(val_idx.size());
    check(std::isfinite(val_loss), ErrorCode::NumericFailure,
          "non-finite validation loss after step " + std::to_string(step - 1));
    res.log.epoch_val_loss.emplace_back(epoch, val_loss);
    res.log.epoch_end_step.push_back(step - 1);
    lr = sched.observe(val_loss);
    ++epoch;
  }

  res.weights = snapshot_weights(model);
  res.final_val_loss = val_loss;
  return res;
}

}  // namespace udc
