// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Optimizer, plateau schedule, and training-loop tests. The Adam update is
// checked against an independent scalar recurrence computed right here in
// the test; the loop is exercised on tiny synthetic restoration tasks.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "udc/data.hpp"
#include "udc/models.hpp"
#include "udc/rng.hpp"
#include "udc/tape.hpp"
#include "udc/trainer.hpp"

using namespace udc;

namespace {

struct ScratchDir {
  std::filesystem::path path;
  ScratchDir() {
    path = std::filesystem::temp_directory_path() /
           ("udc_trainer_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~ScratchDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

ModelSpec tiny_spec() {
  ModelSpec s = ModelSpec::drm_udcnet(false);
  s.base_channels = 8;
  s.stage_widths = {8, 12, 16};
  s.drm_dense_layers = 1;
  s.drm_growth = 4;
  return s;
}

// Four paired 16x16 samples where the input is a contrast-reduced, shifted
// copy of the target; the network has an actual correction to learn.
std::vector<PairedSample> tiny_dataset(uint64_t seed) {
  Rng rng(seed);
  std::vector<PairedSample> pairs;
  for (int i = 0; i < 4; ++i) {
    Tensor<float> target({1, 3, 16, 16});
    for (auto& v : target.vec()) v = static_cast<float>(0.15 + 0.7 * rng.uniform());
    Tensor<float> degraded = target;
    for (auto& v : degraded.vec()) v = 0.5f * v + 0.2f;
    pairs.emplace_back(std::move(degraded), std::move(target));
  }
  return pairs;
}

bool weights_equal(const ModelWeights& a, const ModelWeights& b) {
  if (a.records.size() != b.records.size()) return false;
  for (size_t i = 0; i < a.records.size(); ++i) {
    if (a.records[i].path != b.records[i].path) return false;
    if (a.records[i].data.size() != b.records[i].data.size()) return false;
    for (size_t j = 0; j < a.records[i].data.size(); ++j) {
      if (std::memcmp(&a.records[i].data[j], &b.records[i].data[j], sizeof(float)) != 0) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("adam leaves parameters untouched when no gradient exists, but still counts steps") {
  Tape<double> tape;
  Value<double> w = leaf(Tensor<double>::full({1, 1, 1, 1}, 1.25), true);
  ParamRegistry<double> reg;
  reg.add_param("w", w);

  Adam<double> opt(reg);
  CHECK(opt.t() == 0);
  opt.step(0.1);
  opt.step(0.1);
  CHECK(opt.t() == 2);
  CHECK(w->value.at(0, 0, 0, 0) == 1.25);  // bit-exact: update is exactly zero
}

TEST_CASE("adam first step moves a parameter by almost exactly the learning rate") {
  // With m and v freshly zero, the bias-corrected first update is
  // g / (|g| + eps) ~ sign(g), so the step size is ~lr regardless of |g|.
  Value<double> w = leaf(Tensor<double>::full({1, 1, 1, 1}, 0.0), true);
  ParamRegistry<double> reg;
  reg.add_param("w", w);
  Adam<double> opt(reg);

  w->grad = Tensor<double>::full({1, 1, 1, 1}, 0.5);
  opt.step(0.01);
  CHECK(w->value.at(0, 0, 0, 0) == doctest::Approx(-0.01).epsilon(1e-6));

  // Negative gradient pushes the other way on a fresh optimizer.
  Value<double> u = leaf(Tensor<double>::full({1, 1, 1, 1}, 0.0), true);
  ParamRegistry<double> reg2;
  reg2.add_param("u", u);
  Adam<double> opt2(reg2);
  u->grad = Tensor<double>::full({1, 1, 1, 1}, -2.0);
  opt2.step(0.01);
  CHECK(u->value.at(0, 0, 0, 0) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("adam matches an independent scalar recurrence and minimizes a quadratic") {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;

  Value<double> w = leaf(Tensor<double>::full({1, 1, 1, 1}, 0.0), true);
  ParamRegistry<double> reg;
  reg.add_param("w", w);
  Adam<double> opt(reg);

  // Oracle: textbook update sequence computed independently, in scalars.
  double ow = 0.0, om = 0.0, ov = 0.0;
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * (w->value.at(0, 0, 0, 0) - 3.0);  // d/dw (w-3)^2
    w->grad = Tensor<double>::full({1, 1, 1, 1}, g);
    opt.step(lr);

    const double og = 2.0 * (ow - 3.0);
    om = b1 * om + (1.0 - b1) * og;
    ov = b2 * ov + (1.0 - b2) * og * og;
    const double mhat = om / (1.0 - std::pow(b1, t));
    const double vhat = ov / (1.0 - std::pow(b2, t));
    ow -= lr * mhat / (std::sqrt(vhat) + eps);

    CHECK(w->value.at(0, 0, 0, 0) == doctest::Approx(ow).epsilon(1e-12));
  }
  CHECK(std::abs(w->value.at(0, 0, 0, 0) - 3.0) < 0.5);
}

TEST_CASE("adam keeps moving on momentum when a later step has an empty gradient") {
  Value<double> w = leaf(Tensor<double>::full({1, 1, 1, 1}, 0.0), true);
  ParamRegistry<double> reg;
  reg.add_param("w", w);
  Adam<double> opt(reg);

  w->grad = Tensor<double>::full({1, 1, 1, 1}, 1.0);
  opt.step(0.01);
  const double after_first = w->value.at(0, 0, 0, 0);
  w->grad = Tensor<double>();  // gradient cleared: reads as zero
  opt.step(0.01);
  CHECK(opt.t() == 2);
  CHECK(w->value.at(0, 0, 0, 0) != after_first);  // first moment has not decayed away
  CHECK(w->value.at(0, 0, 0, 0) < after_first);   // and still points downhill
}

TEST_CASE("plateau schedule holds the rate while the metric keeps improving") {
  PlateauScheduler sched(1e-3, {0.5, 3, 1e-6});
  for (int i = 0; i < 20; ++i) sched.observe(1.0 - 0.01 * i);
  CHECK(sched.lr() == 1e-3);
}

TEST_CASE("plateau schedule halves the rate after `patience` epochs without improvement") {
  PlateauScheduler sched(1e-3, {0.5, 5, 1e-6});
  sched.observe(1.0);  // first observation starts the stall count
  CHECK(sched.lr() == 1e-3);
  sched.observe(1.0);
  sched.observe(1.0);
  sched.observe(1.0);
  CHECK(sched.lr() == 1e-3);  // four stalled epochs: still waiting
  CHECK(sched.observe(1.0) == 5e-4);

  // The count restarts after a cut; five more stalls cut again.
  for (int i = 0; i < 4; ++i) CHECK(sched.observe(1.0) == 5e-4);
  CHECK(sched.observe(1.0) == 2.5e-4);
}

TEST_CASE("plateau schedule: an improvement resets the stall count") {
  PlateauScheduler sched(1e-3, {0.5, 3, 1e-6});
  sched.observe(1.0);
  sched.observe(1.0);
  sched.observe(0.9);  // strict improvement: count back to zero
  sched.observe(0.9);
  sched.observe(0.9);
  CHECK(sched.lr() == 1e-3);  // only two stalls since the reset
  sched.observe(0.9);
  CHECK(sched.lr() == 5e-4);
}

TEST_CASE("plateau schedule clamps at the minimum rate exactly") {
  PlateauScheduler sched(8e-6, {0.5, 1, 1e-6});
  std::vector<double> seen;
  for (int i = 0; i < 8; ++i) seen.push_back(sched.observe(1.0));
  CHECK(seen[0] == 4e-6);
  CHECK(seen[1] == 2e-6);
  CHECK(seen[2] == 1e-6);
  for (size_t i = 3; i < seen.size(); ++i) CHECK(seen[i] == 1e-6);  // exact clamp, no drift below
  for (size_t i = 1; i < seen.size(); ++i) CHECK(seen[i] <= seen[i - 1]);
}

TEST_CASE("plateau replay helper agrees with the incremental scheduler") {
  Rng rng(99);
  std::vector<double> history;
  for (int i = 0; i < 40; ++i) history.push_back(rng.uniform(0.1, 1.0));

  PlateauConfig cfg{0.5, 3, 1e-6};
  PlateauScheduler sched(1e-3, cfg);
  for (double m : history) sched.observe(m);
  CHECK(plateau_schedule(history, 1e-3, cfg) == sched.lr());
}

TEST_CASE("plateau schedule rejects nonsense configuration") {
  CHECK_THROWS_AS(PlateauScheduler(1e-3, {1.5, 3, 1e-6}), Error);
  CHECK_THROWS_AS(PlateauScheduler(1e-3, {0.5, 0, 1e-6}), Error);
  CHECK_THROWS_AS(PlateauScheduler(1e-7, {0.5, 3, 1e-6}), Error);  // floor above the initial rate
}

TEST_CASE("training requires at least two pairs and consistent shapes") {
  RestorationModel<float> model(tiny_spec(), 7);
  TrainConfig cfg;
  cfg.max_steps = 1;

  std::vector<PairedSample> one = {tiny_dataset(1)[0]};
  CHECK_THROWS_WITH_AS(train(model, one, cfg), doctest::Contains("at least two"), Error);

  auto pairs = tiny_dataset(1);
  pairs[2].second = Tensor<float>::zeros({1, 3, 8, 8});
  CHECK_THROWS_AS(train(model, pairs, cfg), Error);
}

TEST_CASE("training smoke run: log shape, finiteness, non-increasing rate, decreasing loss") {
  RestorationModel<float> model(tiny_spec(), 7);
  TrainConfig cfg;
  cfg.lr_init = 3e-3;  // hot enough to learn the toy task, cool enough not to saturate it
  cfg.batch_size = 2;
  cfg.max_steps = 60;
  cfg.seed = 11;

  TrainResult res = train(model, tiny_dataset(1), cfg);

  REQUIRE(res.log.rows.size() == 60);
  for (size_t i = 0; i < res.log.rows.size(); ++i) {
    const TrainLogRow& r = res.log.rows[i];
    CHECK(r.step == static_cast<int64_t>(i));
    CHECK(std::isfinite(r.total));
    CHECK(std::isfinite(r.l1));
    CHECK(std::isfinite(r.ssim_loss));
    CHECK(std::isfinite(r.grad_loss));
    CHECK(r.total > 0.0);
    CHECK(r.lr <= cfg.lr_init);
    if (i > 0) CHECK(r.lr <= res.log.rows[i - 1].lr);
    // The composite objective is the weighted sum of its logged parts.
    CHECK(r.total == doctest::Approx(0.1 * r.ssim_loss + r.l1 + r.grad_loss).epsilon(1e-5));
  }

  // 4 pairs -> 1 held out, 3 train, batches of 2 -> 2 steps/epoch, 30 epochs.
  REQUIRE(res.log.epoch_val_loss.size() == 30);
  REQUIRE(res.log.epoch_end_step.size() == 30);
  CHECK(res.log.epoch_end_step.front() == 1);
  CHECK(res.log.epoch_end_step.back() == 59);
  for (const auto& [epoch, v] : res.log.epoch_val_loss) CHECK(std::isfinite(v));
  CHECK(res.final_val_loss == res.log.epoch_val_loss.back().second);

  // The task is learnable (undo a fixed affine shift), so 60 Adam steps must
  // make headway. Compare run means to smooth over per-batch noise.
  const auto mean_total = [&](size_t lo, size_t hi) {
    double s = 0;
    for (size_t i = lo; i < hi; ++i) s += res.log.rows[i].total;
    return s / static_cast<double>(hi - lo);
  };
  CHECK(mean_total(50, 60) < 0.8 * mean_total(0, 10));

  // Result snapshot carries every parameter of the model it trained.
  CHECK(res.weights.records.size() ==
        model.registry().params.size() + model.registry().buffers.size());
}

TEST_CASE("training is bit-reproducible for one seed and diverges across seeds") {
  TrainConfig cfg;
  cfg.lr_init = 5e-3;
  cfg.batch_size = 2;
  cfg.max_steps = 8;
  cfg.seed = 21;

  RestorationModel<float> a(tiny_spec(), 7);
  TrainResult ra = train(a, tiny_dataset(3), cfg);
  RestorationModel<float> b(tiny_spec(), 7);
  TrainResult rb = train(b, tiny_dataset(3), cfg);
  CHECK(weights_equal(ra.weights, rb.weights));
  CHECK(ra.log.text() == rb.log.text());

  RestorationModel<float> c(tiny_spec(), 7);
  TrainConfig other = cfg;
  other.seed = 22;
  TrainResult rc = train(c, tiny_dataset(3), other);
  CHECK_FALSE(weights_equal(ra.weights, rc.weights));
  CHECK(ra.log.text() != rc.log.text());
}

TEST_CASE("training log text is structured, columned, and free of wall-clock noise") {
  RestorationModel<float> model(tiny_spec(), 7);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_steps = 3;
  cfg.seed = 5;
  cfg.augment = false;

  TrainResult res = train(model, tiny_dataset(2), cfg);
  const std::string text = res.log.text();

  CHECK(text.rfind("# train log v1\n", 0) == 0);
  CHECK(text.find("# columns: step lr l1 ssim_loss grad_loss total psnr") != std::string::npos);
  CHECK(text.find("# epoch 0 val_loss") != std::string::npos);

  // Every non-comment line has exactly seven space-separated fields.
  size_t pos = 0, rows = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line[0] != '#') {
      ++rows;
      size_t fields = 1;
      for (char ch : line) fields += (ch == ' ');
      CHECK(fields == 7);
    }
    pos = end + 1;
  }
  CHECK(rows == 3);
}

TEST_CASE("training aborts with a numeric failure when the loss leaves the finite range") {
  RestorationModel<float> model(tiny_spec(), 7);
  auto pairs = tiny_dataset(4);
  pairs.resize(2);
  for (auto& [x, y] : pairs) y.vec()[40] = std::numeric_limits<float>::quiet_NaN();

  TrainConfig cfg;
  cfg.max_steps = 5;
  try {
    train(model, pairs, cfg);
    FAIL("expected a numeric failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NumericFailure);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("training writes checkpoints at the requested cadence and they reload") {
  ScratchDir dir;
  RestorationModel<float> model(tiny_spec(), 7);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_steps = 6;
  cfg.seed = 9;
  cfg.checkpoint_every = 3;
  cfg.checkpoint_prefix = dir.file("ckpt_");

  train(model, tiny_dataset(5), cfg);
  CHECK(std::filesystem::exists(dir.file("ckpt_3.udcw")));
  CHECK(std::filesystem::exists(dir.file("ckpt_6.udcw")));
  CHECK_FALSE(std::filesystem::exists(dir.file("ckpt_5.udcw")));

  RestorationModel<float> fresh(tiny_spec(), 123);
  load_weights(fresh, dir.file("ckpt_6.udcw"));  // same architecture: accepted
  Tensor<float> probe({1, 3, 16, 16});
  Rng rng(6);
  for (auto& v : probe.vec()) v = static_cast<float>(rng.uniform());
  Value<float> ya = model.forward(nullptr, constant(probe), false);
  Value<float> yb = fresh.forward(nullptr, constant(probe), false);
  for (int64_t i = 0; i < ya->value.size(); ++i)
    CHECK(ya->value.vec()[i] == yb->value.vec()[i]);  // final state == last checkpoint
}
