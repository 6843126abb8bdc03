// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Restoration models: construction, parameter budgets, forward contracts
// (shape, range, identity-at-init), the attention branch, and weight-file
// round-trips.

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "udc/models.hpp"
#include "udc/ops.hpp"

using namespace udc;

namespace {

struct ScratchDir {
  std::filesystem::path dir;
  ScratchDir() : dir(std::filesystem::temp_directory_path() / ("udc_model_test_" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(dir);
  }
  ~ScratchDir() { std::filesystem::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

// Small spec that keeps unit-test forwards cheap.
ModelSpec toy_spec(bool attention) {
  ModelSpec s = ModelSpec::drm_udcnet(attention);
  s.base_channels = 16;
  s.stage_widths = {16, 24, 32};
  s.drm_dense_layers = 2;
  s.drm_growth = 8;
  return s;
}

Value<float> random_input(Shape shape, uint64_t seed, float lo = 0.0f, float hi = 0.9f) {
  Rng rng(seed);
  Tensor<float> t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(rng.uniform(lo, hi));
  return constant(std::move(t));
}

void randomize_params(RestorationModel<float>& m, uint64_t seed, float scale) {
  Rng rng(seed);
  for (auto& [name, p] : m.registry().params)
    for (auto& v : p->value.vec()) v = static_cast<float>(rng.normal()) * scale;
}

void zero_params(RestorationModel<float>& m, const std::string& prefix) {
  for (auto& [name, p] : m.registry().params)
    if (name.rfind(prefix, 0) == 0) p->value.vec().assign(static_cast<size_t>(p->value.size()), 0.0f);
}

bool bit_equal(const Tensor<float>& a, const Tensor<float>& b) {
  if (!(a.shape() == b.shape())) return false;
  for (int64_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("default configurations land inside the published parameter budgets") {
  RestorationModel<float> base(ModelSpec::drm_udcnet(false), 1);
  CHECK(base.param_count() == 2127939);
  CHECK(base.param_count() >= 1800000);
  CHECK(base.param_count() <= 2200000);

  RestorationModel<float> attn(ModelSpec::drm_udcnet(true), 1);
  CHECK(attn.param_count() == 2898069);
  CHECK(attn.param_count() >= 2600000);
  CHECK(attn.param_count() <= 3200000);

  RestorationModel<float> light(ModelSpec::ludcnet(), 1);
  CHECK(light.param_count() == 320771);
}

TEST_CASE("halving every width roughly quarters the parameter count") {
  ModelSpec full = ModelSpec::drm_udcnet(false);
  ModelSpec half = full;
  half.base_channels /= 2;
  for (auto& w : half.stage_widths) w /= 2;
  half.drm_growth /= 2;  // the dense-layer growth is a width too

  RestorationModel<float> a(full, 1), b(half, 1);
  const double ratio = static_cast<double>(a.param_count()) / static_cast<double>(b.param_count());
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("spec validation rejects inconsistent configurations") {
  ModelSpec s = ModelSpec::drm_udcnet(false);
  s.base_channels = 40;  // != stage_widths[0]
  CHECK_THROWS_AS(validate(s), Error);

  s = ModelSpec::drm_udcnet(false);
  s.stage_widths[1] = 0;
  CHECK_THROWS_AS(validate(s), Error);

  s = ModelSpec::ludcnet();
  s.with_attention_branch = true;
  CHECK_THROWS_AS(validate(s), Error);

  s = ModelSpec::drm_udcnet(false);
  s.clip_epsilon = 0.0;
  CHECK_THROWS_AS(validate(s), Error);

  s = ModelSpec::drm_udcnet(false);
  s.drm_per_block = 3;
  try {
    RestorationModel<float> m(s, 1);
    FAIL("expected invalid-argument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("canonical spec text is stable and the hash separates architectures") {
  ModelSpec a = ModelSpec::drm_udcnet(true);
  CHECK(canonical_text(a) == canonical_text(a));
  CHECK(spec_hash(a) == spec_hash(a));

  ModelSpec b = a;
  b.stage_widths[2] = 160;
  CHECK(spec_hash(a) != spec_hash(b));
  ModelSpec c = a;
  c.with_attention_branch = false;
  CHECK(spec_hash(a) != spec_hash(c));
  CHECK(canonical_text(a).find("drm_udcnet") != std::string::npos);
  CHECK(canonical_text(ModelSpec::ludcnet()).find("ludcnet") != std::string::npos);
}

TEST_CASE("spec text parses back to an identical spec, and rejects damage") {
  for (const ModelSpec& s : {ModelSpec::drm_udcnet(true), ModelSpec::drm_udcnet(false),
                             ModelSpec::ludcnet(), toy_spec(false)}) {
    const ModelSpec back = parse_spec_text(canonical_text(s));
    CHECK(back == s);
    CHECK(canonical_text(back) == canonical_text(s));  // hash preimage survives the round trip
  }

  CHECK_THROWS_AS(parse_spec_text("something else v2\nkind drm_udcnet\n"), Error);
  CHECK_THROWS_AS(parse_spec_text("udcnet-model-spec v1\nkind ufonet\n"), Error);
  CHECK_THROWS_AS(parse_spec_text("udcnet-model-spec v1\nbase_channels banana\n"), Error);
  // Syntactically fine but describes an impossible model.
  try {
    parse_spec_text(
        "udcnet-model-spec v1\nkind ludcnet\nbase_channels 32\nstage_widths 32 128 128\n"
        "drm_per_block 2\ndrm_dense_layers 4\ndrm_growth 16\nwith_attention_branch 1\n"
        "clip_epsilon 1e-05\n");
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
  }
}

TEST_CASE("freshly built models restore to the clipped identity") {
  // Residual heads start at zero, so with any other weights untouched the
  // network must reproduce its input exactly (inputs already in range).
  for (bool attention : {false, true}) {
    RestorationModel<float> m(toy_spec(attention), 3);
    Value<float> x = random_input({1, 3, 16, 16}, 5);
    Value<float> y = m.forward(nullptr, x, false);
    CHECK(bit_equal(y->value, x->value));
  }
  RestorationModel<float> light(ModelSpec::ludcnet(), 3);
  Value<float> x = random_input({1, 3, 16, 16}, 6);
  CHECK(bit_equal(light.forward(nullptr, x, false)->value, x->value));
}

TEST_CASE("outputs stay inside the clip range for arbitrary weights and inputs") {
  const float hi = 1.0f - 1e-5f;
  for (int trial = 0; trial < 3; ++trial) {
    RestorationModel<float> m(toy_spec(trial % 2 == 1), 100 + static_cast<uint64_t>(trial));
    randomize_params(m, 200 + static_cast<uint64_t>(trial), 0.5f);
    Value<float> x = random_input({1, 3, 16, 16}, 300 + static_cast<uint64_t>(trial), -2.0f, 2.0f);
    Tensor<float> y = m.forward(nullptr, x, false)->value;
    CHECK(y.shape() == x->value.shape());
    for (float v : y.vec()) {
      CHECK(v >= 0.0f);
      CHECK(v <= hi);
    }
  }
  for (int trial = 0; trial < 3; ++trial) {
    RestorationModel<float> m(ModelSpec::ludcnet(), 400 + static_cast<uint64_t>(trial));
    randomize_params(m, 500 + static_cast<uint64_t>(trial), 0.5f);
    Value<float> x = random_input({1, 3, 16, 16}, 600 + static_cast<uint64_t>(trial), -2.0f, 2.0f);
    Tensor<float> y = m.forward(nullptr, x, false)->value;
    CHECK(y.shape() == x->value.shape());
    for (float v : y.vec()) {
      CHECK(v >= 0.0f);
      CHECK(v <= hi);
    }
  }
}

TEST_CASE("output shape matches input shape even through internal padding") {
  // 6x10 halves to 3x5 inside the lightweight model; the internal
  // even-padding must be cropped away before the final upsample.
  RestorationModel<float> light(ModelSpec::ludcnet(), 9);
  randomize_params(light, 10, 0.2f);
  Value<float> x = random_input({2, 3, 6, 10}, 11);
  CHECK(light.forward(nullptr, x, false)->value.shape() == Shape{2, 3, 6, 10});

  RestorationModel<float> full(toy_spec(true), 9);
  Value<float> x8 = random_input({2, 3, 8, 24}, 12);
  CHECK(full.forward(nullptr, x8, false)->value.shape() == Shape{2, 3, 8, 24});
}

TEST_CASE("models reject sizes they cannot process, telling the caller to pad") {
  RestorationModel<float> full(toy_spec(false), 1);
  RestorationModel<float> light(ModelSpec::ludcnet(), 1);

  CHECK_THROWS_AS(full.forward(nullptr, random_input({1, 3, 12, 16}, 1), false), Error);
  CHECK_THROWS_AS(full.forward(nullptr, random_input({1, 1, 16, 16}, 1), false), Error);
  CHECK_THROWS_AS(light.forward(nullptr, random_input({1, 3, 7, 8}, 1), false), Error);
  CHECK_THROWS_AS(light.forward(nullptr, random_input({1, 3, 2, 8}, 1), false), Error);

  try {
    full.forward(nullptr, random_input({1, 3, 12, 16}, 1), false);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
    CHECK(std::string(e.what()).find("pad") != std::string::npos);
  }
}

TEST_CASE("attention maps are sigmoid-bounded, input-shaped, and deterministic") {
  RestorationModel<float> m(toy_spec(true), 21);
  randomize_params(m, 22, 0.05f);  // keep pre-sigmoid values away from float saturation

  for (Shape s : {Shape{1, 3, 16, 16}, Shape{1, 3, 15, 9}}) {  // odd sizes allowed here
    Value<float> x = random_input(s, 23);
    Tensor<float> a = m.attention_map(nullptr, x, false)->value;
    CHECK(a.shape() == s);
    for (float v : a.vec()) {
      CHECK(v > 0.0f);
      CHECK(v < 1.0f);
    }
    CHECK(bit_equal(a, m.attention_map(nullptr, x, false)->value));
  }

  // Under extreme weights the sigmoid still stays in [0, 1]; single-precision
  // rounding may touch the endpoints exactly, which the clip downstream of
  // the gate tolerates by construction.
  RestorationModel<float> wild(toy_spec(true), 21);
  randomize_params(wild, 24, 0.5f);
  Value<float> wa = wild.attention_map(nullptr, random_input({1, 3, 16, 16}, 25), false);
  for (float v : wa->value.vec()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  RestorationModel<float> plain(toy_spec(false), 21);
  CHECK_THROWS_AS(plain.attention_map(nullptr, random_input({1, 3, 16, 16}, 1), false), Error);
}

TEST_CASE("the attention map gates the residual multiplicatively") {
  // Same seed builds identical main branches; zeroing the whole attention
  // branch pins its output to sigmoid(0) = 1/2 exactly. The residual head
  // starts at zero, so give it small weights — identically in both models —
  // keeping the correction below 1/4 so no value clips. The gated model's
  // correction must then be half the plain model's. Reconstructing the
  // residual as yp - 0.5 quantizes it to the grid of floats near 0.5, so
  // agreement is asserted to one ulp of 0.5 rather than bit-exactly.
  RestorationModel<float> gated(toy_spec(true), 33);
  RestorationModel<float> plain(toy_spec(false), 33);
  auto seed_head = [](RestorationModel<float>& m) {
    Rng rng(333);
    for (auto& [name, p] : m.registry().params)
      if (name.rfind("head.", 0) == 0)
        for (auto& v : p->value.vec()) v = static_cast<float>(rng.normal()) * 2e-5f;
  };
  seed_head(gated);
  seed_head(plain);
  zero_params(gated, "attn.");

  Value<float> x = constant(Tensor<float>::full({1, 3, 16, 16}, 0.5f));
  Tensor<float> a = gated.attention_map(nullptr, x, false)->value;
  for (float v : a.vec()) CHECK(v == 0.5f);

  Tensor<float> yg = gated.forward(nullptr, x, false)->value;
  Tensor<float> yp = plain.forward(nullptr, x, false)->value;
  bool residual_alive = false;
  for (int64_t i = 0; i < yg.size(); ++i) {
    const float r = yp.data()[i] - 0.5f;  // exact for |r| < 0.25 (Sterbenz)
    REQUIRE(std::abs(r) < 0.2f);
    residual_alive = residual_alive || r != 0.0f;
    CHECK(std::abs(yg.data()[i] - (0.5f + 0.5f * r)) <= 6e-8f);
  }
  CHECK(residual_alive);  // guards against a vacuous pass with a zero head

  // With a live attention branch the output changes.
  RestorationModel<float> live(toy_spec(true), 33);
  seed_head(live);
  CHECK_FALSE(bit_equal(live.forward(nullptr, x, false)->value, yg));
}

TEST_CASE("construction is deterministic in the seed and forward is pure") {
  RestorationModel<float> a(toy_spec(true), 77), b(toy_spec(true), 77), c(toy_spec(true), 78);
  auto &ra = a.registry(), &rb = b.registry(), &rc = c.registry();
  REQUIRE(ra.params.size() == rb.params.size());
  bool all_equal = true, any_diff = false;
  for (size_t i = 0; i < ra.params.size(); ++i) {
    CHECK(ra.params[i].first == rb.params[i].first);
    CHECK(ra.params[i].first == rc.params[i].first);
    all_equal = all_equal && bit_equal(ra.params[i].second->value, rb.params[i].second->value);
    any_diff = any_diff || !bit_equal(ra.params[i].second->value, rc.params[i].second->value);
  }
  CHECK(all_equal);
  CHECK(any_diff);

  Value<float> x = random_input({1, 3, 16, 16}, 79);
  CHECK(bit_equal(a.forward(nullptr, x, false)->value, b.forward(nullptr, x, false)->value));
}

TEST_CASE("registry names are unique and cover trainable state plus statistics") {
  for (ModelSpec spec : {toy_spec(true), ModelSpec::ludcnet()}) {
    RestorationModel<float> m(spec, 1);
    std::set<std::string> names;
    int64_t count = 0;
    for (auto& [name, p] : m.registry().params) {
      CHECK(names.insert(name).second);
      count += p->value.size();
    }
    for (auto& [name, b] : m.registry().buffers) CHECK(names.insert(name).second);
    CHECK(count == m.param_count());
    // Normalization statistics live in buffers, not in the trainable set.
    const bool has_norm_stats = !m.registry().buffers.empty();
    CHECK(has_norm_stats == (spec.kind == ModelKind::DrmUdcnet));
  }
}

TEST_CASE("training-mode forwards fold batch statistics into the buffers") {
  RestorationModel<float> m(toy_spec(false), 41);
  auto& buffers = m.registry().buffers;
  REQUIRE_FALSE(buffers.empty());
  Tensor<float> before = *buffers[0].second;

  Tape<float> tape;
  Value<float> x = random_input({1, 3, 16, 16}, 42);
  m.forward(&tape, x, true);
  CHECK_FALSE(bit_equal(before, *buffers[0].second));

  // Eval-mode forwards leave statistics untouched.
  Tensor<float> after = *buffers[0].second;
  m.forward(nullptr, x, false);
  CHECK(bit_equal(after, *buffers[0].second));
}

TEST_CASE("weights round-trip bit-exactly through the file format") {
  ScratchDir tmp;
  ModelSpec spec = toy_spec(true);
  RestorationModel<float> a(spec, 51);
  randomize_params(a, 52, 0.3f);
  // Move a normalization statistic so buffers are exercised too.
  Tape<float> tape;
  a.forward(&tape, random_input({1, 3, 16, 16}, 53), true);

  const std::string f1 = tmp / "a.udcw";
  save_weights(a, f1);

  RestorationModel<float> b(spec, 99);  // different draws, same architecture
  Value<float> x = random_input({1, 3, 16, 16}, 54);
  CHECK_FALSE(bit_equal(a.forward(nullptr, x, false)->value, b.forward(nullptr, x, false)->value));

  load_weights(b, f1);
  CHECK(bit_equal(a.forward(nullptr, x, false)->value, b.forward(nullptr, x, false)->value));

  // Saving the loaded model reproduces the file byte for byte.
  const std::string f2 = tmp / "b.udcw";
  save_weights(b, f2);
  std::ifstream i1(f1, std::ios::binary), i2(f2, std::ios::binary);
  std::string c1((std::istreambuf_iterator<char>(i1)), std::istreambuf_iterator<char>());
  std::string c2((std::istreambuf_iterator<char>(i2)), std::istreambuf_iterator<char>());
  CHECK(c1 == c2);
  CHECK_FALSE(c1.empty());
}

TEST_CASE("weight snapshots expose provenance and one record per state tensor") {
  RestorationModel<float> m(toy_spec(false), 61);
  ModelWeights w = snapshot_weights(m);
  CHECK(w.hash == spec_hash(m.spec()));
  CHECK(w.spec_text == canonical_text(m.spec()));
  CHECK(w.records.size() == m.registry().params.size() + m.registry().buffers.size());
  for (const auto& r : w.records) CHECK(r.dtype == 0);
  CHECK(w.records[0].path == m.registry().params[0].first);
}

TEST_CASE("weight loading rejects mismatched architectures and damaged files") {
  ScratchDir tmp;
  RestorationModel<float> a(toy_spec(false), 71);
  const std::string good = tmp / "good.udcw";
  save_weights(a, good);

  ModelSpec other = toy_spec(false);
  other.base_channels = 8;
  other.stage_widths = {8, 24, 32};
  RestorationModel<float> b(other, 71);
  try {
    load_weights(b, good);
    FAIL("expected spec mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpecMismatch);
  }

  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  // Bad magic.
  std::string corrupt = bytes;
  corrupt[0] = 'X';
  std::ofstream(tmp / "magic.udcw", std::ios::binary) << corrupt;
  CHECK_THROWS_AS(read_weights(tmp / "magic.udcw"), Error);

  // Flipped endianness marker.
  corrupt = bytes;
  std::swap(corrupt[8], corrupt[11]);
  std::swap(corrupt[9], corrupt[10]);
  std::ofstream(tmp / "endian.udcw", std::ios::binary) << corrupt;
  try {
    read_weights(tmp / "endian.udcw");
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
  }

  // Truncation in the middle of tensor data.
  std::ofstream(tmp / "short.udcw", std::ios::binary) << bytes.substr(0, bytes.size() - 17);
  CHECK_THROWS_AS(read_weights(tmp / "short.udcw"), Error);

  CHECK_THROWS_AS(read_weights(tmp / "missing.udcw"), Error);
}
