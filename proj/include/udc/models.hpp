// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// The two restoration networks and their weight serialization.
//
// Both models are global-residual restorers over tone-mapped images: the
// network predicts a bounded correction R that is added to its input, and
// the sum is clipped into [0, 1 - clip_epsilon]. The full-size model runs a
// three-stage U-shaped encoder/decoder of dense residual modules with an
// optional attention branch that modulates the correction pixelwise; the
// lightweight model runs a shallow half-resolution pipeline of inverted
// residual blocks around two normalization-free dense residual modules.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "udc/blocks.hpp"
#include "udc/tape.hpp"
#include "udc/tensor.hpp"

namespace udc {

// ----------------------------------------------------------- configuration

enum class ModelKind { DrmUdcnet, Ludcnet };

// Complete architectural description. Equal specs build identically-shaped
// models; the canonical text/hash below captures every field, so weight
// files can reject mismatched architectures.
struct ModelSpec {
  ModelKind kind = ModelKind::DrmUdcnet;
  int64_t base_channels = 48;
  std::array<int64_t, 3> stage_widths = {48, 96, 192};  // encoder widths, shallow to deep
  int drm_per_block = 2;
  bool with_attention_branch = false;
  double clip_epsilon = 1e-5;
  // Capacity of each dense residual module. Defaults match the shipped
  // models; tests and desk-scale experiments shrink them.
  int drm_dense_layers = 4;
  int64_t drm_growth = 16;

  // Tuned defaults frozen for the shipped configurations.
  static ModelSpec drm_udcnet(bool attention);
  static ModelSpec ludcnet();

  bool operator==(const ModelSpec&) const = default;
};

// Throws InvalidArgument on out-of-range fields or inconsistent widths
// (base_channels must equal stage_widths[0]; the lightweight model carries
// no attention branch).
void validate(const ModelSpec& spec);

// Deterministic, human-readable one-field-per-line rendering of a spec.
// Serves as the weight-file provenance record and the hash preimage.
std::string canonical_text(const ModelSpec& spec);

// 64-bit FNV-1a over canonical_text(spec).
uint64_t spec_hash(const ModelSpec& spec);

// Inverse of canonical_text: reconstructs and validates a spec, so tools
// can rebuild a model from a weight file's embedded description. Throws
// FormatError on unparseable text.
ModelSpec parse_spec_text(const std::string& text);

// ------------------------------------------------------------------ models

// A built network: blocks plus an ordered registry over their state. The
// registry is the single source of truth for optimization and
// serialization; its order is fixed at construction.
template <typename T>
class RestorationModel {
 public:
  // Builds and initializes all layers from the seed. Residual heads start
  // at zero, so a fresh model restores to the clipped identity.
  RestorationModel(const ModelSpec& spec, uint64_t seed);

  // Full restoration pass: tone-mapped (n,3,h,w) in, same-shape output in
  // [0, 1 - clip_epsilon]. The full-size model requires h and w divisible
  // by 8; the lightweight model requires them even and at least 4. Callers
  // with other sizes pad first (see pad_to_multiple) and crop after.
  Value<T> forward(Tape<T>* tape, const Value<T>& x, bool training);

  // The pixelwise gate in (0,1)^(n,3,h,w) produced by the attention branch.
  // Only valid when the spec enables the branch. Any spatial size works;
  // internally the branch runs at half resolution and is resized back.
  Value<T> attention_map(Tape<T>* tape, const Value<T>& x, bool training);

  const ModelSpec& spec() const { return spec_; }
  ParamRegistry<T>& registry() { return reg_; }
  int64_t param_count() const { return reg_.param_count(); }

 private:
  Value<T> forward_full(Tape<T>* tape, const Value<T>& x, bool training);
  Value<T> forward_light(Tape<T>* tape, const Value<T>& x, bool training);

  ModelSpec spec_;
  ParamRegistry<T> reg_;

  // Full-size model: encoder stages (dense modules + downsample), decoder
  // stages (dense modules + upsample + skip fusion), residual head.
  std::vector<Conv2d<T>> stem_;
  std::vector<DenseResidualModule<T>> enc_drms_;
  std::vector<Downsample<T>> downs_;
  std::vector<DenseResidualModule<T>> dec_drms_;
  std::vector<Conv2d<T>> fuses_;
  std::vector<Conv2d<T>> head_;

  // Attention branch (only populated when enabled).
  std::vector<Conv2d<T>> attn_stem_;
  std::vector<DenseResidualModule<T>> attn_drms_;
  std::vector<Cbam<T>> attn_cbam_;
  std::vector<Conv2d<T>> attn_head_;

  // Lightweight model.
  std::vector<InvertedResidual<T>> irbs_;
  std::vector<DenseResidualModule<T>> lud_drms_;
  std::vector<Conv2d<T>> lud_stem_;
  std::vector<Conv2d<T>> lud_fuse_;
  std::vector<Conv2d<T>> lud_head_;
};

// ----------------------------------------------------------- serialization

// One stored tensor: its registry path, element type tag (0 = float32),
// shape, and raw values.
struct WeightRecord {
  std::string path;
  uint8_t dtype = 0;
  Shape shape;
  std::vector<float> data;
};

// Parsed weight file: provenance (spec hash + canonical spec text) and the
// full state of the model — trainable parameters and normalization
// statistics alike — in registry order.
struct ModelWeights {
  uint64_t hash = 0;
  std::string spec_text;
  std::vector<WeightRecord> records;
};

// Captures the model's current state as a ModelWeights snapshot.
ModelWeights snapshot_weights(RestorationModel<float>& model);

// Binary weight-file layout (all integers little-endian):
//   magic "UDCW" | u32 version (1) | u32 endian marker 0x01020304 |
//   u64 spec hash | u32 spec-text length | spec text |
//   u32 record count | records
// record: u32 path length | path | u8 dtype | 4 x u32 shape | raw values.
void save_weights(RestorationModel<float>& model, const std::string& path);

// Parses and structurally validates a weight file. Throws FormatError on
// bad magic/version/endianness/truncation.
ModelWeights read_weights(const std::string& path);

// Copies a snapshot into the model. Throws SpecMismatch when the hash or
// any record path/shape disagrees with the model's registry.
void apply_weights(RestorationModel<float>& model, const ModelWeights& weights);

// read_weights + apply_weights.
void load_weights(RestorationModel<float>& model, const std::string& path);

}  // namespace udc
