// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#include "udc/models.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "udc/ops.hpp"

namespace udc {

// ----------------------------------------------------------- configuration

ModelSpec ModelSpec::drm_udcnet(bool attention) {
  ModelSpec s;
  s.kind = ModelKind::DrmUdcnet;
  s.base_channels = 48;
  s.stage_widths = {48, 96, 192};
  s.with_attention_branch = attention;
  return s;
}

ModelSpec ModelSpec::ludcnet() {
  ModelSpec s;
  s.kind = ModelKind::Ludcnet;
  s.base_channels = 32;
  s.stage_widths = {32, 128, 128};  // half-res width, quarter-res width; third unused
  s.with_attention_branch = false;
  return s;
}

void validate(const ModelSpec& spec) {
  for (int64_t w : spec.stage_widths)
    check(w >= 1, ErrorCode::InvalidArgument, "stage widths must be positive");
  check(spec.base_channels == spec.stage_widths[0], ErrorCode::InvalidArgument,
        "inconsistent widths: base_channels " + std::to_string(spec.base_channels) +
            " must equal the first stage width " + std::to_string(spec.stage_widths[0]));
  check(spec.drm_per_block == 2, ErrorCode::InvalidArgument,
        "each stage carries exactly two dense residual modules");
  check(spec.drm_dense_layers >= 1 && spec.drm_growth >= 1, ErrorCode::InvalidArgument,
        "dense residual modules need at least one layer and positive growth");
  check(spec.clip_epsilon > 0.0 && spec.clip_epsilon < 0.1, ErrorCode::InvalidArgument,
        "clip_epsilon must lie in (0, 0.1)");
  if (spec.kind == ModelKind::Ludcnet)
    check(!spec.with_attention_branch, ErrorCode::InvalidArgument,
          "the lightweight model has no attention branch");
}

std::string canonical_text(const ModelSpec& spec) {
  std::ostringstream out;
  out << "udcnet-model-spec v1\n";
  out << "kind " << (spec.kind == ModelKind::DrmUdcnet ? "drm_udcnet" : "ludcnet") << '\n';
  out << "base_channels " << spec.base_channels << '\n';
  out << "stage_widths " << spec.stage_widths[0] << ' ' << spec.stage_widths[1] << ' '
      << spec.stage_widths[2] << '\n';
  out << "drm_per_block " << spec.drm_per_block << '\n';
  out << "drm_dense_layers " << spec.drm_dense_layers << '\n';
  out << "drm_growth " << spec.drm_growth << '\n';
  out << "with_attention_branch " << (spec.with_attention_branch ? 1 : 0) << '\n';
  char eps[32];
  std::snprintf(eps, sizeof eps, "%.9g", spec.clip_epsilon);
  out << "clip_epsilon " << eps << '\n';
  return out.str();
}

uint64_t spec_hash(const ModelSpec& spec) {
  const std::string text = canonical_text(spec);
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ModelSpec parse_spec_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  check(static_cast<bool>(std::getline(in, line)) && line == "udcnet-model-spec v1",
        ErrorCode::FormatError, "not a model description: missing 'udcnet-model-spec v1' header");

  ModelSpec spec;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    bool ok = true;
    if (key == "kind") {
      std::string kind;
      fields >> kind;
      ok = kind == "drm_udcnet" || kind == "ludcnet";
      spec.kind = kind == "ludcnet" ? ModelKind::Ludcnet : ModelKind::DrmUdcnet;
    } else if (key == "base_channels") {
      fields >> spec.base_channels;
    } else if (key == "stage_widths") {
      fields >> spec.stage_widths[0] >> spec.stage_widths[1] >> spec.stage_widths[2];
    } else if (key == "drm_per_block") {
      fields >> spec.drm_per_block;
    } else if (key == "drm_dense_layers") {
      fields >> spec.drm_dense_layers;
    } else if (key == "drm_growth") {
      fields >> spec.drm_growth;
    } else if (key == "with_attention_branch") {
      int flag = 0;
      fields >> flag;
      ok = flag == 0 || flag == 1;
      spec.with_attention_branch = flag == 1;
    } else if (key == "clip_epsilon") {
      fields >> spec.clip_epsilon;
    } else {
      ok = false;
    }
    check(ok && !fields.fail(), ErrorCode::FormatError,
          "model description has an unreadable line: '" + line + "'");
  }
  try {
    validate(spec);
  } catch (const Error& e) {
    // A parseable description of an impossible model is a damaged file.
    throw Error(ErrorCode::FormatError, std::string("model description is invalid: ") + e.what());
  }
  return spec;
}

// ------------------------------------------------------------ construction

template <typename T>
RestorationModel<T>::RestorationModel(const ModelSpec& spec, uint64_t seed) : spec_(spec) {
  validate(spec_);
  Rng rng(seed);
  const auto& w = spec_.stage_widths;
  auto drm_cfg = [&](int64_t channels, bool batchnorm) {
    return DrmConfig{channels, spec_.drm_dense_layers, spec_.drm_growth, batchnorm};
  };

  if (spec_.kind == ModelKind::DrmUdcnet) {
    // Coordinate augmentation adds two channels ahead of the stem.
    stem_.emplace_back(5, w[0], 3, 1, 1, true, rng);
    for (int stage = 0; stage < 3; ++stage) {
      for (int i = 0; i < spec_.drm_per_block; ++i) enc_drms_.emplace_back(drm_cfg(w[stage], true), rng);
      downs_.emplace_back(w[stage], w[std::min(stage + 1, 2)], rng);
    }
    // Decoder mirrors the encoder: deep to shallow, fusing the matching
    // encoder stage's features after each upsample.
    const int64_t dec_in[3] = {w[2], w[2], w[1]};   // widths entering each decoder stage
    const int64_t skip_w[3] = {w[2], w[1], w[0]};   // encoder features met after upsampling
    for (int stage = 0; stage < 3; ++stage) {
      for (int i = 0; i < spec_.drm_per_block; ++i) dec_drms_.emplace_back(drm_cfg(dec_in[stage], true), rng);
      fuses_.emplace_back(dec_in[stage] + skip_w[stage], skip_w[stage], 1, 1, 0, true, rng);
    }
    head_.emplace_back(w[0], 3, 3, 1, 1, true, rng);
    head_[0].zero_init();

    if (spec_.with_attention_branch) {
      attn_stem_.emplace_back(3, w[1], 3, 2, 1, true, rng);
      for (int i = 0; i < 9; ++i) attn_drms_.emplace_back(drm_cfg(w[1], true), rng);
      attn_cbam_.emplace_back(CbamConfig{w[1], 8, 7}, rng);
      attn_head_.emplace_back(w[1], 3, 3, 1, 1, true, rng);
    }

    stem_[0].collect("stem", reg_);
    for (int stage = 0; stage < 3; ++stage) {
      const std::string e = "e" + std::to_string(stage + 1);
      for (int i = 0; i < spec_.drm_per_block; ++i)
        enc_drms_[static_cast<size_t>(stage * spec_.drm_per_block + i)].collect(e + ".drm" + std::to_string(i), reg_);
      downs_[static_cast<size_t>(stage)].collect(e + ".down", reg_);
    }
    for (int stage = 0; stage < 3; ++stage) {
      const std::string d = "d" + std::to_string(stage + 1);
      for (int i = 0; i < spec_.drm_per_block; ++i)
        dec_drms_[static_cast<size_t>(stage * spec_.drm_per_block + i)].collect(d + ".drm" + std::to_string(i), reg_);
      fuses_[static_cast<size_t>(stage)].collect(d + ".fuse", reg_);
    }
    head_[0].collect("head", reg_);
    if (spec_.with_attention_branch) {
      attn_stem_[0].collect("attn.stem", reg_);
      for (int i = 0; i < 9; ++i) attn_drms_[static_cast<size_t>(i)].collect("attn.drm" + std::to_string(i), reg_);
      attn_cbam_[0].collect("attn.cbam", reg_);
      attn_head_[0].collect("attn.head", reg_);
    }
    return;
  }

  // Lightweight model: everything below the input downsample runs at half
  // resolution or less, with normalization-free dense modules in the core.
  lud_stem_.emplace_back(3, w[0], 3, 1, 1, true, rng);
  irbs_.emplace_back(InvertedResidualConfig{w[0], w[0], 2, 1}, rng);
  irbs_.emplace_back(InvertedResidualConfig{w[0], w[1], 2, 2}, rng);
  for (int i = 0; i < spec_.drm_per_block; ++i) lud_drms_.emplace_back(drm_cfg(w[1], false), rng);
  irbs_.emplace_back(InvertedResidualConfig{w[1], w[1], 2, 1}, rng);
  lud_fuse_.emplace_back(w[1] + w[0], w[0], 1, 1, 0, true, rng);
  irbs_.emplace_back(InvertedResidualConfig{w[0], w[0], 2, 1}, rng);
  lud_head_.emplace_back(w[0], 3, 3, 1, 1, true, rng);
  lud_head_[0].zero_init();

  lud_stem_[0].collect("stem", reg_);
  irbs_[0].collect("irb0", reg_);
  irbs_[1].collect("irb1", reg_);
  for (int i = 0; i < spec_.drm_per_block; ++i) lud_drms_[static_cast<size_t>(i)].collect("drm" + std::to_string(i), reg_);
  irbs_[2].collect("irb2", reg_);
  lud_fuse_[0].collect("fuse", reg_);
  irbs_[3].collect("irb3", reg_);
  lud_head_[0].collect("head", reg_);
}

// ---------------------------------------------------------------- forward

template <typename T>
Value<T> RestorationModel<T>::attention_map(Tape<T>* tape, const Value<T>& x, bool training) {
  check(spec_.with_attention_branch, ErrorCode::StateError,
        "this model was built without an attention branch");
  const Shape s = x->value.shape();
  check(s.c == 3, ErrorCode::ShapeMismatch, "attention branch expects 3 channels, got " + s.str());

  Value<T> g = activation(tape, attn_stem_[0].forward(tape, x), Act::Relu);
  for (auto& drm : attn_drms_) g = drm.forward(tape, g, training);
  g = attn_cbam_[0].forward(tape, g);
  g = bilinear_resize(tape, g, ResizeScale::Double);
  // Odd inputs round up through the stride-2 stem; trim the overshoot.
  if (g->value.shape().h != s.h || g->value.shape().w != s.w)
    g = slice_spatial(tape, g, 0, 0, s.h, s.w);
  return activation(tape, attn_head_[0].forward(tape, g), Act::Sigmoid);
}

template <typename T>
Value<T> RestorationModel<T>::forward_full(Tape<T>* tape, const Value<T>& x, bool training) {
  const Shape s = x->value.shape();
  check(s.h % 8 == 0 && s.w % 8 == 0, ErrorCode::ShapeMismatch,
        "input extents must be divisible by 8, got " + s.str() +
            "; pad first (pad_to_multiple) and crop the result");

  Value<T> f = activation(tape, stem_[0].forward(tape, coord_conv_augment(tape, x)), Act::Relu);

  std::vector<Value<T>> taps;  // per-stage features at their native resolution
  for (int stage = 0; stage < 3; ++stage) {
    for (int i = 0; i < spec_.drm_per_block; ++i)
      f = enc_drms_[static_cast<size_t>(stage * spec_.drm_per_block + i)].forward(tape, f, training);
    taps.push_back(f);
    f = downs_[static_cast<size_t>(stage)].forward(tape, f);
  }

  for (int stage = 0; stage < 3; ++stage) {
    for (int i = 0; i < spec_.drm_per_block; ++i)
      f = dec_drms_[static_cast<size_t>(stage * spec_.drm_per_block + i)].forward(tape, f, training);
    f = bilinear_resize(tape, f, ResizeScale::Double);
    f = concat_channels(tape, {f, taps[static_cast<size_t>(2 - stage)]});
    f = activation(tape, fuses_[static_cast<size_t>(stage)].forward(tape, f), Act::Relu);
  }

  Value<T> residual = activation(tape, head_[0].forward(tape, f), Act::Tanh);
  if (spec_.with_attention_branch) residual = mul(tape, residual, attention_map(tape, x, training));
  return clamp(tape, add(tape, x, residual), T(0), T(1) - static_cast<T>(spec_.clip_epsilon));
}

template <typename T>
Value<T> RestorationModel<T>::forward_light(Tape<T>* tape, const Value<T>& x, bool training) {
  const Shape s = x->value.shape();
  check(s.h % 2 == 0 && s.w % 2 == 0 && s.h >= 4 && s.w >= 4, ErrorCode::ShapeMismatch,
        "input extents must be even and at least 4, got " + s.str() +
            "; pad first (pad_to_multiple) and crop the result");

  Value<T> f = bilinear_resize(tape, x, ResizeScale::Half);
  const int64_t h2 = f->value.shape().h, w2 = f->value.shape().w;
  // The stride-2 descent needs even extents; reflect-pad here, crop before
  // the final upsample.
  const int64_t ph = h2 % 2, pw = w2 % 2;
  if (ph || pw) f = pad_spatial(tape, f, 0, ph, 0, pw, PadMode::Reflect);

  f = activation(tape, lud_stem_[0].forward(tape, f), Act::Relu6);
  f = irbs_[0].forward(tape, f);
  Value<T> tap = f;
  f = irbs_[1].forward(tape, f);
  for (auto& drm : lud_drms_) f = drm.forward(tape, f, training);
  f = irbs_[2].forward(tape, f);
  f = bilinear_resize(tape, f, ResizeScale::Double);
  f = concat_channels(tape, {f, tap});
  f = activation(tape, lud_fuse_[0].forward(tape, f), Act::Relu6);
  f = irbs_[3].forward(tape, f);
  Value<T> residual = activation(tape, lud_head_[0].forward(tape, f), Act::Tanh);
  if (ph || pw) residual = slice_spatial(tape, residual, 0, 0, h2, w2);
  residual = bilinear_resize(tape, residual, ResizeScale::Double);
  return clamp(tape, add(tape, x, residual), T(0), T(1) - static_cast<T>(spec_.clip_epsilon));
}

template <typename T>
Value<T> RestorationModel<T>::forward(Tape<T>* tape, const Value<T>& x, bool training) {
  const Shape s = x->value.shape();
  check(s.c == 3, ErrorCode::ShapeMismatch, "restoration expects 3-channel input, got " + s.str());
  return spec_.kind == ModelKind::DrmUdcnet ? forward_full(tape, x, training)
                                            : forward_light(tape, x, training);
}

template class RestorationModel<float>;
template class RestorationModel<double>;

// ----------------------------------------------------------- serialization

namespace {

constexpr char kMagic[4] = {'U', 'D', 'C', 'W'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kEndianMarker = 0x01020304u;

template <typename I>
void put(std::ostream& out, I v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename I>
I take(std::istream& in, const std::string& path, const char* what) {
  I v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  check(in.gcount() == sizeof v, ErrorCode::FormatError, path + ": truncated " + what);
  return v;
}

std::string take_string(std::istream& in, const std::string& path, const char* what) {
  const uint32_t len = take<uint32_t>(in, path, what);
  check(len <= (1u << 20), ErrorCode::FormatError, path + ": implausible string length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  check(static_cast<uint32_t>(in.gcount()) == len, ErrorCode::FormatError, path + ": truncated " + what);
  return s;
}

}  // namespace

ModelWeights snapshot_weights(RestorationModel<float>& model) {
  ModelWeights w;
  w.hash = spec_hash(model.spec());
  w.spec_text = canonical_text(model.spec());
  auto& reg = model.registry();
  w.records.reserve(reg.params.size() + reg.buffers.size());
  for (const auto& [name, p] : reg.params)
    w.records.push_back({name, 0, p->value.shape(), p->value.vec()});
  for (const auto& [name, b] : reg.buffers) w.records.push_back({name, 0, b->shape(), b->vec()});
  return w;
}

void save_weights(RestorationModel<float>& model, const std::string& path) {
  const ModelWeights w = snapshot_weights(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), ErrorCode::IoError, "cannot write weight file " + path);

  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, kEndianMarker);
  put(out, w.hash);
  put(out, static_cast<uint32_t>(w.spec_text.size()));
  out.write(w.spec_text.data(), static_cast<std::streamsize>(w.spec_text.size()));
  put(out, static_cast<uint32_t>(w.records.size()));
  for (const auto& r : w.records) {
    put(out, static_cast<uint32_t>(r.path.size()));
    out.write(r.path.data(), static_cast<std::streamsize>(r.path.size()));
    put(out, r.dtype);
    for (int64_t d : {r.shape.n, r.shape.c, r.shape.h, r.shape.w}) put(out, static_cast<uint32_t>(d));
    out.write(reinterpret_cast<const char*>(r.data.data()),
              static_cast<std::streamsize>(r.data.size() * sizeof(float)));
  }
  check(out.good(), ErrorCode::IoError, "short write to weight file " + path);
}

ModelWeights read_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), ErrorCode::IoError, "cannot open weight file " + path);

  char magic[4];
  in.read(magic, 4);
  check(in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0, ErrorCode::FormatError,
        path + ": not a weight file (bad magic)");
  const auto version = take<uint32_t>(in, path, "version");
  check(version == kVersion, ErrorCode::FormatError,
        path + ": unsupported weight format version " + std::to_string(version));
  const auto endian = take<uint32_t>(in, path, "endianness marker");
  check(endian == kEndianMarker, ErrorCode::FormatError,
        path + ": endianness marker mismatch; file written on an incompatible machine");

  ModelWeights w;
  w.hash = take<uint64_t>(in, path, "spec hash");
  w.spec_text = take_string(in, path, "spec text");
  const auto count = take<uint32_t>(in, path, "record count");
  check(count <= (1u << 20), ErrorCode::FormatError, path + ": implausible record count");
  w.records.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    WeightRecord r;
    r.path = take_string(in, path, "record path");
    r.dtype = take<uint8_t>(in, path, "dtype tag");
    check(r.dtype == 0, ErrorCode::FormatError, path + ": unknown element type tag");
    int64_t dims[4];
    for (auto& d : dims) d = take<uint32_t>(in, path, "shape");
    r.shape = Shape{dims[0], dims[1], dims[2], dims[3]};
    const int64_t n = r.shape.numel();
    check(n >= 1 && n <= (int64_t(1) << 28), ErrorCode::FormatError, path + ": implausible tensor size");
    r.data.resize(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(n * sizeof(float)));
    check(in.gcount() == static_cast<std::streamsize>(n * sizeof(float)), ErrorCode::FormatError,
          path + ": truncated tensor data");
    w.records.push_back(std::move(r));
  }
  return w;
}

void apply_weights(RestorationModel<float>& model, const ModelWeights& weights) {
  check(weights.hash == spec_hash(model.spec()), ErrorCode::SpecMismatch,
        "weight file was produced by a different architecture");

  auto& reg = model.registry();
  const size_t expected = reg.params.size() + reg.buffers.size();
  check(weights.records.size() == expected, ErrorCode::SpecMismatch,
        "weight file holds " + std::to_string(weights.records.size()) + " tensors, model needs " +
            std::to_string(expected));

  size_t i = 0;
  auto copy_into = [&](const std::string& name, Tensor<float>& dst) {
    const WeightRecord& r = weights.records[i++];
    check(r.path == name, ErrorCode::SpecMismatch,
          "weight record order mismatch: expected " + name + ", found " + r.path);
    check(r.shape == dst.shape(), ErrorCode::SpecMismatch,
          name + ": stored shape " + r.shape.str() + " does not match model shape " + dst.shape().str());
    std::copy(r.data.begin(), r.data.end(), dst.data());
  };
  for (auto& [name, p] : reg.params) copy_into(name, p->value);
  for (auto& [name, b] : reg.buffers) copy_into(name, *b);
}

void load_weights(RestorationModel<float>& model, const std::string& path) {
  apply_weights(model, read_weights(path));
}

}  // namespace udc
