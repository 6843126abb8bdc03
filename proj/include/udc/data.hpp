// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic paired-data pipeline: the tone-mapping curve between linear
// radiance and network inputs, procedural HDR scene generation, diffraction
// point-spread kernels, the degradation simulator, patch extraction, paired
// augmentation, dataset manifests, and divisibility padding.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "udc/rng.hpp"
#include "udc/tensor.hpp"

namespace udc {

// ------------------------------------------------------------ domain types

// Linear scene radiance: nonnegative, unbounded above (HDR).
struct LinearImage {
  Tensor<float> t;
};

// Network-domain image: every value in [0, 1).
struct ToneMappedImage {
  Tensor<float> t;
};

// ------------------------------------------------------------- tone curve

// y = x / (x + 0.25), monotone from [0, inf) onto [0, 1). Results are
// clamped to the largest representable value below 1 so the upper bound is
// strict even when rounding would saturate.
template <typename T>
void tone_map_values(T* data, int64_t count);

// x = 0.25 y / (1 - y); rejects y outside [0, 1).
template <typename T>
void inverse_tone_map_values(T* data, int64_t count);

ToneMappedImage tone_map(const LinearImage& x);
LinearImage inverse_tone_map(const ToneMappedImage& y);

// ---------------------------------------------------------------- kernels

enum class PsfKind { Gaussian, GaussianSpikes };

// Nonnegative blur kernel normalized to unit mass, shared across channels.
struct PsfKernel {
  Tensor<float> k;  // (1, 1, size, size)
  bool per_channel = false;
};

// Isotropic Gaussian, optionally blended with horizontal/vertical streaks
// (one tenth of the kernel mass) mimicking pixel-grid diffraction. Size must
// be odd; size 1 degenerates to the identity kernel.
PsfKernel synth_psf(PsfKind kind, int size, double sigma);

// ------------------------------------------------------------- simulation

// Procedural HDR scene: a smooth ambient gradient, soft colored blobs, a
// few hard-edged shapes, and one to three small emitters far above 1.0 that
// clip into glare after degradation.
LinearImage synth_scene(int64_t h, int64_t w, Rng& rng);

// degraded = tone_map(clip(psf * clean + noise, 0, saturation)),
// target   = tone_map(clip(clean, 0, saturation)).
// The blur uses reflect padding so frames keep their brightness at borders.
std::pair<ToneMappedImage, ToneMappedImage> simulate_udc(const LinearImage& clean, const PsfKernel& psf,
                                                         float noise_sigma, float saturation, Rng& rng);

// ------------------------------------------------------------ patch logic

// Row-major non-overlapping tiling; both extents must divide evenly.
std::vector<Tensor<float>> extract_patches(const Tensor<float>& image, int64_t size);

// Inverse of extract_patches given the original grid dimensions.
Tensor<float> assemble_patches(const std::vector<Tensor<float>>& patches, int64_t grid_h, int64_t grid_w);

// ------------------------------------------------------------ augmentation

enum class AugmentKind { Identity, HFlip, VFlip, Rot90, Rot180, Rot270 };

Tensor<float> apply_augment(const Tensor<float>& image, AugmentKind kind);

// Draws one transform and applies it to both images of the pair.
std::pair<Tensor<float>, Tensor<float>> augment_pair(const Tensor<float>& a, const Tensor<float>& b, Rng& rng);

// --------------------------------------------------------------- manifest

// Line-oriented dataset index: one "degraded<TAB>target" pair per line.
void write_manifest(const std::string& path, const std::vector<std::pair<std::string, std::string>>& pairs);
std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path);

// ---------------------------------------------------------------- padding

// Reflect-pads the bottom/right edges up to the next multiple of `multiple`.
// Returns the padded tensor; original extents are recoverable via crop_to.
Tensor<float> pad_to_multiple(const Tensor<float>& image, int64_t multiple);
Tensor<float> crop_to(const Tensor<float>& image, int64_t h, int64_t w);

}  // namespace udc
