// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Lossless raster I/O in the portable pixmap family: binary RGB (P6) at 8 or
// 16 bits per sample, plus binary grayscale (P5) reads that replicate to
// three channels. Values map to [0, 1] floats in memory.

#pragma once

#include <string>

#include "udc/tensor.hpp"

namespace udc {

// Decodes a P6/P5 file into a (1, 3, h, w) tensor scaled to [0, 1].
Tensor<float> load_image(const std::string& path);

// Clamps to [0, 1], quantizes to the requested depth (8 or 16 bits), and
// writes a binary P6 file. 16-bit samples are big-endian per the format.
void save_image(const Tensor<float>& image, const std::string& path, int depth = 16);

}  // namespace udc
