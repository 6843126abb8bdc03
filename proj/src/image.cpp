// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#include "udc/image.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

namespace udc {

namespace {

// Reads the next header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int64_t parse_dim(const std::string& tok, const std::string& path) {
  check(!tok.empty() && tok.find_first_not_of("0123456789") == std::string::npos, ErrorCode::FormatError,
        path + ": corrupt image header near '" + tok + "'");
  return std::stoll(tok);
}

}  // namespace

Tensor<float> load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), ErrorCode::IoError, "cannot open image file " + path);

  const std::string magic = next_token(in);
  check(magic == "P6" || magic == "P5", ErrorCode::FormatError,
        path + ": unsupported image format '" + magic + "' (binary P6/P5 expected)");
  const bool gray = magic == "P5";
  const int64_t w = parse_dim(next_token(in), path);
  const int64_t h = parse_dim(next_token(in), path);
  const int64_t maxval = parse_dim(next_token(in), path);
  check(w >= 1 && h >= 1, ErrorCode::FormatError, path + ": degenerate image dimensions");
  check(maxval == 255 || maxval == 65535, ErrorCode::FormatError,
        path + ": unsupported sample depth (maxval " + std::to_string(maxval) + ")");
  // The single whitespace byte after maxval was already consumed by the
  // tokenizer's terminating isspace.

  const int64_t samples = w * h * (gray ? 1 : 3);
  const int64_t bytes = samples * (maxval == 255 ? 1 : 2);
  std::vector<unsigned char> raw(static_cast<size_t>(bytes));
  in.read(reinterpret_cast<char*>(raw.data()), bytes);
  check(in.gcount() == bytes, ErrorCode::FormatError, path + ": truncated pixel data");

  Tensor<float> img({1, 3, h, w});
  const float scale = 1.0f / static_cast<float>(maxval);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        const int64_t s = (y * w + x) * (gray ? 1 : 3) + (gray ? 0 : c);
        uint32_t v;
        if (maxval == 255)
          v = raw[static_cast<size_t>(s)];
        else
          v = (static_cast<uint32_t>(raw[static_cast<size_t>(2 * s)]) << 8) | raw[static_cast<size_t>(2 * s + 1)];
        img.at(0, c, y, x) = static_cast<float>(v) * scale;
      }
    }
  return img;
}

void save_image(const Tensor<float>& image, const std::string& path, int depth) {
  const Shape s = image.shape();
  check(s.n == 1 && s.c == 3, ErrorCode::ShapeMismatch,
        "image to save must be (1,3,h,w), got " + s.str());
  check(depth == 8 || depth == 16, ErrorCode::InvalidArgument,
        "sample depth must be 8 or 16, got " + std::to_string(depth));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), ErrorCode::IoError, "cannot write image file " + path);
  const uint32_t maxval = depth == 8 ? 255u : 65535u;
  out << "P6\n" << s.w << " " << s.h << "\n" << maxval << "\n";

  std::vector<unsigned char> raw;
  raw.reserve(static_cast<size_t>(s.h * s.w * 3 * (depth == 8 ? 1 : 2)));
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        float v = image.at(0, c, y, x);
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        const uint32_t q = static_cast<uint32_t>(std::lround(static_cast<double>(v) * maxval));
        if (depth == 8) {
          raw.push_back(static_cast<unsigned char>(q));
        } else {
          raw.push_back(static_cast<unsigned char>(q >> 8));
          raw.push_back(static_cast<unsigned char>(q & 0xff));
        }
      }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  check(out.good(), ErrorCode::IoError, "short write to image file " + path);
}

}  // namespace udc
