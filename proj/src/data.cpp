// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#include "udc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "udc/ops.hpp"

namespace udc {

// -------------------------------------------------------------- tone curve

template <typename T>
void tone_map_values(T* data, int64_t count) {
  const T top = std::nextafter(T(1), T(0));
  for (int64_t i = 0; i < count; ++i) {
    const T x = data[i];
    check(x >= T(0), ErrorCode::DomainError, "tone map input must be nonnegative radiance");
    const T y = x / (x + T(0.25));
    data[i] = y < top ? y : top;
  }
}

template <typename T>
void inverse_tone_map_values(T* data, int64_t count) {
  for (int64_t i = 0; i < count; ++i) {
    const T y = data[i];
    check(y >= T(0) && y < T(1), ErrorCode::DomainError, "inverse tone map needs values in [0, 1)");
    data[i] = T(0.25) * y / (T(1) - y);
  }
}

template void tone_map_values<float>(float*, int64_t);
template void tone_map_values<double>(double*, int64_t);
template void inverse_tone_map_values<float>(float*, int64_t);
template void inverse_tone_map_values<double>(double*, int64_t);

ToneMappedImage tone_map(const LinearImage& x) {
  ToneMappedImage out{x.t};
  tone_map_values(out.t.data(), out.t.size());
  return out;
}

LinearImage inverse_tone_map(const ToneMappedImage& y) {
  LinearImage out{y.t};
  inverse_tone_map_values(out.t.data(), out.t.size());
  return out;
}

// ----------------------------------------------------------------- kernels

PsfKernel synth_psf(PsfKind kind, int size, double sigma) {
  check(size >= 1 && size % 2 == 1, ErrorCode::InvalidArgument,
        "point-spread kernel size must be odd, got " + std::to_string(size));
  check(sigma > 0.0, ErrorCode::InvalidArgument, "point-spread sigma must be positive");

  Tensor<float> k({1, 1, size, size});
  if (size == 1) {
    k.data()[0] = 1.0f;
    return PsfKernel{std::move(k), false};
  }

  const int c = size / 2;
  std::vector<double> acc(static_cast<size_t>(size) * size, 0.0);
  auto accumulate = [&](auto&& f, double mass) {
    double sum = 0.0;
    std::vector<double> tmp(acc.size());
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        tmp[static_cast<size_t>(y) * size + x] = f(y - c, x - c);
        sum += tmp[static_cast<size_t>(y) * size + x];
      }
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += mass * tmp[i] / sum;
  };

  const double core_mass = kind == PsfKind::GaussianSpikes ? 0.9 : 1.0;
  accumulate([&](int dy, int dx) { return std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma)); }, core_mass);
  if (kind == PsfKind::GaussianSpikes) {
    // Thin streaks along both axes carry one tenth of the mass: the
    // diffraction pattern a wiring grid stamps onto a point light.
    const double thin = std::max(sigma / 4.0, 0.35);
    const double reach = static_cast<double>(c);
    accumulate(
        [&](int dy, int dx) {
          return std::exp(-dy * dy / (2.0 * thin * thin)) * std::exp(-std::abs(dx) / reach);
        },
        0.05);
    accumulate(
        [&](int dy, int dx) {
          return std::exp(-dx * dx / (2.0 * thin * thin)) * std::exp(-std::abs(dy) / reach);
        },
        0.05);
  }

  Tensor<float> out({1, 1, size, size});
  for (size_t i = 0; i < acc.size(); ++i) out.data()[i] = static_cast<float>(acc[i]);
  return PsfKernel{std::move(out), false};
}

// ------------------------------------------------------------------ scenes

LinearImage synth_scene(int64_t h, int64_t w, Rng& rng) {
  check(h >= 8 && w >= 8, ErrorCode::InvalidArgument, "scene extents must be at least 8 pixels");
  Tensor<float> img({1, 3, h, w});

  // Ambient gradient with a random direction, per-channel offsets.
  const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
  double base[3], span[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.05, 0.25);
    span[c] = rng.uniform(0.05, 0.25);
  }
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        const double u = (2.0 * x / (w - 1) - 1.0) * gx + (2.0 * y / (h - 1) - 1.0) * gy;
        img.at(0, c, y, x) = static_cast<float>(base[c] + span[c] * 0.5 * (u + 1.0));
      }

  auto add_blob = [&](double cy, double cx, double s, const double col[3], double amp) {
    const int64_t y0 = std::max<int64_t>(0, static_cast<int64_t>(cy - 3 * s));
    const int64_t y1 = std::min<int64_t>(h - 1, static_cast<int64_t>(cy + 3 * s));
    const int64_t x0 = std::max<int64_t>(0, static_cast<int64_t>(cx - 3 * s));
    const int64_t x1 = std::min<int64_t>(w - 1, static_cast<int64_t>(cx + 3 * s));
    for (int64_t y = y0; y <= y1; ++y)
      for (int64_t x = x0; x <= x1; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double v = amp * std::exp(-d2 / (2.0 * s * s));
        for (int c = 0; c < 3; ++c) img.at(0, c, y, x) += static_cast<float>(v * col[c]);
      }
  };

  // Soft colored blobs.
  const int blobs = 3 + static_cast<int>(rng.uniform_int(4));
  for (int i = 0; i < blobs; ++i) {
    double col[3] = {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
    add_blob(rng.uniform(0.0, h - 1.0), rng.uniform(0.0, w - 1.0),
             rng.uniform(static_cast<double>(h) / 16.0, static_cast<double>(h) / 5.0), col,
             rng.uniform(0.1, 0.7));
  }

  // Hard-edged rectangles and discs give the gradient loss structure to fit.
  const int shapes = 2 + static_cast<int>(rng.uniform_int(3));
  for (int i = 0; i < shapes; ++i) {
    const bool disc = rng.uniform() < 0.5;
    const double amp = rng.uniform(0.1, 0.6);
    double col[3] = {rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)};
    const int64_t cy = rng.uniform_int(h), cx = rng.uniform_int(w);
    const int64_t ry = 2 + rng.uniform_int(std::max<int64_t>(1, h / 6));
    const int64_t rx = 2 + rng.uniform_int(std::max<int64_t>(1, w / 6));
    for (int64_t y = std::max<int64_t>(0, cy - ry); y <= std::min(h - 1, cy + ry); ++y)
      for (int64_t x = std::max<int64_t>(0, cx - rx); x <= std::min(w - 1, cx + rx); ++x) {
        if (disc) {
          const double dy = static_cast<double>(y - cy) / ry, dx = static_cast<double>(x - cx) / rx;
          if (dy * dy + dx * dx > 1.0) continue;
        }
        for (int c = 0; c < 3; ++c) img.at(0, c, y, x) += static_cast<float>(amp * col[c]);
      }
  }

  // Small emitters far above 1.0: the HDR highlights that bloom into glare.
  const int emitters = 1 + static_cast<int>(rng.uniform_int(3));
  for (int i = 0; i < emitters; ++i) {
    double col[3] = {rng.uniform(0.7, 1.0), rng.uniform(0.7, 1.0), rng.uniform(0.7, 1.0)};
    add_blob(rng.uniform(0.1, 0.9) * (h - 1), rng.uniform(0.1, 0.9) * (w - 1),
             rng.uniform(1.5, std::max(2.0, static_cast<double>(h) / 24.0)), col, rng.uniform(2.0, 8.0));
  }
  return LinearImage{std::move(img)};
}

// -------------------------------------------------------------- simulation

std::pair<ToneMappedImage, ToneMappedImage> simulate_udc(const LinearImage& clean, const PsfKernel& psf,
                                                         float noise_sigma, float saturation, Rng& rng) {
  const Shape s = clean.t.shape();
  check(noise_sigma >= 0.0f, ErrorCode::InvalidArgument, "noise sigma must be nonnegative");
  check(saturation > 0.0f, ErrorCode::InvalidArgument, "saturation level must be positive");

  const int64_t k = psf.k.shape().h;
  Tensor<float> blurred;
  if (k == 1) {
    blurred = clean.t;
    const float kv = psf.k.data()[0];
    for (auto& v : blurred.vec()) v *= kv;
  } else {
    // Depthwise blur with the kernel replicated per channel over a
    // reflect-padded frame keeps border brightness unchanged.
    Tensor<float> kk({s.c, 1, k, k});
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t i = 0; i < k * k; ++i) kk.plane(c, 0)[i] = psf.k.data()[i];
    auto padded = pad_spatial<float>(nullptr, constant(clean.t), k / 2, k / 2, k / 2, k / 2, PadMode::Reflect);
    blurred = depthwise_conv2d<float>(nullptr, padded, constant(std::move(kk)), nullptr, 1, 0)->value;
  }

  for (auto& v : blurred.vec()) {
    if (noise_sigma > 0.0f) v += static_cast<float>(rng.normal()) * noise_sigma;
    v = std::clamp(v, 0.0f, saturation);
  }
  Tensor<float> target = clean.t;
  for (auto& v : target.vec()) v = std::clamp(v, 0.0f, saturation);

  return {tone_map(LinearImage{std::move(blurred)}), tone_map(LinearImage{std::move(target)})};
}

// ------------------------------------------------------------- patch logic

std::vector<Tensor<float>> extract_patches(const Tensor<float>& image, int64_t size) {
  const Shape s = image.shape();
  check(size >= 1 && s.h % size == 0 && s.w % size == 0, ErrorCode::ShapeMismatch,
        "patch size " + std::to_string(size) + " must divide image extents " + s.str());
  std::vector<Tensor<float>> out;
  out.reserve(static_cast<size_t>((s.h / size) * (s.w / size)));
  for (int64_t y0 = 0; y0 < s.h; y0 += size)
    for (int64_t x0 = 0; x0 < s.w; x0 += size)
      out.push_back(slice_spatial<float>(nullptr, constant(image), y0, x0, size, size)->value);
  return out;
}

Tensor<float> assemble_patches(const std::vector<Tensor<float>>& patches, int64_t grid_h, int64_t grid_w) {
  check(!patches.empty() && static_cast<int64_t>(patches.size()) == grid_h * grid_w, ErrorCode::ShapeMismatch,
        "patch count does not fill the requested grid");
  const Shape p = patches[0].shape();
  Tensor<float> out({p.n, p.c, p.h * grid_h, p.w * grid_w});
  for (int64_t gy = 0; gy < grid_h; ++gy)
    for (int64_t gx = 0; gx < grid_w; ++gx) {
      const Tensor<float>& t = patches[static_cast<size_t>(gy * grid_w + gx)];
      check(t.shape() == p, ErrorCode::ShapeMismatch, "patches must share one shape");
      for (int64_t n = 0; n < p.n; ++n)
        for (int64_t c = 0; c < p.c; ++c)
          for (int64_t y = 0; y < p.h; ++y)
            for (int64_t x = 0; x < p.w; ++x) out.at(n, c, gy * p.h + y, gx * p.w + x) = t.at(n, c, y, x);
    }
  return out;
}

// ------------------------------------------------------------ augmentation

Tensor<float> apply_augment(const Tensor<float>& image, AugmentKind kind) {
  const Shape s = image.shape();
  const bool swaps = kind == AugmentKind::Rot90 || kind == AugmentKind::Rot270;
  Tensor<float> out(swaps ? Shape{s.n, s.c, s.w, s.h} : s);
  const Shape o = out.shape();
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < o.h; ++y)
        for (int64_t x = 0; x < o.w; ++x) {
          int64_t sy = y, sx = x;
          switch (kind) {
            case AugmentKind::Identity: break;
            case AugmentKind::HFlip: sx = s.w - 1 - x; break;
            case AugmentKind::VFlip: sy = s.h - 1 - y; break;
            case AugmentKind::Rot90:  // quarter turn clockwise
              sy = s.h - 1 - x;
              sx = y;
              break;
            case AugmentKind::Rot180:
              sy = s.h - 1 - y;
              sx = s.w - 1 - x;
              break;
            case AugmentKind::Rot270:  // quarter turn counterclockwise
              sy = x;
              sx = s.w - 1 - y;
              break;
          }
          out.at(n, c, y, x) = image.at(n, c, sy, sx);
        }
  return out;
}

std::pair<Tensor<float>, Tensor<float>> augment_pair(const Tensor<float>& a, const Tensor<float>& b, Rng& rng) {
  check(a.shape() == b.shape(), ErrorCode::ShapeMismatch,
        "augmentation pair must share one shape, got " + a.shape().str() + " vs " + b.shape().str());
  const auto kind = static_cast<AugmentKind>(rng.uniform_int(6));
  return {apply_augment(a, kind), apply_augment(b, kind)};
}

// ---------------------------------------------------------------- manifest

void write_manifest(const std::string& path, const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::ofstream out(path, std::ios::trunc);
  check(out.good(), ErrorCode::IoError, "cannot write manifest " + path);
  for (const auto& [degraded, target] : pairs) out << degraded << '\t' << target << '\n';
  check(out.good(), ErrorCode::IoError, "short write to manifest " + path);
}

std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorCode::IoError, "cannot open manifest " + path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    check(tab != std::string::npos && tab > 0 && tab + 1 < line.size() && line.find('\t', tab + 1) == std::string::npos,
          ErrorCode::FormatError,
          path + ":" + std::to_string(lineno) + ": manifest lines are 'degraded<TAB>target'");
    pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return pairs;
}

// ----------------------------------------------------------------- padding

Tensor<float> pad_to_multiple(const Tensor<float>& image, int64_t multiple) {
  check(multiple >= 1, ErrorCode::InvalidArgument, "padding multiple must be positive");
  const Shape s = image.shape();
  const int64_t ph = (multiple - s.h % multiple) % multiple;
  const int64_t pw = (multiple - s.w % multiple) % multiple;
  if (ph == 0 && pw == 0) return image;
  return pad_spatial<float>(nullptr, constant(image), 0, ph, 0, pw, PadMode::Reflect)->value;
}

Tensor<float> crop_to(const Tensor<float>& image, int64_t h, int64_t w) {
  return slice_spatial<float>(nullptr, constant(image), 0, 0, h, w)->value;
}

}  // namespace udc
