// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "udc/error.hpp"

namespace udc {

// Dense NCHW shape. All four extents are >= 1 for a valid tensor.
struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t numel() const { return n * c * h * w; }
  bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }
  bool operator==(const Shape& o) const = default;
  std::string str() const;
};

// Value-type dense tensor, row-major NCHW. The scalar type selects the
// compute precision: float for training/inference, double for the
// finite-difference verification suite.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s) : shape_(s) {
    check(s.valid(), ErrorCode::ShapeMismatch, "tensor shape must be positive in all dims, got " + s.str());
    data_.assign(static_cast<size_t>(s.numel()), T(0));
  }

  static Tensor zeros(Shape s) { return Tensor(s); }
  static Tensor full(Shape s, T v) {
    Tensor t(s);
    for (auto& x : t.data_) x = v;
    return t;
  }
  static Tensor ones(Shape s) { return full(s, T(1)); }
  static Tensor from(Shape s, std::vector<T> values) {
    Tensor t;
    check(s.valid() && static_cast<size_t>(s.numel()) == values.size(), ErrorCode::ShapeMismatch,
          "value count " + std::to_string(values.size()) + " does not fill shape " + s.str());
    t.shape_ = s;
    t.data_ = std::move(values);
    return t;
  }

  const Shape& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_.c + c) * shape_.h + h) * shape_.w + w)];
  }
  T at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_.c + c) * shape_.h + h) * shape_.w + w)];
  }

  // Start of the (n, c) plane; planes are contiguous h*w blocks.
  T* plane(int64_t n, int64_t c) { return data() + (n * shape_.c + c) * shape_.h * shape_.w; }
  const T* plane(int64_t n, int64_t c) const { return data() + (n * shape_.c + c) * shape_.h * shape_.w; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(T v) {
    for (auto& x : data_) x = v;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

}  // namespace udc
