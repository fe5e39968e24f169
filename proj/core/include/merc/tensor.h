// Copyright 2026 The merc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MERC_TENSOR_H_
#define MERC_TENSOR_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "merc/error.h"

namespace merc {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Cache-line aligned storage. Vectorized elementwise kernels peel unaligned
// heads with scalar code, so without it results would depend on where the
// allocator happened to place a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

// Dense row-major tensor. Training runs in float, gradient checks in double.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), values_(checked_count(shape_), fill) {}

  Tensor(Shape shape, const std::vector<T>& values)
      : shape_(std::move(shape)), values_(values.begin(), values.end()) {
    if (values_.size() != checked_count(shape_)) {
      throw Error(ErrorKind::kDimension,
                  "tensor of shape " + shape_string(shape_) + " given " +
                      std::to_string(values_.size()) + " values");
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  T& operator()(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return values_[r * shape_[1] + c];
  }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  std::span<T> row(std::size_t r) {
    return std::span<T>(values_).subspan(r * shape_[1], shape_[1]);
  }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(values_).subspan(r * shape_[1], shape_[1]);
  }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(values_.begin(), values_.end()));
  }

  bool all_finite() const {
    for (const T v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  static std::size_t checked_count(const Shape& shape) {
    std::size_t n = 1;
    for (const std::size_t d : shape) {
      if (d == 0) {
        throw Error(ErrorKind::kDimension,
                    "tensor dimensions must be positive, got " + shape_string(shape));
      }
      n *= d;
    }
    return shape.empty() ? 0 : n;
  }

  Shape shape_;
  std::vector<T, AlignedAllocator<T>> values_;
};

// Throws a dimension error unless `t` is a rank-2 tensor with `cols` columns.
template <typename T>
void require_matrix(const Tensor<T>& t, std::size_t cols, const char* what) {
  if (t.rank() != 2 || t.cols() != cols) {
    throw Error(ErrorKind::kDimension, std::string(what) + ": expected [*, " +
                                           std::to_string(cols) + "], got " +
                                           shape_string(t.shape()));
  }
}

// Rows `index[0], index[1], ...` of a rank-2 tensor, in that order.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> index) {
  Tensor<T> out({index.size(), x.cols()});
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto src = x.row(index[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// Dense kernels (Eigen-backed). All operands are rank-2 and row-major.

// a[m,k] * b[n,k]^T -> [m,n]
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

// a[m,k] * b[k,n] -> [m,n]
template <typename T>
Tensor<T> matmul_nn(const Tensor<T>& a, const Tensor<T>& b);

// out[n,k] += a[m,n]^T * b[m,k]
template <typename T>
void matmul_tn_accumulate(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out);

// Column slice [begin, begin + width) of a rank-2 tensor.
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t width);

// Writes `src` into columns [begin, begin + src.cols()) of `dst`.
template <typename T>
void assign_cols(Tensor<T>& dst, std::size_t begin, const Tensor<T>& src);

}  // namespace merc

#endif  // MERC_TENSOR_H_
