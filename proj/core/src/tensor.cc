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

#include "merc/tensor.h"

#include <Eigen/Core>

namespace merc {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<const RowMatrix<T>> view(const Tensor<T>& t) {
  return Eigen::Map<const RowMatrix<T>>(t.data(), t.rows(), t.cols());
}

template <typename T>
Eigen::Map<RowMatrix<T>> view(Tensor<T>& t) {
  return Eigen::Map<RowMatrix<T>>(t.data(), t.rows(), t.cols());
}

template <typename T>
void require_rank2(const Tensor<T>& t, const char* what) {
  if (t.rank() != 2) {
    throw Error(ErrorKind::kDimension,
                std::string(what) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::kDimension, "matmul_nt: inner dimension mismatch " +
                                           shape_string(a.shape()) + " x " +
                                           shape_string(b.shape()) + "^T");
  }
  Tensor<T> out({a.rows(), b.rows()});
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

template <typename T>
Tensor<T> matmul_nn(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul_nn");
  require_rank2(b, "matmul_nn");
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::kDimension, "matmul_nn: inner dimension mismatch " +
                                           shape_string(a.shape()) + " x " +
                                           shape_string(b.shape()));
  }
  Tensor<T> out({a.rows(), b.cols()});
  view(out).noalias() = view(a) * view(b);
  return out;
}

template <typename T>
void matmul_tn_accumulate(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  require_rank2(a, "matmul_tn");
  require_rank2(b, "matmul_tn");
  require_rank2(out, "matmul_tn");
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw Error(ErrorKind::kDimension, "matmul_tn: shape mismatch");
  }
  view(out).noalias() += view(a).transpose() * view(b);
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t width) {
  require_rank2(x, "slice_cols");
  if (begin + width > x.cols()) {
    throw Error(ErrorKind::kDimension, "slice_cols: range out of bounds");
  }
  Tensor<T> out({x.rows(), width});
  view(out) = view(x).middleCols(begin, width);
  return out;
}

template <typename T>
void assign_cols(Tensor<T>& dst, std::size_t begin, const Tensor<T>& src) {
  require_rank2(dst, "assign_cols");
  require_rank2(src, "assign_cols");
  if (src.rows() != dst.rows() || begin + src.cols() > dst.cols()) {
    throw Error(ErrorKind::kDimension, "assign_cols: range out of bounds");
  }
  view(dst).middleCols(begin, src.cols()) = view(src);
}

#define MERC_INSTANTIATE(T)                                                        \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> matmul_nn(const Tensor<T>&, const Tensor<T>&);                \
  template void matmul_tn_accumulate(const Tensor<T>&, const Tensor<T>&, Tensor<T>&); \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);        \
  template void assign_cols(Tensor<T>&, std::size_t, const Tensor<T>&);

MERC_INSTANTIATE(float)
MERC_INSTANTIATE(double)
#undef MERC_INSTANTIATE

}  // namespace merc
