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

#ifndef MERC_EMB1_H_
#define MERC_EMB1_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "merc/tensor.h"

namespace merc {

// Row-major float32 embedding matrix. `count() == 0` is valid.
struct EmbeddingMatrix {
  std::uint32_t dim = 0;
  std::vector<float> values;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::uint32_t d, std::vector<float> v);

  std::size_t count() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }
  void append(std::span<const float> row);

  // Requires count() > 0.
  Tensor<float> to_tensor() const;
  static EmbeddingMatrix from_tensor(const Tensor<float>& t);

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

// EMB1 layout (little-endian):
//   "EMB1" | u16 version = 1 | u32 dim | u64 count | count*dim f32 row-major
inline constexpr std::uint16_t kEmb1Version = 1;

std::vector<std::uint8_t> encode_emb1(const EmbeddingMatrix& m);
// Bad magic/version/dim -> format error; payload shorter or longer than the
// header promises -> corruption error.
EmbeddingMatrix decode_emb1(std::span<const std::uint8_t> bytes, const std::string& source);

void write_emb1(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_emb1(const std::filesystem::path& path);

}  // namespace merc

#endif  // MERC_EMB1_H_
