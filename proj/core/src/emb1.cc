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

#include "merc/emb1.h"

#include <cstring>
#include <fstream>

#include "byte_io.h"

namespace merc {

namespace detail {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace detail

EmbeddingMatrix::EmbeddingMatrix(std::uint32_t d, std::vector<float> v)
    : dim(d), values(std::move(v)) {
  if (dim == 0 || values.size() % dim != 0) {
    throw Error(ErrorKind::kDimension, "embedding matrix: " + std::to_string(values.size()) +
                                           " values do not fill rows of " +
                                           std::to_string(dim));
  }
}

void EmbeddingMatrix::append(std::span<const float> r) {
  if (r.size() != dim) {
    throw Error(ErrorKind::kDimension, "embedding matrix: appending row of " +
                                           std::to_string(r.size()) + " to dim " +
                                           std::to_string(dim));
  }
  values.insert(values.end(), r.begin(), r.end());
}

Tensor<float> EmbeddingMatrix::to_tensor() const {
  return Tensor<float>({count(), dim}, values);
}

EmbeddingMatrix EmbeddingMatrix::from_tensor(const Tensor<float>& t) {
  if (t.rank() != 2) throw Error(ErrorKind::kDimension, "embedding matrix needs a rank-2 tensor");
  return EmbeddingMatrix(static_cast<std::uint32_t>(t.cols()),
                         std::vector<float>(t.values().begin(), t.values().end()));
}

std::vector<std::uint8_t> encode_emb1(const EmbeddingMatrix& m) {
  if (m.dim == 0) throw Error(ErrorKind::kFormat, "EMB1: dimension must be positive");
  detail::ByteWriter w;
  w.bytes("EMB1", 4);
  w.uint<std::uint16_t>(kEmb1Version);
  w.uint<std::uint32_t>(m.dim);
  w.uint<std::uint64_t>(m.count());
  for (const float v : m.values) w.f32(v);
  return w.take();
}

EmbeddingMatrix decode_emb1(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  const auto magic = r.take(4, ErrorKind::kFormat, "header");
  if (std::memcmp(magic.data(), "EMB1", 4) != 0) {
    throw Error(ErrorKind::kFormat, source + ": bad magic (not an EMB1 file)");
  }
  const auto version = r.uint<std::uint16_t>(ErrorKind::kFormat, "header");
  if (version != kEmb1Version) {
    throw Error(ErrorKind::kFormat, source + ": unsupported EMB1 version " +
                                        std::to_string(version));
  }
  const auto dim = r.uint<std::uint32_t>(ErrorKind::kFormat, "header");
  const auto count = r.uint<std::uint64_t>(ErrorKind::kFormat, "header");
  if (dim == 0) throw Error(ErrorKind::kFormat, source + ": EMB1 dimension is zero");
  const std::uint64_t expected = count * dim * 4;
  if (r.remaining() != expected) {
    throw Error(ErrorKind::kCorruption,
                source + ": header promises " + std::to_string(count) + " rows of dim " +
                    std::to_string(dim) + " (" + std::to_string(expected) +
                    " payload bytes), found " + std::to_string(r.remaining()));
  }
  EmbeddingMatrix m;
  m.dim = dim;
  m.values.resize(count * dim);
  for (float& v : m.values) v = r.f32();
  return m;
}

void write_emb1(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_emb1(m));
}

EmbeddingMatrix read_emb1(const std::filesystem::path& path) {
  return decode_emb1(detail::read_file_bytes(path), path.string());
}

}  // namespace merc
