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

#include "merc/param_io.h"

#include <cstring>

#include "byte_io.h"

namespace merc {

std::vector<std::uint8_t> encode_adp1(std::span<const NamedTensor> tensors) {
  detail::ByteWriter w;
  w.bytes("ADP1", 4);
  for (const NamedTensor& t : tensors) {
    std::size_t count = t.dims.empty() ? 0 : 1;
    for (const auto d : t.dims) count *= d;
    if (count != t.values.size()) {
      throw Error(ErrorKind::kDimension, "ADP1: tensor '" + t.name + "' dims do not match " +
                                             std::to_string(t.values.size()) + " values");
    }
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.dims.size()));
    for (const auto d : t.dims) w.uint<std::uint32_t>(d);
    for (const float v : t.values) w.f32(v);
  }
  return w.take();
}

std::vector<NamedTensor> decode_adp1(std::span<const std::uint8_t> bytes,
                                     const std::string& source) {
  detail::ByteReader r(bytes, source);
  const auto magic = r.take(4, ErrorKind::kFormat, "header");
  if (std::memcmp(magic.data(), "ADP1", 4) != 0) {
    throw Error(ErrorKind::kFormat, source + ": bad magic (not an ADP1 file)");
  }
  std::vector<NamedTensor> tensors;
  while (!r.done()) {
    NamedTensor t;
    const auto name_len = r.uint<std::uint32_t>(ErrorKind::kCorruption, "tensor name length");
    const auto name = r.take(name_len, ErrorKind::kCorruption, "tensor name");
    t.name.assign(name.begin(), name.end());
    const auto rank = r.uint<std::uint32_t>(ErrorKind::kCorruption, "tensor rank");
    if (rank > 8) {
      throw Error(ErrorKind::kFormat, source + ": implausible rank for '" + t.name + "'");
    }
    std::uint64_t count = rank == 0 ? 0 : 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      t.dims.push_back(r.uint<std::uint32_t>(ErrorKind::kCorruption, "tensor dims"));
      count *= t.dims.back();
    }
    r.need(count * 4, ErrorKind::kCorruption, "tensor payload");
    t.values.resize(count);
    for (float& v : t.values) v = r.f32();
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void write_adp1(std::span<const NamedTensor> tensors, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_adp1(tensors));
}

std::vector<NamedTensor> read_adp1(const std::filesystem::path& path) {
  return decode_adp1(detail::read_file_bytes(path), path.string());
}

NamedTensor to_named(const std::string& name, const Tensor<float>& t) {
  NamedTensor n;
  n.name = name;
  for (const auto d : t.shape()) n.dims.push_back(static_cast<std::uint32_t>(d));
  n.values.assign(t.values().begin(), t.values().end());
  return n;
}

NamedTensor to_named(const std::string& name, const std::vector<float>& v) {
  return NamedTensor{name, {static_cast<std::uint32_t>(v.size())}, v};
}

const NamedTensor& find_tensor(std::span<const NamedTensor> tensors, const std::string& name) {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t;
  }
  throw Error(ErrorKind::kFormat, "parameter file has no tensor '" + name + "'");
}

Tensor<float> load_tensor(std::span<const NamedTensor> tensors, const std::string& name,
                          const Shape& expected) {
  const NamedTensor& t = find_tensor(tensors, name);
  Shape shape(t.dims.begin(), t.dims.end());
  if (shape != expected) {
    throw Error(ErrorKind::kFormat, "tensor '" + name + "' has shape " + shape_string(shape) +
                                        ", expected " + shape_string(expected));
  }
  return Tensor<float>(shape, t.values);
}

void append_params(std::vector<NamedTensor>& out, const std::vector<Param<float>*>& params) {
  for (const Param<float>* p : params) out.push_back(to_named(p->name, p->value));
}

void load_params(std::span<const NamedTensor> tensors, const std::vector<Param<float>*>& params) {
  for (Param<float>* p : params) {
    p->value = load_tensor(tensors, p->name, p->value.shape());
    p->grad = Tensor<float>(p->value.shape());
  }
}

}  // namespace merc
