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

#ifndef MERC_PARAM_IO_H_
#define MERC_PARAM_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "merc/layers.h"
#include "merc/tensor.h"

namespace merc {

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// ADP1 layout (little-endian): "ADP1", then until end of file, per tensor:
//   u32 name_length | name bytes | u32 rank | u32 dims[rank] | f32 payload
std::vector<std::uint8_t> encode_adp1(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_adp1(std::span<const std::uint8_t> bytes,
                                     const std::string& source);

void write_adp1(std::span<const NamedTensor> tensors, const std::filesystem::path& path);
std::vector<NamedTensor> read_adp1(const std::filesystem::path& path);

NamedTensor to_named(const std::string& name, const Tensor<float>& t);
NamedTensor to_named(const std::string& name, const std::vector<float>& v);

// Lookup helpers for loaders; throw a format error when the tensor is
// missing or its shape differs from `expected`.
const NamedTensor& find_tensor(std::span<const NamedTensor> tensors, const std::string& name);
Tensor<float> load_tensor(std::span<const NamedTensor> tensors, const std::string& name,
                          const Shape& expected);

// Parameters are stored under their own names. load_params fills each
// parameter in place, using its current shape as the expected one.
void append_params(std::vector<NamedTensor>& out, const std::vector<Param<float>*>& params);
void load_params(std::span<const NamedTensor> tensors, const std::vector<Param<float>*>& params);

}  // namespace merc

#endif  // MERC_PARAM_IO_H_
