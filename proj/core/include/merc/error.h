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

#ifndef MERC_ERROR_H_
#define MERC_ERROR_H_

#include <stdexcept>
#include <string>

namespace merc {

// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kDimension,
  kInvalidBatch,
  kConfig,
  kLabel,
  kTaxonomy,
  kInput,
  kDegenerateVector,
  kUnsupportedLayout,
  kAlignment,
  kPooling,
  kBatch,
  kNumeric,
  kCheckFailure,
  kData,
  kManifest,
  kFormat,
  kCorruption,
  kIo,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace merc

#endif  // MERC_ERROR_H_
