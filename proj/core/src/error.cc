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

#include "merc/error.h"

namespace merc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kInvalidBatch: return "invalid batch";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kLabel: return "label error";
    case ErrorKind::kTaxonomy: return "taxonomy error";
    case ErrorKind::kInput: return "input error";
    case ErrorKind::kDegenerateVector: return "degenerate vector";
    case ErrorKind::kUnsupportedLayout: return "unsupported layout";
    case ErrorKind::kAlignment: return "alignment error";
    case ErrorKind::kPooling: return "pooling error";
    case ErrorKind::kBatch: return "batch error";
    case ErrorKind::kNumeric: return "numeric-contract error";
    case ErrorKind::kCheckFailure: return "check failure";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kManifest: return "manifest error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kCorruption: return "corruption error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

}  // namespace merc
