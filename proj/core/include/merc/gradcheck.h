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

#ifndef MERC_GRADCHECK_H_
#define MERC_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace merc {

struct GradCheckResult {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Relative error is |analytic - numeric| / max(|numeric|, denom_floor).
  double denom_floor = 1e-3;
  // Coordinates to probe; empty probes all of them.
  std::vector<std::size_t> indices;
};

// Central finite differences against an analytic gradient. `loss` is
// re-evaluated with single coordinates of `params` perturbed in place; each
// coordinate is restored afterwards. Throws a check failure on a non-finite
// loss.
GradCheckResult grad_check(std::span<double> params, std::span<const double> analytic,
                           const std::function<double()>& loss,
                           const GradCheckOptions& options = {});

// Up to `count` distinct indices from [0, n), deterministic for a seed.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count,
                                        unsigned long long seed);

}  // namespace merc

#endif  // MERC_GRADCHECK_H_
