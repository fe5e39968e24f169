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

#include "merc/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "merc/error.h"
#include "merc/rng.h"

namespace merc {
namespace {

double finite_loss(const std::function<double()>& loss) {
  const double v = loss();
  if (!std::isfinite(v)) throw Error(ErrorKind::kCheckFailure, "grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckResult grad_check(std::span<double> params, std::span<const double> analytic,
                           const std::function<double()>& loss,
                           const GradCheckOptions& options) {
  if (params.size() != analytic.size()) {
    throw Error(ErrorKind::kDimension, "grad_check: gradient size mismatch");
  }
  std::vector<std::size_t> indices = options.indices;
  if (indices.empty()) {
    indices.resize(params.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
  }

  GradCheckResult result;
  finite_loss(loss);
  for (const std::size_t i : indices) {
    const double saved = params[i];
    params[i] = saved + options.eps;
    const double up = finite_loss(loss);
    params[i] = saved - options.eps;
    const double down = finite_loss(loss);
    params[i] = saved;

    const double numeric = (up - down) / (2.0 * options.eps);
    const double abs_err = std::abs(analytic[i] - numeric);
    const double rel_err = abs_err / std::max(std::abs(numeric), options.denom_floor);
    result.max_abs_err = std::max(result.max_abs_err, abs_err);
    if (result.checked == 0 || rel_err > result.max_rel_err) {
      result.max_rel_err = rel_err;
      result.worst_index = i;
    }
    result.checked += 1;
  }
  return result;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count,
                                        unsigned long long seed) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (count >= n) return all;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(all));
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace merc
