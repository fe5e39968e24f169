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


// Independent reference implementations and check harnesses shared by the
// unit tests and the acceptance runner.

#ifndef MERC_TESTS_SUPPORT_ORACLES_H_
#define MERC_TESTS_SUPPORT_ORACLES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "merc/gradcheck.h"
#include "merc/qc.h"
#include "merc/tensor.h"

namespace merc::testing {

// Plain recursion over the three edit operations, no memoization. Only for
// short strings (length <= 8 keeps it well under a second per pair).
std::size_t recursive_edit_distance(const std::u32string& a, const std::u32string& b);

// 1 - d / max(|a|, |b|) on folded text, built on recursive_edit_distance.
double reference_levenshtein_similarity(const std::string& a, const std::string& b);

// h_t = exp(delta_t A) h_{t-1} + delta_t B_t u_t, y_t = C_t . h_t + D u_t,
// written as a direct per-(t, c, n) loop with std::exp.
Tensor<double> naive_selective_scan(const Tensor<double>& u, const Tensor<double>& delta,
                                    const Tensor<double>& A, const Tensor<double>& B,
                                    const Tensor<double>& C, const Tensor<double>& D);

struct AlignmentCase {
  std::string label;
  std::string original;
  std::string asr;
  std::vector<float> emb_original;  // 768-d
  std::vector<float> emb_asr;
  RejectReason expected;
};

// Twenty hand-specified alignment-gate cases with their expected decision,
// including the exact threshold boundaries and the "Yeah!" fixture.
std::vector<AlignmentCase> alignment_table();

// Largest |a - b| over all entries; shapes must match.
double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b);
double max_abs_diff(const Tensor<float>& a, const Tensor<float>& b);

struct GradCase {
  std::string name;
  GradCheckResult result;
};

// Finite-difference checks (64-bit, central differences) of each layer's
// analytic gradient, inputs and parameters included.
GradCase check_linear(std::uint64_t seed);
GradCase check_batchnorm(std::uint64_t seed);
GradCase check_relu(std::uint64_t seed);
GradCase check_silu(std::uint64_t seed);
GradCase check_softplus(std::uint64_t seed);
GradCase check_dropout(std::uint64_t seed);
GradCase check_loss(std::uint64_t seed);
GradCase check_adapter(std::uint64_t seed);
GradCase check_causal_conv(std::uint64_t seed);
GradCase check_scan(std::uint64_t seed);
// Block + masked mean pool + classifier + weighted smoothed CE, every
// parameter and the input. d_model 8, d_state 4, d_conv 4; `lengths` are the
// packed sequence lengths.
GradCase check_mamba_model(std::uint64_t seed, std::vector<std::size_t> lengths);

// Non-scan layers (threshold 1e-6) and the scan-bearing ones (1e-4).
std::vector<GradCase> dense_gradient_suite(std::uint64_t seed);
std::vector<GradCase> scan_gradient_suite(std::uint64_t seed);

}  // namespace merc::testing

#endif  // MERC_TESTS_SUPPORT_ORACLES_H_
