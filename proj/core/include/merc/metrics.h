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

#ifndef MERC_METRICS_H_
#define MERC_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "merc/labels.h"

namespace merc {

// K x K counts, rows = gold class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes)
      : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::int64_t at(std::size_t gold, std::size_t pred) const {
    return counts_[gold * classes_ + pred];
  }
  void add(std::size_t gold, std::size_t pred, std::int64_t n = 1) {
    counts_[gold * classes_ + pred] += n;
  }

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t support(std::size_t k) const;    // row sum
  std::int64_t predicted(std::size_t k) const;  // column sum

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::int64_t> counts_;
};

// Class indices must lie in [0, classes). Throws an input error on length
// mismatch and a label error on out-of-range indices.
ConfusionMatrix confusion(std::span<const int> golds, std::span<const int> preds,
                          std::size_t classes);

struct ClassStats {
  std::int64_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // 0 when precision + recall == 0
};

std::vector<ClassStats> class_stats(const ConfusionMatrix& cm);

// All three throw an input error on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
// Support-weighted mean of per-class F1.
double weighted_f1(const ConfusionMatrix& cm);
// Unweighted mean of per-class F1 over classes that occur as gold or prediction.
double macro_f1(const ConfusionMatrix& cm);

struct RenderedReport {
  std::string text;
  std::string csv;
};

// Text: row-normalized confusion percentages (one decimal), per-class
// accuracy, overall accuracy and weighted F1.
// CSV: label,support,precision,recall,f1,per_class_accuracy, one row per
// class, then a `summary` row carrying the total support, weighted F1 in the
// f1 column and accuracy in the per_class_accuracy column. Numbers are written
// in shortest round-trip form.
RenderedReport render_report(const ConfusionMatrix& cm, const EmotionScheme& scheme);

struct ReportRow {
  std::string label;
  std::int64_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double per_class_accuracy = 0.0;
};

struct ParsedReport {
  std::vector<ReportRow> classes;
  std::int64_t total = 0;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
};

// Parses the CSV emitted by render_report. Throws a format error on schema
// violations.
ParsedReport parse_report_csv(const std::string& csv);

}  // namespace merc

#endif  // MERC_METRICS_H_
