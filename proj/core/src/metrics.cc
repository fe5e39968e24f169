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

#include "merc/metrics.h"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "merc/error.h"

namespace merc {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto c : counts_) t += c;
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t k = 0; k < classes_; ++k) t += at(k, k);
  return t;
}

std::int64_t ConfusionMatrix::support(std::size_t k) const {
  std::int64_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += at(k, p);
  return s;
}

std::int64_t ConfusionMatrix::predicted(std::size_t k) const {
  std::int64_t s = 0;
  for (std::size_t g = 0; g < classes_; ++g) s += at(g, k);
  return s;
}

ConfusionMatrix confusion(std::span<const int> golds, std::span<const int> preds,
                          std::size_t classes) {
  if (golds.size() != preds.size()) {
    throw Error(ErrorKind::kInput, "confusion: " + std::to_string(golds.size()) +
                                       " gold labels vs " + std::to_string(preds.size()) +
                                       " predictions");
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int g = golds[i];
    const int p = preds[i];
    if (g < 0 || p < 0 || static_cast<std::size_t>(g) >= classes ||
        static_cast<std::size_t>(p) >= classes) {
      throw Error(ErrorKind::kLabel, "confusion: class index out of range at sample " +
                                         std::to_string(i));
    }
    cm.add(static_cast<std::size_t>(g), static_cast<std::size_t>(p));
  }
  return cm;
}

std::vector<ClassStats> class_stats(const ConfusionMatrix& cm) {
  std::vector<ClassStats> stats(cm.classes());
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    ClassStats& s = stats[k];
    const auto tp = static_cast<double>(cm.at(k, k));
    const auto pred = static_cast<double>(cm.predicted(k));
    s.support = cm.support(k);
    s.precision = pred > 0 ? tp / pred : 0.0;
    s.recall = s.support > 0 ? tp / static_cast<double>(s.support) : 0.0;
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  }
  return stats;
}

namespace {

void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorKind::kInput, "metric undefined on an empty matrix");
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

double weighted_f1(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  const auto total = static_cast<double>(cm.total());
  double sum = 0.0;
  for (const ClassStats& s : class_stats(cm)) {
    sum += static_cast<double>(s.support) * s.f1;
  }
  return sum / total;
}

double macro_f1(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  const auto stats = class_stats(cm);
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    if (stats[k].support == 0 && cm.predicted(k) == 0) continue;
    sum += stats[k].f1;
    ++present;
  }
  return sum / present;
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

RenderedReport render_report(const ConfusionMatrix& cm, const EmotionScheme& scheme) {
  if (cm.classes() != scheme.size()) {
    throw Error(ErrorKind::kDimension, "report: matrix has " + std::to_string(cm.classes()) +
                                           " classes, scheme " + scheme.name() + " has " +
                                           std::to_string(scheme.size()));
  }
  const auto stats = class_stats(cm);
  const bool has_samples = cm.total() > 0;
  const double acc = has_samples ? accuracy(cm) : 0.0;
  const double wf1 = has_samples ? weighted_f1(cm) : 0.0;
  char buf[256];

  std::ostringstream text;
  text << "Confusion matrix (" << scheme.name() << ", row-normalized %, rows = gold)\n";
  std::snprintf(buf, sizeof(buf), "%-10s", "");
  text << buf;
  for (const auto& l : scheme.labels()) {
    std::snprintf(buf, sizeof(buf), " %9.9s", l.c_str());
    text << buf;
  }
  text << "\n";
  for (std::size_t g = 0; g < cm.classes(); ++g) {
    std::snprintf(buf, sizeof(buf), "%-10.10s", scheme.labels()[g].c_str());
    text << buf;
    const auto support = static_cast<double>(stats[g].support);
    for (std::size_t p = 0; p < cm.classes(); ++p) {
      const double pct = support > 0 ? 100.0 * static_cast<double>(cm.at(g, p)) / support : 0.0;
      std::snprintf(buf, sizeof(buf), " %9.1f", pct);
      text << buf;
    }
    text << "\n";
  }
  text << "\nPer-class accuracy\n";
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    std::snprintf(buf, sizeof(buf), "  %-10s %5.1f%%  (support %lld)\n",
                  scheme.labels()[k].c_str(), 100.0 * stats[k].recall,
                  static_cast<long long>(stats[k].support));
    text << buf;
  }
  std::snprintf(buf, sizeof(buf), "\nAccuracy     %.1f%%\nWeighted F1  %.1f%%\n", 100.0 * acc,
                100.0 * wf1);
  text << buf;

  std::ostringstream csv;
  csv << "label,support,precision,recall,f1,per_class_accuracy\n";
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    csv << scheme.labels()[k] << ',' << stats[k].support << ',' << shortest(stats[k].precision)
        << ',' << shortest(stats[k].recall) << ',' << shortest(stats[k].f1) << ','
        << shortest(stats[k].recall) << '\n';
  }
  csv << "summary," << cm.total() << ",,," << shortest(wf1) << ',' << shortest(acc) << '\n';
  return {text.str(), csv.str()};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kFormat, "report csv line " + std::to_string(line_no) +
                                        ": bad number '" + s + "'");
  }
}

}  // namespace

ParsedReport parse_report_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || line != "label,support,precision,recall,f1,per_class_accuracy") {
    throw Error(ErrorKind::kFormat, "report csv: missing or unexpected header");
  }
  ParsedReport report;
  bool saw_summary = false;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (saw_summary) throw Error(ErrorKind::kFormat, "report csv: rows after summary");
    const auto f = split_csv_line(line);
    if (f.size() != 6) {
      throw Error(ErrorKind::kFormat,
                  "report csv line " + std::to_string(line_no) + ": expected 6 fields");
    }
    if (f[0] == "summary") {
      report.total = static_cast<std::int64_t>(parse_number(f[1], line_no));
      report.weighted_f1 = parse_number(f[4], line_no);
      report.accuracy = parse_number(f[5], line_no);
      saw_summary = true;
      continue;
    }
    ReportRow row;
    row.label = f[0];
    row.support = static_cast<std::int64_t>(parse_number(f[1], line_no));
    row.precision = parse_number(f[2], line_no);
    row.recall = parse_number(f[3], line_no);
    row.f1 = parse_number(f[4], line_no);
    row.per_class_accuracy = parse_number(f[5], line_no);
    report.classes.push_back(std::move(row));
  }
  if (!saw_summary) throw Error(ErrorKind::kFormat, "report csv: missing summary row");
  return report;
}

}  // namespace merc
