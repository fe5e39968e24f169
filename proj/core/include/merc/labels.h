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

#ifndef MERC_LABELS_H_
#define MERC_LABELS_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace merc {

// An ordered emotion label set. Class indices everywhere (loss weights,
// confusion matrices, logits) follow this order.
class EmotionScheme {
 public:
  // surprise, fear, disgust, happiness, sadness, anger, neutral
  static const EmotionScheme& meld7();
  // angry, sad, neutral, happy
  static const EmotionScheme& iemocap4();
  // Throws a config error for unknown names.
  static const EmotionScheme& by_name(std::string_view name);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  const std::string& label(int index) const;
  std::optional<int> index_of(std::string_view label) const;
  int require_index(std::string_view label) const;

 private:
  EmotionScheme(std::string name, std::vector<std::string> labels)
      : name_(std::move(name)), labels_(std::move(labels)) {}

  std::string name_;
  std::vector<std::string> labels_;
};

// MELD class weights, aligned with EmotionScheme::meld7() order.
std::vector<double> meld_class_weights();

// IEMOCAP 4-class merge: excited -> happy, angry/sad/neutral/happy pass
// through, anything else is a label error.
std::string merge_iemocap_labels(std::string_view label);

// Folds dataset-specific spellings (joy, hap, exc, ...) onto the canonical
// label of `scheme`. Case-insensitive. Throws a taxonomy error listing the
// accepted labels when no mapping exists.
std::string map_label(std::string_view raw, const EmotionScheme& scheme);

}  // namespace merc

#endif  // MERC_LABELS_H_
