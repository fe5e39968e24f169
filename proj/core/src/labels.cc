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

#include "merc/labels.h"

#include <algorithm>
#include <cctype>
#include <map>

#include "merc/error.h"

namespace merc {
namespace {

std::string normalize(std::string_view raw) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string s(raw.substr(b, e - b));
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

const std::map<std::string, std::string, std::less<>>& meld_synonyms() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"surprise", "surprise"},   {"surprised", "surprise"}, {"sur", "surprise"},
      {"fear", "fear"},           {"fearful", "fear"},       {"fea", "fear"},
      {"disgust", "disgust"},     {"disgusted", "disgust"},  {"dis", "disgust"},
      {"happiness", "happiness"}, {"happy", "happiness"},    {"joy", "happiness"},
      {"hap", "happiness"},       {"sadness", "sadness"},    {"sad", "sadness"},
      {"anger", "anger"},         {"angry", "anger"},        {"ang", "anger"},
      {"neutral", "neutral"},     {"neu", "neutral"},
  };
  return table;
}

const std::map<std::string, std::string, std::less<>>& iemocap_synonyms() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"angry", "angry"},     {"anger", "angry"},   {"ang", "angry"},
      {"sad", "sad"},         {"sadness", "sad"},
      {"neutral", "neutral"}, {"neu", "neutral"},
      {"happy", "happy"},     {"happiness", "happy"}, {"joy", "happy"}, {"hap", "happy"},
      {"excited", "excited"}, {"exc", "excited"},
  };
  return table;
}

std::string joined(const std::vector<std::string>& labels) {
  std::string s;
  for (const auto& l : labels) {
    if (!s.empty()) s += ", ";
    s += l;
  }
  return s;
}

}  // namespace

const EmotionScheme& EmotionScheme::meld7() {
  static const EmotionScheme scheme(
      "meld7", {"surprise", "fear", "disgust", "happiness", "sadness", "anger", "neutral"});
  return scheme;
}

const EmotionScheme& EmotionScheme::iemocap4() {
  static const EmotionScheme scheme("iemocap4", {"angry", "sad", "neutral", "happy"});
  return scheme;
}

const EmotionScheme& EmotionScheme::by_name(std::string_view name) {
  if (name == "meld7") return meld7();
  if (name == "iemocap4") return iemocap4();
  throw Error(ErrorKind::kConfig,
              "unknown emotion scheme '" + std::string(name) + "' (expected meld7 or iemocap4)");
}

const std::string& EmotionScheme::label(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= labels_.size()) {
    throw Error(ErrorKind::kLabel, "class index " + std::to_string(index) +
                                       " outside scheme " + name_);
  }
  return labels_[static_cast<std::size_t>(index)];
}

std::optional<int> EmotionScheme::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

int EmotionScheme::require_index(std::string_view label) const {
  if (auto i = index_of(label)) return *i;
  throw Error(ErrorKind::kLabel, "label '" + std::string(label) + "' is not in scheme " +
                                     name_ + " (" + joined(labels_) + ")");
}

std::vector<double> meld_class_weights() { return {15.0, 15.0, 6.0, 1.0, 3.0, 6.0, 4.0}; }

std::string merge_iemocap_labels(std::string_view label) {
  if (label == "excited") return "happy";
  if (label == "angry" || label == "sad" || label == "neutral" || label == "happy") {
    return std::string(label);
  }
  throw Error(ErrorKind::kLabel, "label '" + std::string(label) +
                                     "' is outside the 4-class IEMOCAP scheme");
}

std::string map_label(std::string_view raw, const EmotionScheme& scheme) {
  const std::string key = normalize(raw);
  const bool meld = &scheme == &EmotionScheme::meld7();
  const auto& table = meld ? meld_synonyms() : iemocap_synonyms();
  const auto it = table.find(key);
  if (it == table.end()) {
    throw Error(ErrorKind::kTaxonomy, "cannot map emotion '" + std::string(raw) +
                                          "' onto " + scheme.name() +
                                          "; accepted labels: " + joined(scheme.labels()));
  }
  return meld ? it->second : merge_iemocap_labels(it->second);
}

}  // namespace merc
