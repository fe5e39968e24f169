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

#ifndef MERC_SYNTH_H_
#define MERC_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "merc/emb1.h"
#include "merc/manifest.h"

namespace merc {

// Deterministic synthetic corpus with Gaussian class clusters per modality.
struct SynthConfig {
  std::string scheme = "meld7";
  std::size_t train_per_class = 100;
  std::size_t dev_per_class = 20;
  std::size_t test_per_class = 0;
  double separation = 10.0;  // pairwise distance between class means
  double noise = 1.0;        // per-coordinate standard deviation
  std::size_t min_tokens = 5;
  std::size_t max_tokens = 20;
  std::size_t min_frames = 1;
  std::size_t max_frames = 6;
  std::size_t speakers = 12;
  std::size_t utterances_per_dialogue = 8;
  std::size_t profile_samples = 5;  // at most 15
  // Identity vector norm in units of noise * sqrt(dim).
  double identity_scale = 2.0;
  // Fraction of frames whose true face only appears at a shifted time.
  double shifted_face_fraction = 0.1;
  bool text_informative = true;
  bool face_informative = true;
  bool speaker_informative = true;
  std::size_t text_dim = 768;
  std::size_t face_dim = 512;
  std::size_t speaker_dim = 512;

  // Records broken on purpose, one QC stage each.
  std::size_t plant_multi_speaker = 0;
  std::size_t plant_empty_asr = 0;
  std::size_t plant_low_cosine = 0;
  std::size_t plant_low_levenshtein = 0;
  std::size_t plant_no_profile = 0;
  std::size_t plant_no_face = 0;
  std::size_t plant_unsupported_channels = 0;

  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthCorpus {
  std::vector<UtteranceRecord> records;
  std::map<std::string, EmbeddingMatrix> files;  // relative file name -> matrix
  ProfileDatabase profiles;
  // QC reject-reason name -> ids of the records planted with that fault.
  std::map<std::string, std::vector<std::string>> planted;
};

SynthCorpus synth_generate(const SynthConfig& cfg);

// Writes manifest.jsonl, profiles.json and every EMB1 file under `dir`.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

// Registers the in-memory matrices with `store`.
void register_corpus(const SynthCorpus& corpus, EmbeddingStore& store);

}  // namespace merc

#endif  // MERC_SYNTH_H_
