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


#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "merc/adapter.h"
#include "merc/error.h"
#include "merc/pipeline.h"
#include "merc/synth.h"

namespace merc {
namespace {

SynthCorpus tiny_corpus(std::size_t face_dim, std::size_t speaker_dim) {
  SynthConfig cfg;
  cfg.train_per_class = 3;
  cfg.dev_per_class = 2;
  cfg.test_per_class = 1;
  cfg.min_tokens = 4;
  cfg.max_tokens = 8;
  cfg.face_dim = face_dim;
  cfg.speaker_dim = speaker_dim;
  cfg.seed = 9;
  return synth_generate(cfg);
}

TEST(Pipeline, SelectSplit) {
  const auto corpus = tiny_corpus(512, 512);
  EXPECT_EQ(select_split(corpus.records, "train").size(), 21u);
  EXPECT_EQ(select_split(corpus.records, "dev").size(), 14u);
  EXPECT_EQ(select_split(corpus.records, "test").size(), 7u);
  EXPECT_EQ(select_split(corpus.records, "").size(), corpus.records.size());
  for (const auto& r : select_split(corpus.records, "dev")) EXPECT_EQ(r.split, "dev");
}

TEST(Pipeline, AdapterSource) {
  EXPECT_EQ(parse_adapter_source("face"), AdapterSource::kFace);
  EXPECT_EQ(parse_adapter_source("speaker"), AdapterSource::kSpeaker);
  EXPECT_STREQ(to_string(AdapterSource::kSpeaker), "speaker");
  EXPECT_THROW(parse_adapter_source("voice"), Error);
}

TEST(Pipeline, AdapterDatasetRowsAndLabels) {
  const auto corpus = tiny_corpus(512, 512);
  EmbeddingStore store("/unused");
  register_corpus(corpus, store);
  const auto train = select_split(corpus.records, "train");
  const auto& scheme = EmotionScheme::meld7();

  const auto faces = adapter_dataset(train, store, AdapterSource::kFace, scheme);
  std::size_t frames = 0;
  std::vector<int> expected;
  for (const auto& r : train) {
    frames += r.face_frames.size();
    expected.insert(expected.end(), r.face_frames.size(), scheme.require_index(r.emotion));
  }
  EXPECT_EQ(faces.x.shape(), (Shape{frames, 512}));
  EXPECT_EQ(faces.y, expected);
  const auto first = store.row(train[0].face_frames[0].ref);
  for (std::size_t j = 0; j < 512; ++j) EXPECT_EQ(faces.x(0, j), first[j]);

  const auto voices = adapter_dataset(train, store, AdapterSource::kSpeaker, scheme);
  EXPECT_EQ(voices.x.shape(), (Shape{train.size(), 512}));
}

TEST(Pipeline, BuildSequencesWithAdapters) {
  const auto corpus = tiny_corpus(512, 512);
  EmbeddingStore store("/unused");
  register_corpus(corpus, store);
  const auto dev = select_split(corpus.records, "dev");
  const auto& scheme = EmotionScheme::meld7();
  const auto m = ModalitySet::parse("T+V+A");
  EXPECT_EQ(
      [&] {
        try {
          build_sequences(dev, store, m, scheme, {});
        } catch (const Error& e) {
          return e.kind();
        }
        return ErrorKind::kIo;
      }(),
      ErrorKind::kConfig);

  const auto face = AdapterParams<float>::create(1);
  const auto speaker = AdapterParams<float>::create(2);
  const auto seqs = build_sequences(dev, store, m, scheme, FusionInputs{&face, &speaker});
  ASSERT_EQ(seqs.size(), dev.size());
  for (std::size_t i = 0; i < dev.size(); ++i) {
    EXPECT_EQ(seqs[i].utterance_id, dev[i].utterance_id);
    EXPECT_EQ(seqs[i].label, scheme.require_index(dev[i].emotion));
    EXPECT_EQ(seqs[i].tokens.cols(), 1024u);
    EXPECT_EQ(seqs[i].tokens.rows(), dev[i].tokens->count);
  }
  const auto adapted = extract_adapted(store.rows(*dev[0].speaker_emb), speaker);
  for (std::size_t j = 0; j < 128; ++j) EXPECT_EQ(seqs[0].tokens(0, 896 + j), adapted(0, j));
}

TEST(Pipeline, BuildSequencesFromAdaptedInputs) {
  const auto corpus = tiny_corpus(128, 128);
  EmbeddingStore store("/unused");
  register_corpus(corpus, store);
  const auto seqs =
      build_sequences(corpus.records, store, ModalitySet::parse("V+A"), EmotionScheme::meld7(), {});
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    EXPECT_EQ(seqs[i].tokens.cols(), 256u);
    EXPECT_EQ(seqs[i].tokens.rows(), corpus.records[i].face_frames.size());
  }
}

TEST(Pipeline, MissingReferencesAreInputErrors) {
  auto corpus = tiny_corpus(128, 128);
  EmbeddingStore store("/unused");
  register_corpus(corpus, store);
  corpus.records[0].tokens.reset();
  try {
    build_sequences(corpus.records, store, ModalitySet::parse("T"), EmotionScheme::meld7(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInput);
    EXPECT_NE(std::string(e.what()).find(corpus.records[0].utterance_id), std::string::npos);
  }
  EXPECT_NO_THROW(
      build_sequences(corpus.records, store, ModalitySet::parse("V"), EmotionScheme::meld7(), {}));
}

}  // namespace
}  // namespace merc
