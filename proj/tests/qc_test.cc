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

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "merc/error.h"
#include "merc/labels.h"
#include "merc/manifest.h"
#include "merc/qc.h"
#include "merc/rng.h"
#include "merc/synth.h"
#include "support/oracles.h"

namespace merc {
namespace {

using FloatSpan = std::span<const float>;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no merc::Error thrown";
  return ErrorKind::kIo;
}

std::string random_text(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> alphabet = {"a", "b", "A", "B", "c", " ", "!",
                                                    "\xc3\xa9", "\xe2\x82\xac"};
  std::string s;
  const std::size_t n = rng.below(max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
  return s;
}

TEST(Levenshtein, Fixtures) {
  EXPECT_NEAR(levenshtein_similarity("Yeah!", "Yeah, it really has been great, too."), 0.11,
              0.005);
  EXPECT_EQ(levenshtein_similarity("same", "same"), 1.0);
  EXPECT_EQ(levenshtein_similarity("abc", ""), 0.0);
  EXPECT_EQ(levenshtein_similarity("", ""), 1.0);
  EXPECT_EQ(levenshtein_similarity("Hello", "hELLO"), 1.0);
  EXPECT_DOUBLE_EQ(levenshtein_similarity("kitten", "sitting"), 1.0 - 3.0 / 7.0);
}

TEST(Levenshtein, MatchesRecursiveOracle) {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const std::string a = random_text(rng, 8);
    const std::string b = random_text(rng, 8);
    const double got = levenshtein_similarity(a, b);
    EXPECT_EQ(got, testing::reference_levenshtein_similarity(a, b)) << a << " | " << b;
    EXPECT_EQ(got, levenshtein_similarity(b, a));
    EXPECT_EQ(got == 1.0, fold_text(a) == fold_text(b));
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(Levenshtein, DistanceOnCodePoints) {
  EXPECT_EQ(levenshtein_distance(U"café", U"cafe"), 1u);
  EXPECT_EQ(fold_text("caf\xc3\xa9").size(), 4u);
  EXPECT_EQ(fold_text("A\xff").back(), U'�');
}

TEST(Cosine, HandExamples) {
  const std::vector<float> a{1, 1, 0}, b{1, 0, 0}, c{0, 1, 0};
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(b, c), 0.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(a, b), 1.0 / std::sqrt(2.0), 1e-7);
}

TEST(Cosine, ScaleInvariantAndBounded) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<float> u(16), v(16);
    for (auto& x : u) x = static_cast<float>(rng.normal());
    for (auto& x : v) x = static_cast<float>(rng.normal());
    const double base = cosine_similarity(u, v);
    const float k = static_cast<float>(rng.uniform(0.01, 100.0));
    std::vector<float> scaled = u;
    for (auto& x : scaled) x *= k;
    EXPECT_NEAR(cosine_similarity(scaled, v), base, 1e-6);
    EXPECT_LE(std::abs(base), 1.0);
  }
}

TEST(Cosine, Errors) {
  const std::vector<float> z{0, 0}, u{1, 0}, w{1, 0, 0};
  EXPECT_EQ(kind_of([&] { cosine_similarity(z, u); }), ErrorKind::kDegenerateVector);
  EXPECT_EQ(kind_of([&] { cosine_similarity(u, w); }), ErrorKind::kDimension);
}

TEST(Alignment, TwentyCaseTable) {
  const auto table = testing::alignment_table();
  ASSERT_EQ(table.size(), 20u);
  const QcConfig cfg;
  for (const auto& c : table) {
    const auto r = check_alignment({"u", c.original, c.asr, c.emb_original, c.emb_asr}, cfg);
    EXPECT_EQ(r.reason, c.expected) << c.label << ": got " << to_string(r.reason);
    EXPECT_EQ(r.keep, c.expected == RejectReason::kPass) << c.label;
    if (r.keep) {
      EXPECT_GE(r.cosine, cfg.cos_threshold);
      EXPECT_GE(r.levenshtein, cfg.lev_threshold);
    }
  }
}

TEST(Alignment, FixtureScores) {
  const auto c = testing::alignment_table().front();
  const auto r = check_alignment({"u", c.original, c.asr, c.emb_original, c.emb_asr}, {});
  EXPECT_NEAR(r.cosine, 0.30, 1e-6);
  EXPECT_NEAR(r.levenshtein, 0.11, 0.005);
}

TEST(Alignment, DimensionMismatchIsInputError) {
  const std::vector<float> a{1, 0}, b{1, 0, 0};
  EXPECT_EQ(kind_of([&] { check_alignment({"u", "x", "x", a, b}, {}); }), ErrorKind::kInput);
}

TEST(Profile, MeanOfSamples) {
  const std::vector<float> e1{1, 0}, m{-1, 2};
  const std::vector<FloatSpan> one{e1};
  EXPECT_EQ(build_speaker_profile(one, "s").mean_embedding, e1);
  const std::vector<FloatSpan> two{e1, m};
  const auto p = build_speaker_profile(two, "s");
  EXPECT_EQ(p.mean_embedding, (std::vector<float>{0, 1}));
  EXPECT_EQ(p.sample_count, 2);
  EXPECT_EQ(kind_of([&] { build_speaker_profile({}, "s"); }), ErrorKind::kInput);
  const std::vector<FloatSpan> sixteen(16, FloatSpan(e1));
  EXPECT_EQ(kind_of([&] { build_speaker_profile(sixteen, "s"); }), ErrorKind::kInput);
  const std::vector<FloatSpan> fifteen(15, FloatSpan(e1));
  EXPECT_EQ(build_speaker_profile(fifteen, "s").sample_count, 15);
}

FaceCandidate candidate_at(double similarity, double offset = 0.0) {
  return {0.5, offset,
          {static_cast<float>(similarity),
           static_cast<float>(std::sqrt(1.0 - similarity * similarity))}};
}

SpeakerProfile unit_profile() { return {"s", {1.0f, 0.0f}, 1}; }

TEST(FaceMatch, ArgmaxAboveThreshold) {
  const std::vector<FaceCandidate> c{candidate_at(0.8), candidate_at(0.4)};
  const auto m = match_face(c, unit_profile(), 0.3);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->index, 0u);
  EXPECT_NEAR(m->similarity, 0.8, 1e-6);
  const std::vector<FaceCandidate> low{candidate_at(0.2), candidate_at(0.1)};
  EXPECT_FALSE(match_face(low, unit_profile(), 0.3));
  EXPECT_FALSE(match_face({}, unit_profile(), 0.3));
  const std::vector<FaceCandidate> tie{candidate_at(0.1), candidate_at(0.6), candidate_at(0.6)};
  EXPECT_EQ(match_face(tie, unit_profile(), 0.3)->index, 1u);
}

TEST(FaceMatch, PermutationInvariantAndNeverBelowThreshold) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FaceCandidate> c;
    for (int i = 0; i < 6; ++i) c.push_back(candidate_at(rng.uniform(-1.0, 1.0)));
    const auto m = match_face(c, unit_profile(), 0.3);
    std::vector<FaceCandidate> shuffled = c;
    rng.shuffle(std::span<FaceCandidate>(shuffled));
    const auto s = match_face(shuffled, unit_profile(), 0.3);
    ASSERT_EQ(m.has_value(), s.has_value());
    if (m) {
      EXPECT_GE(m->similarity, 0.3);
      EXPECT_EQ(c[m->index].embedding, shuffled[s->index].embedding);
    }
  }
}

TEST(OffsetSearch, TriesOffsetsInOrder) {
  const QcConfig cfg;
  std::vector<FaceCandidate> c{candidate_at(0.9, 0.0), candidate_at(0.95, -0.25)};
  auto m = offset_search(c, unit_profile(), cfg.offsets, 0.3);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->offset, 0.0);  // later offsets untried even with a better score

  c = {candidate_at(0.1, 0.0), candidate_at(0.5, 0.25), candidate_at(0.6, -0.25)};
  m = offset_search(c, unit_profile(), cfg.offsets, 0.3);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->offset, -0.25);
  EXPECT_EQ(m->index, 2u);

  c = {candidate_at(0.1, 0.0), candidate_at(0.2, 0.5)};
  EXPECT_FALSE(offset_search(c, unit_profile(), cfg.offsets, 0.3));
  const std::vector<double> only_zero{0.0};
  c = {candidate_at(0.9, 0.5)};
  EXPECT_FALSE(offset_search(c, unit_profile(), only_zero, 0.3));
}

TEST(AudioChannel, Layouts) {
  const std::vector<float> quiet{0.5f, -0.5f}, loud{1.0f, -1.0f};
  const std::vector<FloatSpan> one{quiet};
  EXPECT_EQ(select_audio_channel(one), 0u);
  const std::vector<FloatSpan> two{quiet, loud};
  EXPECT_EQ(select_audio_channel(two), 1u);
  const std::vector<FloatSpan> tied{loud, loud};
  EXPECT_EQ(select_audio_channel(tied), 0u);
  const std::vector<FloatSpan> six(6, FloatSpan(quiet));
  EXPECT_EQ(select_audio_channel(six), 2u);
  const std::vector<FloatSpan> four(4, FloatSpan(quiet));
  EXPECT_EQ(kind_of([&] { select_audio_channel(four); }), ErrorKind::kUnsupportedLayout);

  const std::vector<double> energies{0.5, 2.0};
  EXPECT_EQ(select_audio_channel(2, energies), 1u);
  EXPECT_EQ(select_audio_channel(6, {}), 2u);
  EXPECT_EQ(select_audio_channel(1, {}), 0u);
  EXPECT_EQ(kind_of([&] { select_audio_channel(3, {}); }), ErrorKind::kUnsupportedLayout);
}

UtteranceRecord rec(std::string id, std::string dialogue, std::string speaker) {
  UtteranceRecord r;
  r.utterance_id = std::move(id);
  r.dialogue_id = std::move(dialogue);
  r.split = "train";
  r.speaker = std::move(speaker);
  r.emotion = "neutral";
  r.text = "hi";
  return r;
}

TEST(Disambiguation, RenamesSharedNamesAndDropsGroups) {
  const std::vector<UtteranceRecord> in{rec("1", "5", "Waiter"), rec("2", "9", "Waiter"),
                                        rec("3", "9", "Phoebe and Rachel"), rec("4", "9", "Joey"),
                                        rec("5", "5", "All"), rec("6", "5", "Ross, Monica"),
                                        rec("7", "9", "Waiter")};
  const auto out = disambiguate_speakers(in, {});
  ASSERT_EQ(out.kept.size(), 4u);
  EXPECT_EQ(out.kept[0].speaker, "Waiter_d5");
  EXPECT_EQ(out.kept[1].speaker, "Waiter_d9");
  EXPECT_EQ(out.kept[2].speaker, "Joey");
  EXPECT_EQ(out.kept[3].speaker, "Waiter_d9");
  ASSERT_EQ(out.dropped.size(), 3u);
  EXPECT_EQ(out.dropped[0].speaker, "Phoebe and Rachel");
}

TEST(Disambiguation, RecurringSpeakersStayGlobal) {
  QcConfig cfg;
  cfg.recurring_speakers = {"Ross"};
  const std::vector<UtteranceRecord> in{rec("1", "1", "Ross"), rec("2", "2", "Ross")};
  const auto out = disambiguate_speakers(in, cfg);
  EXPECT_EQ(out.kept[0].speaker, "Ross");
  EXPECT_EQ(out.kept[1].speaker, "Ross");
}

TEST(Disambiguation, BlocklistIsCaseInsensitive) {
  const QcConfig cfg;
  EXPECT_TRUE(is_multi_speaker("  EVERYONE ", cfg));
  EXPECT_TRUE(is_multi_speaker("Chandler AND Joey", cfg));
  EXPECT_FALSE(is_multi_speaker("Alland", cfg));
}

TEST(Disambiguation, OutputIdsUniquePerNameAndDialogue) {
  Rng rng(3);
  const std::vector<std::string> names{"Ann", "Bob", "Cy", "All", "Ann and Bob", "Dee"};
  std::vector<UtteranceRecord> in;
  for (int i = 0; i < 300; ++i) {
    in.push_back(rec(std::to_string(i), std::to_string(rng.below(20)),
                     names[rng.below(names.size())]));
  }
  const QcConfig cfg;
  const auto out = disambiguate_speakers(in, cfg);
  EXPECT_EQ(out.kept.size() + out.dropped.size(), in.size());
  std::map<std::string, std::set<std::pair<std::string, std::string>>> owners;
  std::size_t k = 0;
  for (const auto& r : in) {
    if (is_multi_speaker(r.speaker, cfg)) continue;
    const auto& o = out.kept[k++];
    EXPECT_FALSE(is_multi_speaker(o.speaker, cfg));
    owners[o.speaker].insert({r.speaker, r.dialogue_id});
  }
  for (const auto& [id, sources] : owners) {
    std::set<std::string> raw;
    for (const auto& s : sources) raw.insert(s.first);
    EXPECT_EQ(raw.size(), 1u) << id;
    if (id.find("_d") != std::string::npos) {
      EXPECT_EQ(sources.size(), 1u) << id;
    }
  }
}

TEST(Config, Validation) {
  QcConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.lev_threshold = 1.2;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::kConfig);
  cfg = {};
  cfg.offsets.clear();
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::kConfig);
}

struct QcRun {
  SynthCorpus corpus;
  QcResult result;
};

QcRun run_synth_qc(SynthConfig sc) {
  QcRun run{synth_generate(sc), {}};
  EmbeddingStore store("/nonexistent");
  register_corpus(run.corpus, store);
  run.result = run_qc(run.corpus.records, store, run.corpus.profiles, QcConfig{});
  return run;
}

SynthConfig small_corpus() {
  SynthConfig sc;
  sc.train_per_class = 12;
  sc.dev_per_class = 4;
  sc.test_per_class = 4;
  sc.max_tokens = 8;
  sc.seed = 21;
  return sc;
}

TEST(RunQc, CleanCorpusPassesEverything) {
  const auto run = run_synth_qc(small_corpus());
  EXPECT_EQ(run.result.verified.size(), run.corpus.records.size());
  const auto totals = run.result.report.totals();
  EXPECT_EQ(totals.rejected_total(), 0);
  EXPECT_EQ(totals.original, static_cast<std::int64_t>(run.corpus.records.size()));
  for (const auto& r : run.result.verified) {
    ASSERT_TRUE(r.audio_channel.has_value());
    EXPECT_EQ(static_cast<std::size_t>(*r.audio_channel),
              select_audio_channel(*r.channel_count, r.channel_energies));
    EXPECT_FALSE(r.face_frames.empty());
  }
}

TEST(RunQc, PlantedFaultsAreCountedExactly) {
  SynthConfig sc = small_corpus();
  sc.plant_multi_speaker = 2;
  sc.plant_empty_asr = 3;
  sc.plant_low_cosine = 1;
  sc.plant_low_levenshtein = 2;
  sc.plant_no_profile = 1;
  sc.plant_no_face = 2;
  sc.plant_unsupported_channels = 1;
  const auto run = run_synth_qc(sc);
  const auto totals = run.result.report.totals();
  for (const RejectReason reason : kRejectReasons) {
    const auto it = run.corpus.planted.find(to_string(reason));
    const std::int64_t planted =
        it == run.corpus.planted.end() ? 0 : static_cast<std::int64_t>(it->second.size());
    const auto got = totals.rejected.count(reason) ? totals.rejected.at(reason) : 0;
    EXPECT_EQ(got, planted) << to_string(reason);
  }
  for (const auto& outcome : run.result.outcomes) {
    if (outcome.reason == RejectReason::kPass) continue;
    const auto& ids = run.corpus.planted.at(to_string(outcome.reason));
    EXPECT_NE(std::find(ids.begin(), ids.end(), outcome.utterance_id), ids.end())
        << outcome.utterance_id;
  }
  for (const auto& [split, c] : run.result.report.splits) {
    EXPECT_EQ(c.verified + c.rejected_total(), c.original) << split;
  }
}

TEST(RunQc, ShiftedFacesRecoveredByOffsetSearch) {
  SynthConfig sc = small_corpus();
  sc.shifted_face_fraction = 1.0;
  const auto run = run_synth_qc(sc);
  EXPECT_EQ(run.result.report.totals().rejected_total(), 0);
  for (const auto& r : run.result.verified) {
    for (const auto& f : r.face_frames) EXPECT_EQ(f.offset, -0.25);
  }
}

TEST(RunQc, MissingEmbeddingFileNamesRecordAndPath) {
  std::vector<UtteranceRecord> records{rec("u1", "1", "Ann")};
  records[0].asr_text = "hi";
  records[0].text_emb = RowRef{"missing_text.emb1", 0, 1};
  records[0].asr_emb = RowRef{"missing_text.emb1", 1, 1};
  EmbeddingStore store("/nonexistent-root");
  try {
    run_qc(records, store, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kManifest);
    EXPECT_NE(std::string(e.what()).find("u1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("missing_text.emb1"), std::string::npos);
  }
}

TEST(RunQc, ReportJsonCarriesEveryReason) {
  SynthConfig sc = small_corpus();
  sc.plant_empty_asr = 1;
  const auto run = run_synth_qc(sc);
  const auto j = run.result.report.to_json();
  ASSERT_TRUE(j.contains("total"));
  EXPECT_EQ(j["total"]["rejected"].size(), kRejectReasons.size());
  EXPECT_EQ(j["total"]["rejected"]["empty_asr"], 1);
  EXPECT_EQ(j["splits"].size(), 3u);
  EXPECT_NE(run.result.report.to_text().find("empty_asr"), std::string::npos);
}

}  // namespace
}  // namespace merc
