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

#include "merc/qc.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "merc/error.h"

namespace merc {

void QcConfig::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::kConfig, std::string(name) + " must lie in [0, 1], got " +
                                          std::to_string(v));
    }
  };
  check(cos_threshold, "cos_threshold");
  check(lev_threshold, "lev_threshold");
  check(face_threshold, "face_threshold");
  if (offsets.empty()) throw Error(ErrorKind::kConfig, "offset list must not be empty");
}

std::u32string fold_text(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
    } else if ((c >> 4) == 0xE) {
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      len = 4;
    }
    if (len > 1) {
      if (i + len > text.size()) {
        len = 1;
      } else {
        cp = c & (0x7F >> len);
        for (std::size_t k = 1; k < len; ++k) {
          const auto cc = static_cast<unsigned char>(text[i + k]);
          if ((cc >> 6) != 0x2) {
            cp = 0xFFFD;
            len = 1;
            break;
          }
          cp = (cp << 6) | (cc & 0x3F);
        }
      }
    }
    if (cp >= U'A' && cp <= U'Z') cp += U'a' - U'A';
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
  const std::u32string fa = fold_text(a);
  const std::u32string fb = fold_text(b);
  const std::size_t longest = std::max(fa.size(), fb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(fa, fb)) / static_cast<double>(longest);
}

double cosine_similarity(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kDimension, "cosine: dimensions " + std::to_string(u.size()) +
                                           " and " + std::to_string(v.size()) + " differ");
  }
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    throw Error(ErrorKind::kDegenerateVector, "cosine: zero-norm vector");
  }
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kPass: return "pass";
    case RejectReason::kMultiSpeaker: return "multi_speaker";
    case RejectReason::kEmptyAsr: return "empty_asr";
    case RejectReason::kLowCosine: return "low_cosine";
    case RejectReason::kLowLevenshtein: return "low_levenshtein";
    case RejectReason::kNoProfile: return "no_profile";
    case RejectReason::kNoFace: return "no_face";
    case RejectReason::kUnsupportedChannels: return "unsupported_channels";
  }
  return "unknown";
}

namespace {

std::string trim_lower(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

AlignmentReport check_alignment(const AlignmentInput& input, const QcConfig& cfg) {
  AlignmentReport report;
  if (is_blank(input.asr_text)) {
    report.reason = RejectReason::kEmptyAsr;
    return report;
  }
  if (input.emb_original.size() != input.emb_asr.size()) {
    throw Error(ErrorKind::kInput, "alignment '" + input.utterance_id + "': embedding sizes " +
                                       std::to_string(input.emb_original.size()) + " and " +
                                       std::to_string(input.emb_asr.size()));
  }
  report.cosine = cosine_similarity(input.emb_original, input.emb_asr);
  report.levenshtein = levenshtein_similarity(input.original_text, input.asr_text);
  if (report.cosine < cfg.cos_threshold) {
    report.reason = RejectReason::kLowCosine;
  } else if (report.levenshtein < cfg.lev_threshold) {
    report.reason = RejectReason::kLowLevenshtein;
  } else {
    report.keep = true;
  }
  return report;
}

SpeakerProfile build_speaker_profile(std::span<const std::span<const float>> samples,
                                     const std::string& speaker_id) {
  if (samples.empty()) {
    throw Error(ErrorKind::kInput, "speaker profile '" + speaker_id + "': no samples");
  }
  if (samples.size() > kMaxProfileSamples) {
    throw Error(ErrorKind::kInput, "speaker profile '" + speaker_id + "': " +
                                       std::to_string(samples.size()) +
                                       " samples exceed the cap of 15");
  }
  const std::size_t dim = samples.front().size();
  std::vector<double> sum(dim, 0.0);
  for (const auto& s : samples) {
    if (s.size() != dim) {
      throw Error(ErrorKind::kDimension, "speaker profile '" + speaker_id +
                                             "': samples differ in dimension");
    }
    for (std::size_t i = 0; i < dim; ++i) sum[i] += s[i];
  }
  SpeakerProfile p;
  p.speaker_id = speaker_id;
  p.sample_count = static_cast<int>(samples.size());
  p.mean_embedding.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    p.mean_embedding[i] = static_cast<float>(sum[i] / static_cast<double>(samples.size()));
  }
  return p;
}

namespace {

double norm_sq(std::span<const float> v) {
  double s = 0.0;
  for (const float x : v) s += static_cast<double>(x) * x;
  return s;
}

}  // namespace

std::optional<FaceMatch> match_face(std::span<const FaceCandidate> candidates,
                                    const SpeakerProfile& profile, double threshold) {
  std::optional<FaceMatch> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& emb = candidates[i].embedding;
    if (norm_sq(emb) == 0.0) continue;
    const double sim = cosine_similarity(emb, profile.mean_embedding);
    if (sim < threshold) continue;
    if (!best || sim > best->similarity) {
      best = FaceMatch{i, sim, candidates[i].offset};
    }
  }
  return best;
}

std::optional<FaceMatch> offset_search(std::span<const FaceCandidate> candidates,
                                       const SpeakerProfile& profile,
                                       std::span<const double> offsets, double threshold) {
  constexpr double kOffsetTolerance = 1e-9;
  for (const double offset : offsets) {
    std::vector<FaceCandidate> group;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (std::abs(candidates[i].offset - offset) <= kOffsetTolerance) {
        group.push_back(candidates[i]);
        index.push_back(i);
      }
    }
    if (auto m = match_face(group, profile, threshold)) {
      m->index = index[m->index];
      m->offset = offset;
      return m;
    }
  }
  return std::nullopt;
}

std::size_t select_audio_channel(std::span<const std::span<const float>> channels) {
  std::vector<double> energies;
  if (channels.size() == 2) {
    for (const auto& ch : channels) energies.push_back(norm_sq(ch));
  }
  return select_audio_channel(static_cast<int>(channels.size()), energies);
}

std::size_t select_audio_channel(int channel_count, std::span<const double> energies) {
  switch (channel_count) {
    case 1:
      return 0;
    case 2:
      if (energies.empty()) return 0;
      if (energies.size() != 2) {
        throw Error(ErrorKind::kInput, "2-channel layout needs 2 energies, got " +
                                           std::to_string(energies.size()));
      }
      return energies[1] > energies[0] ? 1 : 0;
    case 6:
      return 2;
    default:
      throw Error(ErrorKind::kUnsupportedLayout, "unsupported audio layout with " +
                                                     std::to_string(channel_count) +
                                                     " channels (expected 1, 2 or 6)");
  }
}

bool is_multi_speaker(const std::string& speaker, const QcConfig& cfg) {
  const std::string key = trim_lower(speaker);
  for (const auto& blocked : cfg.multi_speaker_blocklist) {
    if (trim_lower(blocked) == key) return true;
  }
  std::string lowered = speaker;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const auto& marker : cfg.conjunction_markers) {
    std::string m = marker;
    std::transform(m.begin(), m.end(), m.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (!m.empty() && lowered.find(m) != std::string::npos) return true;
  }
  return false;
}

DisambiguationResult disambiguate_speakers(std::span<const UtteranceRecord> records,
                                           const QcConfig& cfg) {
  DisambiguationResult result;
  std::map<std::string, std::set<std::string>> dialogues_by_name;
  for (const auto& r : records) {
    if (!is_multi_speaker(r.speaker, cfg)) dialogues_by_name[r.speaker].insert(r.dialogue_id);
  }
  for (const auto& r : records) {
    if (is_multi_speaker(r.speaker, cfg)) {
      result.dropped.push_back(r);
      continue;
    }
    UtteranceRecord out = r;
    if (dialogues_by_name[r.speaker].size() > 1 && !cfg.recurring_speakers.contains(r.speaker)) {
      out.speaker = r.speaker + "_d" + r.dialogue_id;
    }
    result.kept.push_back(std::move(out));
  }
  return result;
}

std::int64_t SplitCounts::rejected_total() const {
  std::int64_t n = 0;
  for (const auto& [reason, count] : rejected) n += count;
  return n;
}

SplitCounts QcReport::totals() const {
  SplitCounts t;
  for (const auto& [split, c] : splits) {
    t.original += c.original;
    t.verified += c.verified;
    for (const auto& [reason, count] : c.rejected) t.rejected[reason] += count;
  }
  return t;
}

namespace {

nlohmann::json counts_json(const SplitCounts& c) {
  nlohmann::json rejected = nlohmann::json::object();
  for (const RejectReason r : kRejectReasons) {
    const auto it = c.rejected.find(r);
    rejected[to_string(r)] = it == c.rejected.end() ? 0 : it->second;
  }
  return {{"original", c.original},
          {"verified", c.verified},
          {"rejected_total", c.rejected_total()},
          {"rejected", rejected}};
}

}  // namespace

nlohmann::json QcReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [split, c] : splits) s[split] = counts_json(c);
  j["splits"] = s;
  j["total"] = counts_json(totals());
  return j;
}

std::string QcReport::to_text() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s %10s %10s %10s\n", "split", "original", "verified",
                "rejected");
  os << buf;
  auto line = [&](const std::string& name, const SplitCounts& c) {
    std::snprintf(buf, sizeof(buf), "%-8s %10lld %10lld %10lld\n", name.c_str(),
                  static_cast<long long>(c.original), static_cast<long long>(c.verified),
                  static_cast<long long>(c.rejected_total()));
    os << buf;
  };
  for (const auto& [split, c] : splits) line(split, c);
  const SplitCounts total = totals();
  line("total", total);
  os << "\nrejections by reason\n";
  for (const RejectReason r : kRejectReasons) {
    const auto it = total.rejected.find(r);
    std::snprintf(buf, sizeof(buf), "  %-22s %8lld\n", to_string(r),
                  static_cast<long long>(it == total.rejected.end() ? 0 : it->second));
    os << buf;
  }
  return os.str();
}

namespace {

// Runs the alignment, face and channel stages on one disambiguated record.
RejectReason verify_record(UtteranceRecord& r, EmbeddingStore& store,
                           const ProfileDatabase& profiles, const QcConfig& cfg,
                           std::map<std::string, SpeakerProfile>& profile_cache,
                           std::optional<AlignmentReport>& alignment) {
  if (r.asr_text) {
    if (is_blank(*r.asr_text)) {
      alignment = AlignmentReport{};
      alignment->reason = RejectReason::kEmptyAsr;
      return RejectReason::kEmptyAsr;
    }
    if (!r.text_emb || !r.asr_emb) {
      throw Error(ErrorKind::kManifest, "asr_text given without text_emb/asr_emb references");
    }
    AlignmentInput in{r.utterance_id, r.text, *r.asr_text, store.row(*r.text_emb),
                      store.row(*r.asr_emb)};
    alignment = check_alignment(in, cfg);
    if (!alignment->keep) return alignment->reason;
  }

  if (r.face_candidates) {
    auto cached = profile_cache.find(r.speaker);
    if (cached == profile_cache.end()) {
      const auto it = profiles.speakers.find(r.speaker);
      if (it == profiles.speakers.end() || it->second.empty()) return RejectReason::kNoProfile;
      std::vector<std::span<const float>> samples;
      for (const RowRef& ref : it->second) samples.push_back(store.row(ref));
      cached = profile_cache.emplace(r.speaker, build_speaker_profile(samples, r.speaker)).first;
    }
    const SpeakerProfile& profile = cached->second;

    std::vector<double> times;
    for (const FrameRef& f : *r.face_candidates) {
      if (std::find(times.begin(), times.end(), f.time) == times.end()) times.push_back(f.time);
    }
    std::sort(times.begin(), times.end());
    std::vector<FrameRef> matched;
    for (const double t : times) {
      std::vector<FaceCandidate> candidates;
      std::vector<const FrameRef*> refs;
      for (const FrameRef& f : *r.face_candidates) {
        if (f.time != t) continue;
        const auto emb = store.row(f.ref);
        candidates.push_back(FaceCandidate{f.time, f.offset, {emb.begin(), emb.end()}});
        refs.push_back(&f);
      }
      if (auto m = offset_search(candidates, profile, cfg.offsets, cfg.face_threshold)) {
        matched.push_back(*refs[m->index]);
      }
    }
    if (matched.empty()) return RejectReason::kNoFace;
    r.face_frames = std::move(matched);
  }

  if (r.channel_count) {
    const int n = *r.channel_count;
    if (n != 1 && n != 2 && n != 6) return RejectReason::kUnsupportedChannels;
    if (!r.channel_energies.empty() && r.channel_energies.size() != static_cast<std::size_t>(n)) {
      throw Error(ErrorKind::kManifest, "channel_energies does not match channel_count");
    }
    r.audio_channel = static_cast<int>(select_audio_channel(n, r.channel_energies));
  }
  return RejectReason::kPass;
}

}  // namespace

QcResult run_qc(std::span<const UtteranceRecord> records, EmbeddingStore& store,
                const ProfileDatabase& profiles, const QcConfig& cfg) {
  cfg.validate();
  DisambiguationResult dis = disambiguate_speakers(records, cfg);
  std::map<std::string, std::size_t> kept_index;
  for (std::size_t i = 0; i < dis.kept.size(); ++i) kept_index[dis.kept[i].utterance_id] = i;

  QcResult result;
  std::map<std::string, SpeakerProfile> profile_cache;
  for (const UtteranceRecord& input : records) {
    QcOutcome outcome{input.utterance_id, input.split, RejectReason::kPass, std::nullopt};
    SplitCounts& counts = result.report.splits[input.split];
    counts.original += 1;

    const auto it = kept_index.find(input.utterance_id);
    if (it == kept_index.end()) {
      outcome.reason = RejectReason::kMultiSpeaker;
    } else {
      UtteranceRecord& r = dis.kept[it->second];
      try {
        outcome.reason = verify_record(r, store, profiles, cfg, profile_cache, outcome.alignment);
      } catch (const Error& e) {
        throw Error(ErrorKind::kManifest,
                    "record '" + input.utterance_id + "': " + std::string(e.what()));
      }
      if (outcome.reason == RejectReason::kPass) {
        counts.verified += 1;
        result.verified.push_back(r);
      }
    }
    if (outcome.reason != RejectReason::kPass) counts.rejected[outcome.reason] += 1;
    result.outcomes.push_back(std::move(outcome));
  }
  return result;
}

}  // namespace merc
