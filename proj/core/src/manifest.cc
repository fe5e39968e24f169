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

#include "merc/manifest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "merc/error.h"

namespace merc {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "utterance_id", "dialogue_id",     "split",         "speaker",
      "emotion",      "text",            "asr_text",      "text_emb",
      "asr_emb",      "tokens",          "speaker_emb",   "face_frames",
      "face_candidates", "channel_count", "channel_energies", "audio_channel"};
  return keys;
}

[[noreturn]] void bad(const std::string& id, const std::string& what) {
  throw Error(ErrorKind::kManifest, "record '" + id + "': " + what);
}

json ref_to_json(const RowRef& r) {
  json j = {{"file", r.file}, {"row", r.row}};
  if (r.count != 1) j["count"] = r.count;
  return j;
}

RowRef ref_from_json(const json& j, const std::string& id, const char* field) {
  if (!j.is_object() || !j.contains("file") || !j["file"].is_string() || !j.contains("row") ||
      !j["row"].is_number_unsigned()) {
    bad(id, std::string(field) + " must be {\"file\": string, \"row\": unsigned}");
  }
  RowRef r;
  r.file = j["file"].get<std::string>();
  r.row = j["row"].get<std::uint64_t>();
  if (j.contains("count")) {
    if (!j["count"].is_number_unsigned() || j["count"].get<std::uint64_t>() == 0) {
      bad(id, std::string(field) + ".count must be a positive integer");
    }
    r.count = j["count"].get<std::uint64_t>();
  }
  return r;
}

json frames_to_json(const std::vector<FrameRef>& frames) {
  json arr = json::array();
  for (const FrameRef& f : frames) {
    json j = ref_to_json(f.ref);
    j["time"] = f.time;
    if (f.offset != 0.0) j["offset"] = f.offset;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<FrameRef> frames_from_json(const json& j, const std::string& id, const char* field) {
  if (!j.is_array()) bad(id, std::string(field) + " must be an array");
  std::vector<FrameRef> frames;
  for (const json& f : j) {
    FrameRef fr;
    fr.ref = ref_from_json(f, id, field);
    if (!f.contains("time") || !f["time"].is_number()) {
      bad(id, std::string(field) + " entries need a numeric time");
    }
    fr.time = f["time"].get<double>();
    if (fr.time < 0.0) bad(id, std::string(field) + " frame time must be >= 0");
    if (f.contains("offset")) {
      if (!f["offset"].is_number()) bad(id, std::string(field) + " offset must be numeric");
      fr.offset = f["offset"].get<double>();
    }
    frames.push_back(std::move(fr));
  }
  return frames;
}

std::string string_field(const json& j, const char* key, const std::string& id, bool required) {
  if (!j.contains(key) || j[key].is_null()) {
    if (required) bad(id, std::string("missing field '") + key + "'");
    return {};
  }
  if (j[key].is_string()) return j[key].get<std::string>();
  if (j[key].is_number_integer()) return std::to_string(j[key].get<long long>());
  bad(id, std::string("field '") + key + "' must be a string");
}

}  // namespace

bool is_valid_split(const std::string& split) {
  return split == "train" || split == "dev" || split == "test";
}

json record_to_json(const UtteranceRecord& r) {
  json j = json::object();
  j["utterance_id"] = r.utterance_id;
  j["dialogue_id"] = r.dialogue_id;
  j["split"] = r.split;
  j["speaker"] = r.speaker;
  j["emotion"] = r.emotion;
  j["text"] = r.text;
  if (r.asr_text) j["asr_text"] = *r.asr_text;
  if (r.text_emb) j["text_emb"] = ref_to_json(*r.text_emb);
  if (r.asr_emb) j["asr_emb"] = ref_to_json(*r.asr_emb);
  if (r.tokens) j["tokens"] = ref_to_json(*r.tokens);
  if (r.speaker_emb) j["speaker_emb"] = ref_to_json(*r.speaker_emb);
  if (!r.face_frames.empty()) j["face_frames"] = frames_to_json(r.face_frames);
  if (r.face_candidates) j["face_candidates"] = frames_to_json(*r.face_candidates);
  if (r.channel_count) j["channel_count"] = *r.channel_count;
  if (!r.channel_energies.empty()) j["channel_energies"] = r.channel_energies;
  if (r.audio_channel) j["audio_channel"] = *r.audio_channel;
  for (const auto& [key, value] : r.extra.items()) j[key] = value;
  return j;
}

UtteranceRecord record_from_json(const json& j, const EmotionScheme& scheme) {
  if (!j.is_object()) throw Error(ErrorKind::kManifest, "manifest line is not a JSON object");
  UtteranceRecord r;
  if (!j.contains("utterance_id") || !j["utterance_id"].is_string() ||
      j["utterance_id"].get<std::string>().empty()) {
    throw Error(ErrorKind::kManifest, "record without a string utterance_id");
  }
  r.utterance_id = j["utterance_id"].get<std::string>();
  const std::string& id = r.utterance_id;
  r.dialogue_id = string_field(j, "dialogue_id", id, true);
  r.split = string_field(j, "split", id, true);
  if (!is_valid_split(r.split)) bad(id, "split must be train, dev or test, got '" + r.split + "'");
  r.speaker = string_field(j, "speaker", id, true);
  const std::string raw_emotion = string_field(j, "emotion", id, true);
  try {
    r.emotion = map_label(raw_emotion, scheme);
  } catch (const Error& e) {
    throw Error(ErrorKind::kLabel, "record '" + id + "': " + e.what());
  }
  r.text = string_field(j, "text", id, false);
  if (j.contains("asr_text") && !j["asr_text"].is_null()) {
    r.asr_text = string_field(j, "asr_text", id, false);
  }
  if (j.contains("text_emb")) r.text_emb = ref_from_json(j["text_emb"], id, "text_emb");
  if (j.contains("asr_emb")) r.asr_emb = ref_from_json(j["asr_emb"], id, "asr_emb");
  if (j.contains("tokens")) r.tokens = ref_from_json(j["tokens"], id, "tokens");
  if (j.contains("speaker_emb")) r.speaker_emb = ref_from_json(j["speaker_emb"], id, "speaker_emb");
  if (j.contains("face_frames")) r.face_frames = frames_from_json(j["face_frames"], id, "face_frames");
  if (j.contains("face_candidates")) {
    r.face_candidates = frames_from_json(j["face_candidates"], id, "face_candidates");
  }
  if (j.contains("channel_count")) {
    if (!j["channel_count"].is_number_integer()) bad(id, "channel_count must be an integer");
    r.channel_count = j["channel_count"].get<int>();
  }
  if (j.contains("channel_energies")) {
    if (!j["channel_energies"].is_array()) bad(id, "channel_energies must be an array");
    for (const json& e : j["channel_energies"]) {
      if (!e.is_number()) bad(id, "channel_energies must be numeric");
      r.channel_energies.push_back(e.get<double>());
    }
  }
  if (j.contains("audio_channel")) {
    if (!j["audio_channel"].is_number_integer()) bad(id, "audio_channel must be an integer");
    r.audio_channel = j["audio_channel"].get<int>();
  }
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key)) r.extra[key] = value;
  }
  return r;
}

std::vector<UtteranceRecord> parse_manifest(std::istream& in, const EmotionScheme& scheme,
                                            const std::string& source) {
  std::vector<UtteranceRecord> records;
  std::set<std::string, std::less<>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kFormat, source + ":" + std::to_string(line_no) +
                                          ": invalid JSON (" + e.what() + ")");
    }
    UtteranceRecord r = record_from_json(j, scheme);
    if (!seen.insert(r.utterance_id).second) {
      throw Error(ErrorKind::kManifest, source + ":" + std::to_string(line_no) +
                                            ": duplicate utterance_id '" + r.utterance_id + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<UtteranceRecord> read_manifest(const std::filesystem::path& path,
                                           const EmotionScheme& scheme) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, scheme, path.string());
}

void write_manifest(std::span<const UtteranceRecord> records, std::ostream& out) {
  for (const UtteranceRecord& r : records) out << record_to_json(r).dump() << '\n';
}

void write_manifest(std::span<const UtteranceRecord> records,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write manifest '" + path.string() + "'");
  write_manifest(records, out);
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

void EmbeddingStore::put(const std::string& file, EmbeddingMatrix m) {
  cache_.insert_or_assign(file, std::move(m));
}

const EmbeddingMatrix& EmbeddingStore::matrix(const std::string& file) {
  auto it = cache_.find(file);
  if (it == cache_.end()) {
    it = cache_.emplace(file, read_emb1(root_ / file)).first;
  }
  return it->second;
}

std::span<const float> EmbeddingStore::row(const RowRef& ref) {
  const EmbeddingMatrix& m = matrix(ref.file);
  if (ref.row >= m.count()) {
    throw Error(ErrorKind::kManifest, "row " + std::to_string(ref.row) + " out of range for '" +
                                          ref.file + "' (" + std::to_string(m.count()) +
                                          " rows)");
  }
  return m.row(ref.row);
}

Tensor<float> EmbeddingStore::rows(const RowRef& ref) {
  const EmbeddingMatrix& m = matrix(ref.file);
  if (ref.count == 0 || ref.row + ref.count > m.count()) {
    throw Error(ErrorKind::kManifest, "rows [" + std::to_string(ref.row) + ", " +
                                          std::to_string(ref.row + ref.count) +
                                          ") out of range for '" + ref.file + "' (" +
                                          std::to_string(m.count()) + " rows)");
  }
  const auto begin = m.values.begin() + static_cast<std::ptrdiff_t>(ref.row * m.dim);
  const auto end = begin + static_cast<std::ptrdiff_t>(ref.count * m.dim);
  return Tensor<float>({ref.count, m.dim}, std::vector<float>(begin, end));
}

ProfileDatabase read_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open profiles '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object() || !j.contains("speakers") || !j["speakers"].is_object()) {
    throw Error(ErrorKind::kFormat, path.string() + ": expected {\"speakers\": {...}}");
  }
  ProfileDatabase db;
  for (const auto& [speaker, refs] : j["speakers"].items()) {
    if (!refs.is_array()) {
      throw Error(ErrorKind::kFormat, path.string() + ": samples of '" + speaker +
                                          "' must be an array");
    }
    auto& out = db.speakers[speaker];
    for (const json& r : refs) out.push_back(ref_from_json(r, "profile " + speaker, "sample"));
  }
  return db;
}

void write_profiles(const ProfileDatabase& db, const std::filesystem::path& path) {
  json speakers = json::object();
  for (const auto& [speaker, refs] : db.speakers) {
    json arr = json::array();
    for (const RowRef& r : refs) arr.push_back(ref_to_json(r));
    speakers[speaker] = std::move(arr);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write profiles '" + path.string() + "'");
  out << json{{"speakers", speakers}}.dump(1) << '\n';
}

}  // namespace merc
