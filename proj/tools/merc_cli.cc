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


// merc: batch entry points over the merc core library.
//
//   merc synth   --out DIR
//   merc qc      --corpus DIR --out DIR
//   merc adapter train   --corpus DIR --manifest verified.jsonl --source face --out DIR
//   merc adapter extract --model adapter.adp1 --input faces.emb1 --out DIR
//   merc fusion train    --corpus DIR --manifest verified.jsonl --modalities T+V+A ... --out DIR
//   merc fusion eval     --corpus DIR --manifest verified.jsonl --model fusion.adp1 ... --out DIR
//   merc report confusion --predictions predictions.csv --out DIR
//
// Hyperparameters are top-level options and may also come from --config
// (key = value, same names as the long flags). Flags override the file.
// Exit codes: 0 ok, 2 config, 3 data/format, 4 numeric contract.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "merc/adapter.h"
#include "merc/emb1.h"
#include "merc/error.h"
#include "merc/fusion.h"
#include "merc/labels.h"
#include "merc/manifest.h"
#include "merc/metrics.h"
#include "merc/pipeline.h"
#include "merc/qc.h"
#include "merc/synth.h"
#include "merc/training.h"

namespace fs = std::filesystem;

namespace merc {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitInternal = 1;

constexpr const char* kSnapshotName = "resolved_config.toml";

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kTaxonomy:
      return kExitConfig;
    case ErrorKind::kNumeric:
    case ErrorKind::kCheckFailure:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

struct GlobalOptions {
  std::string scheme = "meld7";
  std::uint64_t seed = 0;
  QcConfig qc;
  AdapterTrainConfig adapter;
  FusionTrainConfig fusion;
  std::vector<std::string> recurring;
};

struct CorpusOptions {
  std::string corpus;
  std::string manifest;  // default <corpus>/manifest.jsonl
  std::string out;
};

fs::path manifest_path(const CorpusOptions& o) {
  return o.manifest.empty() ? fs::path(o.corpus) / "manifest.jsonl" : fs::path(o.manifest);
}

std::string toml_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Effective value of every option on `app` and on the subcommands that ran,
// readable again through --config. Unset options are written as comments.
void write_snapshot(const CLI::App& app, const std::string& prefix, std::ostream& os) {
  for (const CLI::Option* opt : app.get_options()) {
    if (opt == app.get_config_ptr() || opt == app.get_help_ptr() ||
        opt == app.get_help_all_ptr() || opt->get_lnames().empty()) {
      continue;
    }
    const std::string key = prefix + opt->get_lnames().front();
    if (opt->count() == 0) {
      const std::string& def = opt->get_default_str();
      if (def.empty()) {
        os << "# " << key << " (unset)\n";
      } else if (def.front() == '[') {
        os << key << '=' << def << '\n';
      } else {
        os << key << '=' << toml_string(def) << '\n';
      }
      continue;
    }
    const auto& values = opt->results();
    if (opt->get_expected_max() > 1) {
      os << key << "=[";
      for (std::size_t i = 0; i < values.size(); ++i) {
        os << (i ? "," : "") << toml_string(values[i]);
      }
      os << "]\n";
    } else {
      os << key << '=' << toml_string(values.back()) << '\n';
    }
  }
  for (const CLI::App* sub : app.get_subcommands()) {
    write_snapshot(*sub, prefix + sub->get_name() + ".", os);
  }
}

void prepare_out(const std::string& out, const CLI::App& app) {
  fs::create_directories(out);
  const fs::path path = fs::path(out) / kSnapshotName;
  std::ofstream os(path);
  write_snapshot(app, "", os);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_history(const TrainHistory& h, SelectionMetric metric, const fs::path& path) {
  std::ofstream os(path);
  write_history_csv(h, metric, os);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw Error(ErrorKind::kFormat, "unterminated quote in: " + line);
  return fields;
}

void validate_all(const GlobalOptions& g) {
  EmotionScheme::by_name(g.scheme);
  g.qc.validate();
  g.adapter.validate();
  g.fusion.validate();
  if (!g.fusion.class_weights.empty()) g.fusion.resolved_weights(EmotionScheme::by_name(g.scheme));
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  SynthConfig cfg;
  std::string informative = "T+V+A";
  std::string out;
};

void add_synth(CLI::App& app, SynthOptions& o) {
  app.add_option("--out", o.out, "Output corpus directory")->required();
  app.add_option("--train-per-class", o.cfg.train_per_class)->capture_default_str();
  app.add_option("--dev-per-class", o.cfg.dev_per_class)->capture_default_str();
  app.add_option("--test-per-class", o.cfg.test_per_class)->capture_default_str();
  app.add_option("--separation", o.cfg.separation, "Distance between class means")
      ->capture_default_str();
  app.add_option("--noise", o.cfg.noise, "Per-coordinate sigma")->capture_default_str();
  app.add_option("--min-tokens", o.cfg.min_tokens)->capture_default_str();
  app.add_option("--max-tokens", o.cfg.max_tokens)->capture_default_str();
  app.add_option("--min-frames", o.cfg.min_frames)->capture_default_str();
  app.add_option("--max-frames", o.cfg.max_frames)->capture_default_str();
  app.add_option("--speakers", o.cfg.speakers)->capture_default_str();
  app.add_option("--informative", o.informative, "Modalities that carry the class signal")
      ->capture_default_str();
  app.add_option("--plant-multi-speaker", o.cfg.plant_multi_speaker)->capture_default_str();
  app.add_option("--plant-empty-asr", o.cfg.plant_empty_asr)->capture_default_str();
  app.add_option("--plant-low-cosine", o.cfg.plant_low_cosine)->capture_default_str();
  app.add_option("--plant-low-levenshtein", o.cfg.plant_low_levenshtein)->capture_default_str();
  app.add_option("--plant-no-profile", o.cfg.plant_no_profile)->capture_default_str();
  app.add_option("--plant-no-face", o.cfg.plant_no_face)->capture_default_str();
  app.add_option("--plant-unsupported-channels", o.cfg.plant_unsupported_channels)
      ->capture_default_str();
}

void run_synth(const GlobalOptions& g, SynthOptions o, const CLI::App& root) {
  const ModalitySet informative = ModalitySet::parse(o.informative);
  o.cfg.text_informative = informative.text;
  o.cfg.face_informative = informative.face;
  o.cfg.speaker_informative = informative.speaker;
  o.cfg.scheme = g.scheme;
  o.cfg.seed = g.seed;
  o.cfg.validate();
  prepare_out(o.out, root);

  const SynthCorpus corpus = synth_generate(o.cfg);
  write_corpus(corpus, o.out);
  write_text(fs::path(o.out) / "planted.json", nlohmann::json(corpus.planted).dump(2) + "\n");
  std::printf("wrote %zu records to %s\n", corpus.records.size(), o.out.c_str());
}

// ---------------------------------------------------------------- qc

struct QcOptions {
  CorpusOptions io;
  std::string profiles;  // default <corpus>/profiles.json
};

void run_qc_cmd(const GlobalOptions& g, const QcOptions& o, const CLI::App& root) {
  prepare_out(o.io.out, root);
  const auto& scheme = EmotionScheme::by_name(g.scheme);
  const auto records = read_manifest(manifest_path(o.io), scheme);
  const ProfileDatabase profiles = read_profiles(
      o.profiles.empty() ? fs::path(o.io.corpus) / "profiles.json" : fs::path(o.profiles));
  EmbeddingStore store(o.io.corpus);
  const QcResult result = run_qc(records, store, profiles, g.qc);

  const fs::path out(o.io.out);
  write_manifest(result.verified, out / "verified.jsonl");
  write_text(out / "qc_report.json", result.report.to_json().dump(2) + "\n");
  write_text(out / "qc_report.txt", result.report.to_text());
  std::ostringstream csv;
  csv << "utterance_id,split,reason,cosine,levenshtein\n";
  char buf[64];
  for (const auto& oc : result.outcomes) {
    csv << csv_quote(oc.utterance_id) << ',' << oc.split << ',' << to_string(oc.reason) << ',';
    if (oc.alignment) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f", oc.alignment->cosine, oc.alignment->levenshtein);
      csv << buf;
    } else {
      csv << ',';
    }
    csv << '\n';
  }
  write_text(out / "qc_outcomes.csv", csv.str());
  std::cout << result.report.to_text();
}

// ---------------------------------------------------------------- adapter

struct AdapterTrainOptions {
  CorpusOptions io;
  std::string source = "face";
  std::string train_split = "train";
  std::string val_split = "dev";
};

void run_adapter_train(const GlobalOptions& g, const AdapterTrainOptions& o,
                       const CLI::App& root) {
  const AdapterSource source = parse_adapter_source(o.source);
  prepare_out(o.io.out, root);
  const auto& scheme = EmotionScheme::by_name(g.scheme);
  const auto records = read_manifest(manifest_path(o.io), scheme);
  EmbeddingStore store(o.io.corpus);
  const LabeledSet train =
      adapter_dataset(select_split(records, o.train_split), store, source, scheme);
  const LabeledSet val = adapter_dataset(select_split(records, o.val_split), store, source, scheme);

  AdapterTrainConfig cfg = g.adapter;
  cfg.seed = g.seed;
  const AdapterTrainResult result = train_adapter(train, val, cfg);
  const fs::path out(o.io.out);
  save_adapter(result.params, out / "adapter.adp1");
  write_history(result.history, SelectionMetric::kMacroF1, out / "history.csv");

  const auto& best = result.history.epochs[static_cast<std::size_t>(result.history.best_epoch - 1)];
  std::printf("%s adapter: %zu train / %zu val samples, best epoch %d of %d, val acc %.4f, "
              "macro F1 %.4f\n",
              to_string(source), train.size(), val.size(), result.history.best_epoch,
              result.history.epochs_run, best.val.accuracy, best.val.macro_f1);
}

struct AdapterExtractOptions {
  std::string model;
  std::string input;
  std::string out;
};

void run_adapter_extract(const AdapterExtractOptions& o, const CLI::App& root) {
  prepare_out(o.out, root);
  const AdapterParams<float> params = load_adapter(o.model);
  const EmbeddingMatrix in = read_emb1(o.input);
  if (in.dim != kAdapterInput) {
    throw Error(ErrorKind::kDimension, o.input + ": expected dim " +
                                           std::to_string(kAdapterInput) + ", got " +
                                           std::to_string(in.dim));
  }
  EmbeddingMatrix adapted(kAdapterHidden2, {});
  if (in.count() > 0) adapted = EmbeddingMatrix::from_tensor(extract_adapted(in.to_tensor(), params));
  write_emb1(adapted, fs::path(o.out) / "adapted.emb1");
  std::printf("adapted %zu rows to dim %u\n", adapted.count(), adapted.dim);
}

// ---------------------------------------------------------------- fusion

struct FusionIoOptions {
  CorpusOptions io;
  std::string face_adapter;
  std::string speaker_adapter;
};

struct LoadedAdapters {
  std::optional<AdapterParams<float>> face;
  std::optional<AdapterParams<float>> speaker;

  FusionInputs inputs() const {
    return {face ? &*face : nullptr, speaker ? &*speaker : nullptr};
  }
};

LoadedAdapters load_adapters(const FusionIoOptions& o) {
  LoadedAdapters a;
  if (!o.face_adapter.empty()) a.face = load_adapter(o.face_adapter);
  if (!o.speaker_adapter.empty()) a.speaker = load_adapter(o.speaker_adapter);
  return a;
}

struct FusionTrainOptions {
  FusionIoOptions io;
  std::string modalities = "T+V+A";
  std::string train_split = "train";
  std::string val_split = "dev";
};

void run_fusion_train(const GlobalOptions& g, const FusionTrainOptions& o,
                      const CLI::App& root) {
  const ModalitySet modalities = ModalitySet::parse(o.modalities);
  prepare_out(o.io.io.out, root);
  const auto& scheme = EmotionScheme::by_name(g.scheme);
  const auto records = read_manifest(manifest_path(o.io.io), scheme);
  EmbeddingStore store(o.io.io.corpus);
  const LoadedAdapters adapters = load_adapters(o.io);
  const auto train = build_sequences(select_split(records, o.train_split), store, modalities,
                                     scheme, adapters.inputs());
  const auto val = build_sequences(select_split(records, o.val_split), store, modalities, scheme,
                                   adapters.inputs());

  FusionTrainConfig cfg = g.fusion;
  cfg.seed = g.seed;
  const FusionTrainResult result = train_fusion(train, val, scheme, cfg);
  const fs::path out(o.io.io.out);
  save_fusion(result.params, modalities, out / "fusion.adp1");
  write_history(result.history, SelectionMetric::kWeightedF1, out / "history.csv");

  const auto& best = result.history.epochs[static_cast<std::size_t>(result.history.best_epoch - 1)];
  std::printf("fusion %s: %zu train / %zu val, best epoch %d of %d (%s), val acc %.4f, "
              "weighted F1 %.4f\n",
              modalities.to_string().c_str(), train.size(), val.size(),
              result.history.best_epoch, result.history.epochs_run,
              result.history.stop_reason.c_str(), best.val.accuracy, best.val.weighted_f1);
}

struct FusionEvalOptions {
  FusionIoOptions io;
  std::string model;
  std::string split = "test";
};

void run_fusion_eval(const GlobalOptions& g, const FusionEvalOptions& o, const CLI::App& root) {
  prepare_out(o.io.io.out, root);
  const auto& scheme = EmotionScheme::by_name(g.scheme);
  const LoadedFusion model = load_fusion(o.model);
  if (model.params.config.classes != scheme.size()) {
    throw Error(ErrorKind::kConfig, o.model + " has " +
                                        std::to_string(model.params.config.classes) +
                                        " classes, scheme " + scheme.name() + " has " +
                                        std::to_string(scheme.size()));
  }
  const auto records = read_manifest(manifest_path(o.io.io), scheme);
  EmbeddingStore store(o.io.io.corpus);
  const LoadedAdapters adapters = load_adapters(o.io);
  const auto data = build_sequences(select_split(records, o.split), store, model.modalities,
                                    scheme, adapters.inputs());
  if (data.empty()) throw Error(ErrorKind::kData, "no records in split '" + o.split + "'");

  const std::vector<int> preds = predict_fusion(data, model.params);
  std::vector<int> golds;
  std::ostringstream csv;
  csv << "utterance_id,gold,pred\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    golds.push_back(data[i].label);
    csv << csv_quote(data[i].utterance_id) << ',' << scheme.label(data[i].label) << ','
        << scheme.label(preds[i]) << '\n';
  }
  const RenderedReport report = render_report(confusion(golds, preds, scheme.size()), scheme);
  const fs::path out(o.io.io.out);
  write_text(out / "predictions.csv", csv.str());
  write_text(out / "report.csv", report.csv);
  write_text(out / "report.txt", report.text);
  std::cout << report.text;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::string predictions;
  std::string metrics;
  std::string out;
};

void run_report(const GlobalOptions& g, const ReportOptions& o, const CLI::App& root) {
  if (!o.out.empty()) prepare_out(o.out, root);
  const auto& scheme = EmotionScheme::by_name(g.scheme);
  if (!o.metrics.empty()) {
    const ParsedReport parsed = parse_report_csv(read_text(o.metrics));
    std::printf("%-10s %8s %9s %9s %9s\n", "label", "support", "precision", "recall", "f1");
    for (const auto& r : parsed.classes) {
      std::printf("%-10s %8lld %9.4f %9.4f %9.4f\n", r.label.c_str(),
                  static_cast<long long>(r.support), r.precision, r.recall, r.f1);
    }
    std::printf("total %lld  accuracy %.4f  weighted F1 %.4f\n",
                static_cast<long long>(parsed.total), parsed.accuracy, parsed.weighted_f1);
    return;
  }

  std::istringstream in(read_text(o.predictions));
  std::string line;
  if (!std::getline(in, line) || csv_fields(line) != std::vector<std::string>{"utterance_id", "gold", "pred"}) {
    throw Error(ErrorKind::kFormat, o.predictions + ": expected header utterance_id,gold,pred");
  }
  std::vector<int> golds;
  std::vector<int> preds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv_fields(line);
    if (f.size() != 3) {
      throw Error(ErrorKind::kFormat,
                  o.predictions + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    golds.push_back(scheme.require_index(f[1]));
    preds.push_back(scheme.require_index(f[2]));
  }
  const RenderedReport report = render_report(confusion(golds, preds, scheme.size()), scheme);
  if (!o.out.empty()) {
    write_text(fs::path(o.out) / "report.csv", report.csv);
    write_text(fs::path(o.out) / "report.txt", report.text);
  }
  std::cout << report.text;
}

// ---------------------------------------------------------------- wiring

void add_corpus_options(CLI::App& app, CorpusOptions& o) {
  app.add_option("--corpus", o.corpus, "Corpus root; embedding paths resolve against it")
      ->required();
  app.add_option("--manifest", o.manifest, "Manifest JSONL (default <corpus>/manifest.jsonl)");
  app.add_option("--out", o.out, "Output directory")->required();
}

void add_global_options(CLI::App& app, GlobalOptions& g) {
  app.add_option("--scheme", g.scheme, "Label scheme: meld7 | iemocap4")->capture_default_str();
  app.add_option("--seed", g.seed)->capture_default_str();

  const char* qc = "Quality control";
  app.add_option("--cos-threshold", g.qc.cos_threshold)->capture_default_str()->group(qc);
  app.add_option("--lev-threshold", g.qc.lev_threshold)->capture_default_str()->group(qc);
  app.add_option("--face-threshold", g.qc.face_threshold)->capture_default_str()->group(qc);
  app.add_option("--offsets", g.qc.offsets, "Frame offsets tried in order (seconds)")
      ->capture_default_str()
      ->delimiter(',')
      ->group(qc);
  app.add_option("--recurring-speakers", g.recurring,
                 "Names kept global across dialogues")
      ->delimiter(',')
      ->expected(0, CLI::detail::expected_max_vector_size)
      ->group(qc);

  const char* ad = "Adapter training";
  app.add_option("--adapter-lr", g.adapter.lr)->capture_default_str()->group(ad);
  app.add_option("--adapter-weight-decay", g.adapter.weight_decay)
      ->capture_default_str()
      ->group(ad);
  app.add_option("--plateau-factor", g.adapter.plateau_factor)->capture_default_str()->group(ad);
  app.add_option("--plateau-patience", g.adapter.plateau_patience)
      ->capture_default_str()
      ->group(ad);
  app.add_option("--adapter-batch", g.adapter.batch_size)->capture_default_str()->group(ad);
  app.add_option("--adapter-max-epochs", g.adapter.max_epochs)->capture_default_str()->group(ad);
  app.add_option("--adapter-patience", g.adapter.early_stop_patience)
      ->capture_default_str()
      ->group(ad);

  const char* fu = "Fusion training";
  app.add_option("--fusion-lr", g.fusion.lr)->capture_default_str()->group(fu);
  app.add_option("--fusion-weight-decay", g.fusion.weight_decay)
      ->capture_default_str()
      ->group(fu);
  app.add_option("--fusion-batch", g.fusion.batch_size)->capture_default_str()->group(fu);
  app.add_option("--fusion-max-epochs", g.fusion.max_epochs)->capture_default_str()->group(fu);
  app.add_option("--fusion-patience", g.fusion.early_stop_patience)
      ->capture_default_str()
      ->group(fu);
  app.add_option("--label-smoothing", g.fusion.label_smoothing)->capture_default_str()->group(fu);
  app.add_option("--class-weights", g.fusion.class_weights,
                 "Per-class loss weights (default: scheme weights)")
      ->delimiter(',')
      ->expected(0, CLI::detail::expected_max_vector_size)
      ->group(fu);
  app.add_option("--d-state", g.fusion.d_state)->capture_default_str()->group(fu);
  app.add_option("--expand", g.fusion.expand)->capture_default_str()->group(fu);
  app.add_option("--d-conv", g.fusion.d_conv)->capture_default_str()->group(fu);
}

int run(int argc, char** argv) {
  CLI::App app{"Multimodal emotion recognition pipeline"};
  app.set_config("--config", "", "Key = value config file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  add_global_options(app, g);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  add_synth(*synth_cmd, synth);

  QcOptions qc;
  auto* qc_cmd = app.add_subcommand("qc", "Filter a manifest through quality control");
  add_corpus_options(*qc_cmd, qc.io);
  qc_cmd->add_option("--profiles", qc.profiles, "Profile JSON (default <corpus>/profiles.json)");

  auto* adapter_cmd = app.add_subcommand("adapter", "Train or apply an identity adapter");
  adapter_cmd->require_subcommand(1);
  AdapterTrainOptions at;
  auto* at_cmd = adapter_cmd->add_subcommand("train", "Train an adapter");
  add_corpus_options(*at_cmd, at.io);
  at_cmd->add_option("--source", at.source, "face | speaker")->capture_default_str();
  at_cmd->add_option("--train-split", at.train_split)->capture_default_str();
  at_cmd->add_option("--val-split", at.val_split)->capture_default_str();
  AdapterExtractOptions ax;
  auto* ax_cmd = adapter_cmd->add_subcommand("extract", "Map 512-d rows to 128-d features");
  ax_cmd->add_option("--model", ax.model, "Adapter ADP1 file")->required();
  ax_cmd->add_option("--input", ax.input, "EMB1 file of 512-d rows")->required();
  ax_cmd->add_option("--out", ax.out, "Output directory")->required();

  auto* fusion_cmd = app.add_subcommand("fusion", "Train or evaluate the fusion classifier");
  fusion_cmd->require_subcommand(1);
  const auto add_fusion_io = [](CLI::App& cmd, FusionIoOptions& o) {
    add_corpus_options(cmd, o.io);
    cmd.add_option("--face-adapter", o.face_adapter, "Adapter for 512-d face rows");
    cmd.add_option("--speaker-adapter", o.speaker_adapter, "Adapter for 512-d speaker rows");
  };
  FusionTrainOptions ft;
  auto* ft_cmd = fusion_cmd->add_subcommand("train", "Train the fusion classifier");
  add_fusion_io(*ft_cmd, ft.io);
  ft_cmd->add_option("--modalities", ft.modalities, "T, V, A joined with '+'")
      ->capture_default_str();
  ft_cmd->add_option("--train-split", ft.train_split)->capture_default_str();
  ft_cmd->add_option("--val-split", ft.val_split)->capture_default_str();
  FusionEvalOptions fe;
  auto* fe_cmd = fusion_cmd->add_subcommand("eval", "Predict and score one split");
  add_fusion_io(*fe_cmd, fe.io);
  fe_cmd->add_option("--model", fe.model, "Fusion ADP1 file")->required();
  fe_cmd->add_option("--split", fe.split)->capture_default_str();

  auto* report_cmd = app.add_subcommand("report", "Render classification reports");
  report_cmd->require_subcommand(1);
  ReportOptions rp;
  auto* rc_cmd = report_cmd->add_subcommand("confusion", "Confusion matrix and per-class report");
  auto* pred_opt = rc_cmd->add_option("--predictions", rp.predictions,
                                      "CSV with utterance_id,gold,pred");
  auto* metrics_opt = rc_cmd->add_option("--metrics", rp.metrics, "Report CSV to re-read");
  pred_opt->excludes(metrics_opt);
  rc_cmd->add_option("--out", rp.out, "Output directory");
  rc_cmd->require_option(1, 2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    g.qc.recurring_speakers.insert(g.recurring.begin(), g.recurring.end());
    validate_all(g);
    if (g.fusion.class_weights.empty()) {
      g.fusion.class_weights = g.fusion.resolved_weights(EmotionScheme::by_name(g.scheme));
      CLI::Option* weights = app.get_option("--class-weights");
      for (const double w : g.fusion.class_weights) weights->add_result(CLI::detail::to_string(w));
    }
    if (*synth_cmd) run_synth(g, synth, app);
    else if (*qc_cmd) run_qc_cmd(g, qc, app);
    else if (*at_cmd) run_adapter_train(g, at, app);
    else if (*ax_cmd) run_adapter_extract(ax, app);
    else if (*ft_cmd) run_fusion_train(g, ft, app);
    else if (*fe_cmd) run_fusion_eval(g, fe, app);
    else if (*rc_cmd) run_report(g, rp, app);
  } catch (const Error& e) {
    std::fprintf(stderr, "merc: %s: %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "merc: i/o error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "merc: internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace
}  // namespace merc

int main(int argc, char** argv) { return merc::run(argc, argv); }
