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


// Runs the merc executable end to end in scratch directories.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

#include "merc/emb1.h"
#include "merc/labels.h"
#include "merc/manifest.h"
#include "merc/metrics.h"

namespace merc {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

class Cli : public ::testing::Test {
 protected:
  static fs::path root() { return fs::temp_directory_path() / "merc_cli_test"; }

  static void SetUpTestSuite() {
    fs::remove_all(root());
    fs::create_directories(root());
    ASSERT_EQ(run("synth --out clean " + kSmall).code, 0);
    ASSERT_EQ(run("synth --out planted --seed 3 " + kSmall +
                  " --plant-multi-speaker 2 --plant-empty-asr 3 --plant-low-cosine 2"
                  " --plant-low-levenshtein 2 --plant-no-profile 1 --plant-no-face 2"
                  " --plant-unsupported-channels 2")
                  .code,
              0);
  }

  static void TearDownTestSuite() { fs::remove_all(root()); }

  static CliResult run(const std::string& args) {
    const fs::path out = root() / "stdout.txt";
    const fs::path err = root() / "stderr.txt";
    const std::string cmd = "cd '" + root().string() + "' && '" MERC_CLI_PATH "' " + args +
                            " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  static nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

  static inline const std::string kSmall =
      "--train-per-class 6 --dev-per-class 3 --test-per-class 2 --min-tokens 4 --max-tokens 8";
};

TEST_F(Cli, QcRejectsExactlyThePlantedRecords) {
  const CliResult r = run("qc --corpus planted --out planted_qc");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto planted = read_json(root() / "planted/planted.json");
  const auto report = read_json(root() / "planted_qc/qc_report.json");
  std::int64_t planted_total = 0;
  for (const auto& [reason, ids] : planted.items()) {
    EXPECT_EQ(report["total"]["rejected"][reason].get<std::int64_t>(),
              static_cast<std::int64_t>(ids.size()))
        << reason;
    planted_total += static_cast<std::int64_t>(ids.size());
  }
  EXPECT_EQ(report["total"]["rejected_total"].get<std::int64_t>(), planted_total);
  for (const auto& [split, c] : report["splits"].items()) {
    EXPECT_EQ(c["original"].get<std::int64_t>(),
              c["verified"].get<std::int64_t>() + c["rejected_total"].get<std::int64_t>())
        << split;
  }
  const auto verified = read_manifest(root() / "planted_qc/verified.jsonl", EmotionScheme::meld7());
  EXPECT_EQ(static_cast<std::int64_t>(verified.size()),
            report["total"]["verified"].get<std::int64_t>());
  EXPECT_TRUE(fs::exists(root() / "planted_qc/qc_outcomes.csv"));
  EXPECT_TRUE(fs::exists(root() / "planted_qc/resolved_config.toml"));
}

TEST_F(Cli, CleanCorpusPassesQc) {
  const CliResult r = run("qc --corpus clean --out clean_qc");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = read_json(root() / "clean_qc/qc_report.json");
  EXPECT_EQ(report["total"]["rejected_total"].get<int>(), 0);
  EXPECT_EQ(report["total"]["original"].get<int>(), 77);
}

TEST_F(Cli, MissingEmbeddingFileIsDataError) {
  fs::copy(root() / "clean", root() / "broken", fs::copy_options::recursive);
  fs::remove(root() / "broken/faces.emb1");
  const CliResult r = run("qc --corpus broken --out broken_qc");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("faces.emb1"), std::string::npos) << r.err;
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
  std::ofstream(root() / "unknown.toml") << "cos-threshold=0.3\nmystery-knob=4\n";
  EXPECT_EQ(run("--config unknown.toml qc --corpus clean --out x1").code, 2);
  EXPECT_EQ(run("--cos-threshold 1.5 qc --corpus clean --out x2").code, 2);
  EXPECT_EQ(run("--scheme meld6 qc --corpus clean --out x3").code, 2);
  EXPECT_EQ(run("--class-weights 1,2 qc --corpus clean --out x4").code, 2);
  EXPECT_EQ(run("qc --out x5").code, 2);
  EXPECT_EQ(run("report confusion --predictions a.csv --metrics b.csv").code, 2);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_FALSE(fs::exists(root() / "x2"));
}

TEST_F(Cli, FlagsOverrideConfigAndSnapshotReplays) {
  std::ofstream(root() / "strict.toml") << "cos-threshold=0.5\nlev-threshold=0.4\n";
  ASSERT_EQ(run("--config strict.toml --lev-threshold 0.35 qc --corpus planted --out snap1").code, 0);
  const std::string snapshot = slurp(root() / "snap1/resolved_config.toml");
  EXPECT_NE(snapshot.find("cos-threshold=\"0.5\""), std::string::npos) << snapshot;
  EXPECT_NE(snapshot.find("lev-threshold=\"0.35\""), std::string::npos) << snapshot;

  fs::copy_file(root() / "snap1/resolved_config.toml", root() / "replay.toml");
  std::string replay = slurp(root() / "replay.toml");
  replay.replace(replay.find("qc.out=\"snap1\""), 14, "qc.out=\"snap2\"");
  std::ofstream(root() / "replay.toml") << replay;
  const CliResult r = run("--config replay.toml qc");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(root() / "snap1/verified.jsonl"), slurp(root() / "snap2/verified.jsonl"));
  EXPECT_EQ(slurp(root() / "snap1/qc_report.json"), slurp(root() / "snap2/qc_report.json"));
}

TEST_F(Cli, AdapterFusionAndReport) {
  const std::string common = "--adapter-max-epochs 3 --fusion-max-epochs 2 --fusion-lr 1e-3 --d-state 8 ";
  ASSERT_EQ(run(common + "adapter train --corpus clean --source face --out ad_face").code, 0);
  ASSERT_EQ(run(common + "adapter train --corpus clean --source speaker --out ad_spk").code, 0);
  EXPECT_TRUE(fs::exists(root() / "ad_face/history.csv"));

  const CliResult x = run("adapter extract --model ad_face/adapter.adp1 --input clean/speaker.emb1 --out ext");
  ASSERT_EQ(x.code, 0) << x.err;
  const auto adapted = read_emb1(root() / "ext/adapted.emb1");
  EXPECT_EQ(adapted.dim, 128u);
  EXPECT_EQ(adapted.count(), read_emb1(root() / "clean/speaker.emb1").count());

  const std::string fusion = common +
                             "fusion train --corpus clean --modalities V+A --face-adapter "
                             "ad_face/adapter.adp1 --speaker-adapter ad_spk/adapter.adp1 --out ";
  ASSERT_EQ(run(fusion + "fu1").code, 0);
  ASSERT_EQ(run(fusion + "fu2").code, 0);
  EXPECT_EQ(slurp(root() / "fu1/history.csv"), slurp(root() / "fu2/history.csv"));
  EXPECT_EQ(slurp(root() / "fu1/fusion.adp1"), slurp(root() / "fu2/fusion.adp1"));

  const CliResult e = run(
      "fusion eval --corpus clean --model fu1/fusion.adp1 --face-adapter ad_face/adapter.adp1 "
      "--speaker-adapter ad_spk/adapter.adp1 --split test --out ev");
  ASSERT_EQ(e.code, 0) << e.err;
  const auto parsed = parse_report_csv(slurp(root() / "ev/report.csv"));
  EXPECT_EQ(parsed.total, 14);
  EXPECT_EQ(parsed.classes.size(), 7u);

  ASSERT_EQ(run("report confusion --predictions ev/predictions.csv --out rp").code, 0);
  EXPECT_EQ(slurp(root() / "rp/report.csv"), slurp(root() / "ev/report.csv"));
  EXPECT_EQ(slurp(root() / "rp/report.txt"), slurp(root() / "ev/report.txt"));
  const CliResult m = run("report confusion --metrics ev/report.csv");
  ASSERT_EQ(m.code, 0) << m.err;
  EXPECT_NE(m.out.find("total 14"), std::string::npos) << m.out;

  EXPECT_EQ(run("fusion eval --corpus clean --model ad_face/adapter.adp1 --out bad").code, 3);
}

}  // namespace
}  // namespace merc
