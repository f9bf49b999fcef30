// Copyright 2026 The TrialNER Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <cstdlib>
#include <map>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli_pipeline.h"
#include "trialner/formats.h"

namespace trialner {
namespace {

using testing::CliResult;
using testing::FreshDir;
using testing::RunTool;
using testing::Slurp;

const std::string kData = TRIALNER_SOURCE_DIR "/data/";
const std::string kGolden = TRIALNER_TEST_DATA "/golden/";

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(RunTool({}).code, kExitUsage);
  EXPECT_EQ(RunTool({"bogus"}).code, kExitUsage);
  EXPECT_EQ(RunTool({"ingest", "--trials", "x"}).code, kExitUsage);
  EXPECT_EQ(RunTool({"tag", "--model", "m", "--in", "i", "--out", "o", "--min-confidence", "1.5"})
                .code,
            kExitUsage);
  EXPECT_EQ(RunTool({"patterns", "--in", "a", "--trials", "b", "--out", "c", "--row-mode", "x"})
                .code,
            kExitUsage);
  EXPECT_EQ(RunTool({"--help"}).code, kExitOk);
}

TEST(CliTest, DataErrorsExitTwo) {
  const auto dir = FreshDir("cli_data");
  const CliResult r =
      RunTool({"ingest", "--trials", "/nonexistent/trials.jsonl", "--out", (dir / "c").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  std::ofstream(dir / "bad.jsonl") << "{\"trial_id\": 3}\n";
  EXPECT_EQ(RunTool({"ingest", "--trials", (dir / "bad.jsonl").string(), "--out",
                     (dir / "c").string()})
                .code,
            kExitData);
  std::ofstream(dir / "cfg.json") << "{\"hidden\": 3}";
  EXPECT_EQ(RunTool({"train", "--data", kData + "x", "--dev", kData + "x", "--config",
                     (dir / "cfg.json").string(), "--out", (dir / "m").string()})
                .code,
            kExitData);
}

TEST(CliTest, IngestCountsMatchHandCount) {
  const auto dir = FreshDir("cli_ingest");
  ASSERT_EQ(RunTool({"ingest", "--trials", kData + "sample_trials.jsonl", "--out",
                     (dir / "c.jsonl").string()})
                .code,
            kExitOk);
  std::map<std::string, std::pair<int, int>> got;
  for (const Criterion& c : CriteriaFromJsonl(Slurp(dir / "c.jsonl"))) {
    auto& n = got[c.trial_id];
    (c.arm == Arm::kInclusion ? n.first : n.second)++;
  }
  std::istringstream expected(Slurp(TRIALNER_TEST_DATA "/sample_criteria_counts.tsv"));
  std::string line;
  size_t rows = 0;
  while (std::getline(expected, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string id;
    int inc = 0, exc = 0;
    fields >> id >> inc >> exc;
    EXPECT_EQ(got[id], std::make_pair(inc, exc)) << id;
    ++rows;
  }
  EXPECT_EQ(rows, 10u);
  EXPECT_EQ(got.size(), 10u);
}

TEST(CliTest, JsonSummaries) {
  const auto dir = FreshDir("cli_json");
  const CliResult r = RunTool({"ingest", "--json", "--trials", kData + "sample_trials.jsonl",
                               "--out", (dir / "c.jsonl").string()});
  ASSERT_EQ(r.code, kExitOk);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("command"), "ingest");
  EXPECT_EQ(j.at("criteria"), 58);
  const CliResult g = RunTool({"--json", "gradcheck", "--seed", "3"});
  EXPECT_EQ(g.code, kExitOk) << g.err;
  EXPECT_EQ(nlohmann::json::parse(g.out).at("command"), "gradcheck");
}

TEST(CliTest, TagAndTrainAreDeterministic) {
  const auto a = FreshDir("cli_det_a");
  const auto b = FreshDir("cli_det_b");
  ASSERT_EQ(testing::RunSamplePipeline(a), 0);
  ASSERT_EQ(testing::RunSamplePipeline(b), 0);
  for (const std::string& f : testing::PipelineFiles()) {
    EXPECT_EQ(Slurp(a / f), Slurp(b / f)) << f;
  }
  // Threaded tagging writes the same bytes.
  ASSERT_EQ(RunTool({"tag", "--model", (a / "model.ckpt").string(), "--in",
                     (a / "criteria.jsonl").string(), "--out", (a / "t4.jsonl").string(),
                     "--threads", "4"})
                .code,
            kExitOk);
  EXPECT_EQ(Slurp(a / "t4.jsonl"), Slurp(a / "tagged.jsonl"));
}

// Every --json summary carries the keys the shipped schema requires.
TEST(CliTest, JsonSummariesFollowSchema) {
  const nlohmann::json schema =
      nlohmann::json::parse(Slurp(TRIALNER_SOURCE_DIR "/docs/cli_summary.schema.json"));
  const auto dir = FreshDir("cli_schema");
  ASSERT_EQ(testing::RunSamplePipeline(dir), 0);
  const std::string d = dir.string() + "/";
  const std::string counts = TRIALNER_TEST_DATA "/reference_counts/";
  const std::vector<std::vector<std::string>> runs = {
      {"synth", "--out-dir", d + "s", "--train", "5", "--dev", "2", "--test", "2"},
      {"train", "--data", d + "train.conll", "--dev", d + "dev.conll", "--config",
       kData + "configs/tiny.json", "--out", d + "m2.ckpt"},
      {"ingest", "--trials", kData + "sample_trials.jsonl", "--out", d + "c2.jsonl"},
      {"match", "--lexicon", kData + "sample_lexicon.tsv", "--in", d + "criteria.jsonl", "--out",
       d + "m2.jsonl"},
      {"tag", "--model", d + "model.ckpt", "--in", d + "criteria.jsonl", "--out", d + "t2.jsonl"},
      {"normalize", "--lexicon", kData + "sample_lexicon.tsv", "--rules",
       kData + "normalization_rules.tsv", "--in", d + "tagged.jsonl", "--out", d + "n2.jsonl"},
      {"eval", "--gold", counts + "gold.jsonl", "--pred", counts + "tagger.jsonl", "--baseline",
       counts + "lexicon.jsonl"},
      {"patterns", "--in", d + "normalized_tagged.jsonl", "--trials",
       kData + "sample_trials.jsonl", "--out", d + "p2.csv", "--top", "3"},
      {"gradcheck", "--seed", "2"},
  };
  for (std::vector<std::string> args : runs) {
    args.insert(args.begin() + 1, "--json");
    const CliResult r = RunTool(args);
    ASSERT_EQ(r.code, kExitOk) << args[0] << ": " << r.err;
    const nlohmann::json j = nlohmann::json::parse(r.out);
    const nlohmann::json& def = schema.at("$defs").at(args[0]);
    for (const auto& key : def.at("required")) EXPECT_TRUE(j.contains(key)) << args[0] << " " << key;
    for (const auto& [key, value] : j.items())
      EXPECT_TRUE(def.at("properties").contains(key)) << args[0] << " undocumented " << key;
  }
}

// Set TRIALNER_UPDATE_GOLDEN=1 to rewrite the golden files after an
// intentional output change.
TEST(CliTest, SamplePipelineMatchesGoldenFiles) {
  const auto dir = FreshDir("cli_golden");
  ASSERT_EQ(testing::RunSamplePipeline(dir), 0);
  const bool update = std::getenv("TRIALNER_UPDATE_GOLDEN") != nullptr;
  for (const std::string& f : testing::PipelineFiles()) {
    if (update) std::filesystem::copy_file(dir / f, kGolden + f,
                                           std::filesystem::copy_options::overwrite_existing);
    const std::string want = Slurp(kGolden + f);
    ASSERT_FALSE(want.empty()) << "missing golden " << f;
    EXPECT_TRUE(Slurp(dir / f) == want) << f << " differs from golden";
  }
}

}  // namespace
}  // namespace trialner
