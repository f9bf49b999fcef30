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

#ifndef TRIALNER_TESTS_CLI_PIPELINE_H_
#define TRIALNER_TESTS_CLI_PIPELINE_H_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"

namespace trialner {
namespace testing {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult RunTool(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::filesystem::path FreshDir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() /
                                    ("trialner_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Files produced by RunSamplePipeline and compared against the golden copies.
inline const std::vector<std::string>& PipelineFiles() {
  static const std::vector<std::string> files = {
      "criteria.jsonl",          "matched.jsonl",           "model.ckpt",
      "tagged.jsonl",            "normalized_tagged.jsonl", "normalized_matched.jsonl",
      "patterns_type.csv",       "patterns_variable.csv",   "patterns_top.txt",
      "eval.txt",                "eval.json"};
  return files;
}

// The shipped sample through every subcommand. Returns the first non-zero
// exit code, or 0.
inline int RunSamplePipeline(const std::filesystem::path& dir) {
  const std::string data = TRIALNER_SOURCE_DIR "/data/";
  const std::string counts = TRIALNER_TEST_DATA "/reference_counts/";
  const std::string d = dir.string() + "/";
  const std::vector<std::vector<std::string>> steps = {
      {"synth", "--out-dir", d, "--seed", "7", "--train", "200", "--dev", "40", "--test", "20"},
      {"train", "--data", d + "train.conll", "--dev", d + "dev.conll", "--config",
       data + "configs/tiny.json", "--out", d + "model.ckpt"},
      {"ingest", "--trials", data + "sample_trials.jsonl", "--out", d + "criteria.jsonl"},
      {"match", "--lexicon", data + "sample_lexicon.tsv", "--in", d + "criteria.jsonl", "--out",
       d + "matched.jsonl"},
      {"tag", "--model", d + "model.ckpt", "--in", d + "criteria.jsonl", "--out",
       d + "tagged.jsonl"},
      {"normalize", "--lexicon", data + "sample_lexicon.tsv", "--rules",
       data + "normalization_rules.tsv", "--in", d + "tagged.jsonl", "--out",
       d + "normalized_tagged.jsonl"},
      {"normalize", "--lexicon", data + "sample_lexicon.tsv", "--rules",
       data + "normalization_rules.tsv", "--in", d + "matched.jsonl", "--out",
       d + "normalized_matched.jsonl"},
      {"patterns", "--in", d + "normalized_tagged.jsonl", "--trials",
       data + "sample_trials.jsonl", "--row-mode", "type", "--min-count", "1", "--out",
       d + "patterns_type.csv"},
  };
  for (const auto& s : steps) {
    const CliResult r = RunTool(s);
    if (r.code != 0) return r.code;
  }
  auto capture = [&](const std::vector<std::string>& args, const std::string& file) {
    const CliResult r = RunTool(args);
    std::ofstream(d + file, std::ios::binary) << r.out;
    return r.code;
  };
  int code = capture({"patterns", "--in", d + "normalized_matched.jsonl", "--trials",
                      data + "sample_trials.jsonl", "--row-mode", "variable", "--min-count", "1",
                      "--top", "10", "--out", d + "patterns_variable.csv"},
                     "patterns_top.txt");
  if (code != 0) return code;
  code = capture({"eval", "--gold", counts + "gold.jsonl", "--pred", counts + "tagger.jsonl",
                  "--baseline", counts + "lexicon.jsonl"},
                 "eval.txt");
  if (code != 0) return code;
  return capture({"eval", "--json", "--gold", counts + "gold.jsonl", "--pred",
                  counts + "tagger.jsonl", "--baseline", counts + "lexicon.jsonl"},
                 "eval.json");
}

}  // namespace testing
}  // namespace trialner

#endif  // TRIALNER_TESTS_CLI_PIPELINE_H_
