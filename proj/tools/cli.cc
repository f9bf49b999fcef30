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

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trialner/corpus.h"
#include "trialner/errors.h"
#include "trialner/evalkit.h"
#include "trialner/formats.h"
#include "trialner/gradcheck.h"
#include "trialner/lexicon.h"
#include "trialner/normalizer.h"
#include "trialner/patterns.h"
#include "trialner/synthetic.h"
#include "trialner/tagging.h"
#include "trialner/trainer.h"

namespace trialner {
namespace {

using json = nlohmann::json;

// Runs fn(i) for i in [0, n) on `threads` workers; results keep index order.
// The first exception thrown by any worker is rethrown.
template <typename T, typename F>
std::vector<T> ParallelMap(size_t n, int threads, F fn) {
  std::vector<T> results(n);
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  const size_t count = std::min<size_t>(threads, n);
  for (size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<EntityMention> Flatten(std::vector<std::vector<EntityMention>> parts) {
  std::vector<EntityMention> out;
  for (auto& p : parts) {
    for (auto& m : p) out.push_back(std::move(m));
  }
  return out;
}

void Emit(std::ostream& out, bool as_json, const json& summary, const std::string& text) {
  if (as_json) {
    out << summary.dump(2) << "\n";
  } else {
    out << text;
  }
}

json PrfJson(const PrfCounts& c) {
  return {{"true_positives", c.true_positives},
          {"predicted_count", c.predicted_count},
          {"gold_count", c.gold_count},
          {"precision", c.precision},
          {"recall", c.recall},
          {"f1", c.f1}};
}

json ReportJson(const EvalReport& r) {
  json j = PrfJson(r.overall);
  j["per_type"] = json::object();
  for (const auto& [type, c] : r.per_type) j["per_type"][type] = PrfJson(c);
  return j;
}

std::string Ratio(double value, size_t num, size_t den) {
  return Format3(value) + " (" + std::to_string(num) + "/" + std::to_string(den) + ")";
}

std::string Row(const std::string& label, const std::string& a, const std::string& b,
                const std::string& c) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-20s %-18s %-18s %s\n", label.c_str(), a.c_str(),
                b.c_str(), c.c_str());
  return buf;
}

std::string ReportRow(const std::string& label, const PrfCounts& c) {
  return Row(label, Ratio(c.precision, c.true_positives, c.predicted_count),
             Ratio(c.recall, c.true_positives, c.gold_count), Format3(c.f1));
}

std::string Signed3(double x) { return (x >= 0 ? "+" : "") + Format3(x); }

std::string WinnerName(int w) {
  return w == 0 ? "predicted" : w == 1 ? "baseline" : "tie";
}

std::vector<TaggedSequence> LoadConll(const std::string& path, const std::string& prefix) {
  return ToTaggedSequences(ConllFromString(ReadFile(path)), prefix);
}

// ---------------------------------------------------------------------------
// Subcommands

struct IngestArgs {
  std::string trials, out;
};

int Ingest(const IngestArgs& a, bool as_json, std::ostream& out, std::ostream& err) {
  const std::vector<TrialRecord> trials = LoadTrials(a.trials);
  std::vector<Criterion> criteria;
  size_t excluded = 0;
  for (const TrialRecord& t : trials) {
    if (t.excluded()) {
      ++excluded;
      err << "skipping trial " << t.trial_id << ": " << *t.exclusion_reason << "\n";
      continue;
    }
    for (Criterion& c : SegmentCriteria(t)) criteria.push_back(std::move(c));
  }
  WriteFile(a.out, CriteriaToJsonl(criteria));
  const json summary = {{"command", "ingest"},
                        {"trials", trials.size()},
                        {"excluded", excluded},
                        {"criteria", criteria.size()}};
  Emit(out, as_json, summary,
       "ingested " + std::to_string(trials.size()) + " trials (" +
           std::to_string(excluded) + " excluded), " + std::to_string(criteria.size()) +
           " criteria\n");
  return kExitOk;
}

struct TrainArgs {
  std::string data, dev, config, out;
};

int TrainCommand(const TrainArgs& a, bool as_json, std::ostream& out, std::ostream& err) {
  const TrainConfig config = TrainConfig::FromJson(json::parse(ReadFile(a.config)));
  const std::vector<TaggedSequence> train = LoadConll(a.data, "train");
  const std::vector<TaggedSequence> dev = LoadConll(a.dev, "dev");
  const TrainResult result =
      Train(config, train, dev, [&](const std::string& line) { err << line << "\n"; });
  SaveCheckpoint(result.checkpoint, a.out);
  json history = json::array();
  for (const EpochStats& e : result.history) {
    history.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"dev_accuracy", e.dev_accuracy},
                       {"dev_loss", e.dev_loss}});
  }
  const double best = result.history.empty()
                          ? 0.0
                          : result.history[result.best_epoch - 1].dev_accuracy;
  const json summary = {{"command", "train"},
                        {"train_examples", train.size()},
                        {"dev_examples", dev.size()},
                        {"best_epoch", result.best_epoch},
                        {"best_dev_accuracy", best},
                        {"history", history}};
  Emit(out, as_json, summary,
       "best epoch " + std::to_string(result.best_epoch) + ", dev accuracy " +
           Format3(best) + "\n");
  return kExitOk;
}

struct TagArgs {
  std::string model, in, out, tagset;
  double min_confidence = 0.7;
  int threads = 1;
};

int Tag(const TagArgs& a, bool as_json, std::ostream& out, std::ostream&) {
  const Checkpoint model = LoadCheckpoint(a.model);
  if (!a.tagset.empty() && !(TagSet::Load(a.tagset) == model.tagset)) {
    throw ConfigError("tag set " + a.tagset + " does not match the model's tag set");
  }
  const std::vector<Criterion> criteria = CriteriaFromJsonl(ReadFile(a.in));
  const std::vector<EntityMention> mentions =
      Flatten(ParallelMap<std::vector<EntityMention>>(criteria.size(), a.threads, [&](size_t i) {
        return TagCriterion(model, criteria[i], a.min_confidence);
      }));
  WriteFile(a.out, MentionsToJsonl(mentions));
  const json summary = {{"command", "tag"},
                        {"criteria", criteria.size()},
                        {"mentions", mentions.size()},
                        {"min_confidence", a.min_confidence}};
  Emit(out, as_json, summary,
       "tagged " + std::to_string(criteria.size()) + " criteria, " +
           std::to_string(mentions.size()) + " mentions\n");
  return kExitOk;
}

struct MatchArgs {
  std::string lexicon, in, out;
  int threads = 1;
};

int Match(const MatchArgs& a, bool as_json, std::ostream& out, std::ostream& err) {
  const Lexicon lexicon = Lexicon::Load(a.lexicon);
  for (const std::string& w : lexicon.warnings()) err << "lexicon: " << w << "\n";
  const std::vector<Criterion> criteria = CriteriaFromJsonl(ReadFile(a.in));
  const std::vector<EntityMention> mentions =
      Flatten(ParallelMap<std::vector<EntityMention>>(criteria.size(), a.threads, [&](size_t i) {
        return MatchEntities(criteria[i], lexicon);
      }));
  WriteFile(a.out, MentionsToJsonl(mentions));
  const json summary = {{"command", "match"},
                        {"criteria", criteria.size()},
                        {"mentions", mentions.size()}};
  Emit(out, as_json, summary,
       "matched " + std::to_string(criteria.size()) + " criteria, " +
           std::to_string(mentions.size()) + " mentions\n");
  return kExitOk;
}

struct NormalizeArgs {
  std::string lexicon, rules, in, out;
  double threshold = kDefaultFuzzyThreshold;
};

int Normalize(const NormalizeArgs& a, bool as_json, std::ostream& out, std::ostream& err) {
  const Lexicon lexicon = Lexicon::Load(a.lexicon);
  for (const std::string& w : lexicon.warnings()) err << "lexicon: " << w << "\n";
  const RuleSet rules = RuleSet::Load(a.rules);
  const std::vector<EntityMention> mentions = MentionsFromJsonl(ReadFile(a.in));
  std::vector<NormalizedMention> rows;
  std::map<std::string, size_t> by_source;
  for (const EntityMention& m : mentions) {
    NormalizedVariable v = NormalizeTerm(m.surface, m.entity_type, lexicon, rules, a.threshold);
    ++by_source[std::string(SourceName(v.source))];
    rows.push_back({m, std::move(v)});
  }
  WriteFile(a.out, NormalizedToJsonl(rows));
  json summary = {{"command", "normalize"}, {"mentions", rows.size()}};
  std::string text = "normalized " + std::to_string(rows.size()) + " mentions";
  for (const char* s : {"lexicon_link", "rule", "passthrough"}) {
    summary[s] = by_source[s];
    text += std::string(", ") + s + " " + std::to_string(by_source[s]);
  }
  Emit(out, as_json, summary, text + "\n");
  return kExitOk;
}

struct EvalArgs {
  std::string gold, pred, baseline;
};

int Eval(const EvalArgs& a, bool as_json, std::ostream& out, std::ostream&) {
  const std::vector<EntityMention> gold = MentionsFromJsonl(ReadFile(a.gold));
  const EvalReport report = EntityPrf(MentionsFromJsonl(ReadFile(a.pred)), gold);
  std::optional<EvalReport> baseline;
  if (!a.baseline.empty()) {
    baseline = EntityPrf(MentionsFromJsonl(ReadFile(a.baseline)), gold);
  }
  json summary = {{"command", "eval"}, {"predicted", ReportJson(report)}};
  std::string text = Row("model", "precision", "recall", "f1");
  text += ReportRow("predicted", report.overall);
  if (baseline) {
    const Comparison c = CompareModels(report, *baseline);
    summary["baseline"] = ReportJson(*baseline);
    summary["comparison"] = {
        {"delta", {{"precision", c.delta.precision},
                   {"recall", c.delta.recall},
                   {"f1", c.delta.f1}}},
        {"table_delta", {{"precision", c.table_delta.precision},
                         {"recall", c.table_delta.recall},
                         {"f1", c.table_delta.f1}}},
        {"winner", {{"precision", WinnerName(c.precision_winner)},
                    {"recall", WinnerName(c.recall_winner)},
                    {"f1", WinnerName(c.f1_winner)}}}};
    text += ReportRow("baseline", baseline->overall);
    text += Row("delta", Signed3(c.table_delta.precision), Signed3(c.table_delta.recall),
                Signed3(c.table_delta.f1));
    text += Row("winner", WinnerName(c.precision_winner), WinnerName(c.recall_winner),
                WinnerName(c.f1_winner));
  }
  text += "\n" + Row("type", "precision", "recall", "f1");
  for (const auto& [type, c] : report.per_type) text += ReportRow(type, c);
  Emit(out, as_json, summary, text);
  return kExitOk;
}

struct PatternsArgs {
  std::string in, trials, out, row_mode = "type", top_type;
  size_t min_count = kDefaultMinCount;
  size_t top = 0;
};

int Patterns(const PatternsArgs& a, bool as_json, std::ostream& out, std::ostream&) {
  const RowMode mode = ParseRowMode(a.row_mode);
  const std::vector<TrialRecord> trials = LoadTrials(a.trials);
  std::vector<TrialVariable> variables;
  for (NormalizedMention& r : NormalizedFromJsonl(ReadFile(a.in))) {
    variables.push_back({r.mention.ref.trial_id, std::move(r.variable)});
  }
  const FrequencyTable table = Aggregate(variables, trials, mode, a.min_count);
  WriteFile(a.out, TableToCsv(table));
  json summary = {{"command", "patterns"},
                  {"row_mode", RowModeName(mode)},
                  {"min_count", a.min_count},
                  {"rows", table.rows.size()},
                  {"columns", table.columns.size()}};
  std::string text = std::to_string(table.rows.size()) + " rows x " +
                     std::to_string(table.columns.size()) + " conditions\n";
  if (a.top > 0) {
    std::optional<std::string> filter;
    if (!a.top_type.empty()) filter = a.top_type;
    json top = json::array();
    for (const auto& [name, count] : TopVariables(variables, filter, a.top)) {
      top.push_back({{"variable", name}, {"trials", count}});
      text += name + "\t" + std::to_string(count) + "\n";
    }
    summary["top"] = top;
  }
  Emit(out, as_json, summary, text);
  return kExitOk;
}

struct GradcheckArgs {
  uint64_t seed = 1;
  double tolerance = 1e-4;
  double absolute_tolerance = 1e-8;  // for gradients below the floor
};

int Gradcheck(const GradcheckArgs& a, bool as_json, std::ostream& out, std::ostream&) {
  json checks = json::array();
  std::string text = "variant              array                        "
                     "coords max_rel    tiny max_abs\n";
  double worst = 0.0, worst_abs = 0.0;
  for (AttentionVariant v : {AttentionVariant::kNone, AttentionVariant::kDot,
                             AttentionVariant::kMultiply, AttentionVariant::kAdd}) {
    for (bool on_hidden : {false, true}) {
      if (v == AttentionVariant::kNone && on_hidden) continue;
      GradCheckOptions options;
      options.variant = v;
      options.scores_on_hidden = on_hidden;
      options.seed = a.seed;
      for (const ArrayCheck& c : CheckModelGradients(options)) {
        worst = std::max(worst, c.max_relative_error);
        worst_abs = std::max(worst_abs, c.max_absolute_error_below_floor);
        const std::string variant =
            std::string(VariantName(v)) + (on_hidden ? "/hidden" : "/embedding");
        checks.push_back({{"variant", variant},
                          {"array", c.name},
                          {"coordinates", c.coordinates},
                          {"below_floor", c.below_floor},
                          {"max_relative_error", c.max_relative_error},
                          {"max_absolute_error_below_floor",
                           c.max_absolute_error_below_floor}});
        char buf[192];
        std::snprintf(buf, sizeof(buf), "%-20s %-28s %4zu %.3e %4zu %.3e\n",
                      variant.c_str(), c.name.c_str(), c.coordinates,
                      c.max_relative_error, c.below_floor,
                      c.max_absolute_error_below_floor);
        text += buf;
      }
    }
  }
  const bool ok = worst < a.tolerance && worst_abs < a.absolute_tolerance;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%s max relative error %.3e (tolerance %.0e), max absolute error "
                "below floor %.3e (tolerance %.0e)\n",
                ok ? "PASS" : "FAIL", worst, a.tolerance, worst_abs,
                a.absolute_tolerance);
  text += buf;
  const json summary = {{"command", "gradcheck"},
                        {"seed", a.seed},
                        {"max_relative_error", worst},
                        {"tolerance", a.tolerance},
                        {"max_absolute_error_below_floor", worst_abs},
                        {"absolute_tolerance", a.absolute_tolerance},
                        {"passed", ok},
                        {"checks", checks}};
  Emit(out, as_json, summary, text);
  return ok ? kExitOk : kExitInternal;
}

struct SynthArgs {
  std::string out_dir;
  SyntheticOptions options;
};

int Synth(const SynthArgs& a, bool as_json, std::ostream& out, std::ostream&) {
  const SyntheticCorpus corpus = GenerateCorpus(a.options);
  std::error_code ec;
  std::filesystem::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir + ": " + ec.message());
  auto write = [&](const std::vector<TaggedSequence>& split, const std::string& name) {
    std::vector<ConllSentence> sentences;
    for (const TaggedSequence& s : split) {
      ConllSentence c;
      for (const Token& t : s.criterion.tokens) c.tokens.push_back(t.surface);
      c.tags = s.tags;
      sentences.push_back(std::move(c));
    }
    WriteFile((std::filesystem::path(a.out_dir) / name).string(), ConllToString(sentences));
  };
  write(corpus.train, "train.conll");
  write(corpus.dev, "dev.conll");
  write(corpus.test, "test.conll");
  const json summary = {{"command", "synth"},
                        {"train", corpus.train.size()},
                        {"dev", corpus.dev.size()},
                        {"test", corpus.test.size()},
                        {"entity_types", SyntheticEntityTypes()}};
  Emit(out, as_json, summary,
       "wrote " + std::to_string(corpus.train.size()) + "/" +
           std::to_string(corpus.dev.size()) + "/" + std::to_string(corpus.test.size()) +
           " sentences to " + a.out_dir + "\n");
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eligibility-criteria entity recognition toolkit", "trialner"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Print a JSON summary on standard output");

  auto* ingest_cmd = app.add_subcommand("ingest", "Segment trial records into criteria");
  IngestArgs ingest;
  ingest_cmd->add_option("--trials", ingest.trials, "trials.jsonl")->required();
  ingest_cmd->add_option("--out", ingest.out, "criteria.jsonl to write")->required();

  auto* train_cmd = app.add_subcommand("train", "Train the attention BiLSTM-CRF tagger");
  TrainArgs train;
  train_cmd->add_option("--data", train.data, "Training CoNLL file")->required();
  train_cmd->add_option("--dev", train.dev, "Development CoNLL file")->required();
  train_cmd->add_option("--config", train.config, "Training configuration JSON")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint to write")->required();

  auto* tag_cmd = app.add_subcommand("tag", "Tag criteria with a trained model");
  TagArgs tag;
  tag_cmd->add_option("--model", tag.model, "Checkpoint")->required();
  tag_cmd->add_option("--in", tag.in, "criteria.jsonl")->required();
  tag_cmd->add_option("--out", tag.out, "Mentions JSONL to write")->required();
  tag_cmd->add_option("--min-confidence", tag.min_confidence, "Entity confidence cut-off")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  tag_cmd->add_option("--tagset", tag.tagset, "Entity type list the model must match");
  tag_cmd->add_option("--threads", tag.threads, "Worker threads")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();

  auto* match_cmd = app.add_subcommand("match", "Tag criteria by lexicon lookup");
  MatchArgs match;
  match_cmd->add_option("--lexicon", match.lexicon, "Lexicon TSV")->required();
  match_cmd->add_option("--in", match.in, "criteria.jsonl")->required();
  match_cmd->add_option("--out", match.out, "Mentions JSONL to write")->required();
  match_cmd->add_option("--threads", match.threads, "Worker threads")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();

  auto* normalize_cmd = app.add_subcommand("normalize", "Map mentions to canonical variables");
  NormalizeArgs normalize;
  normalize_cmd->add_option("--lexicon", normalize.lexicon, "Lexicon TSV")->required();
  normalize_cmd->add_option("--rules", normalize.rules, "Rewrite rules TSV")->required();
  normalize_cmd->add_option("--in", normalize.in, "Mentions JSONL")->required();
  normalize_cmd->add_option("--out", normalize.out, "Normalized JSONL to write")->required();
  normalize_cmd->add_option("--threshold", normalize.threshold, "Fuzzy-match similarity")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Entity-level precision, recall and F1");
  EvalArgs eval;
  eval_cmd->add_option("--gold", eval.gold, "Gold mentions JSONL")->required();
  eval_cmd->add_option("--pred", eval.pred, "Predicted mentions JSONL")->required();
  eval_cmd->add_option("--baseline", eval.baseline, "Second prediction file to compare");

  auto* patterns_cmd = app.add_subcommand("patterns", "Variable-by-condition trial counts");
  PatternsArgs patterns;
  patterns_cmd->add_option("--in", patterns.in, "Normalized JSONL")->required();
  patterns_cmd->add_option("--trials", patterns.trials, "trials.jsonl")->required();
  patterns_cmd->add_option("--out", patterns.out, "CSV to write")->required();
  patterns_cmd->add_option("--row-mode", patterns.row_mode, "type or variable")
      ->check(CLI::IsMember({"type", "variable"}))
      ->capture_default_str();
  patterns_cmd->add_option("--min-count", patterns.min_count,
                           "Keep rows seen in more than this many trials")
      ->capture_default_str();
  patterns_cmd->add_option("--top", patterns.top, "Also list the top N variables");
  patterns_cmd->add_option("--top-type", patterns.top_type, "Restrict --top to one type");

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  GradcheckArgs gradcheck;
  gradcheck_cmd->add_option("--seed", gradcheck.seed, "Random seed")->capture_default_str();

  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic CoNLL corpus");
  SynthArgs synth;
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.options.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--train", synth.options.train_size)->capture_default_str();
  synth_cmd->add_option("--dev", synth.options.dev_size)->capture_default_str();
  synth_cmd->add_option("--test", synth.options.test_size)->capture_default_str();

  for (CLI::App* sub : app.get_subcommands({})) {
    sub->add_flag("--json", as_json, "Print a JSON summary on standard output");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest_cmd) return Ingest(ingest, as_json, out, err);
    if (*train_cmd) return TrainCommand(train, as_json, out, err);
    if (*tag_cmd) return Tag(tag, as_json, out, err);
    if (*match_cmd) return Match(match, as_json, out, err);
    if (*normalize_cmd) return Normalize(normalize, as_json, out, err);
    if (*eval_cmd) return Eval(eval, as_json, out, err);
    if (*patterns_cmd) return Patterns(patterns, as_json, out, err);
    if (*gradcheck_cmd) return Gradcheck(gradcheck, as_json, out, err);
    if (*synth_cmd) return Synth(synth, as_json, out, err);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace trialner
