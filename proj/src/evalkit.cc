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

#include "trialner/evalkit.h"

#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

#include "trialner/errors.h"

namespace trialner {
namespace {

using MentionKey = std::tuple<CriterionRef, size_t, size_t, std::string>;

MentionKey KeyOf(const EntityMention& m) {
  return {m.ref, m.first, m.last, m.entity_type};
}

std::string Describe(const EntityMention& m) {
  return m.ref.trial_id + "/" + std::string(ArmName(m.ref.arm)) + "/" +
         std::to_string(m.ref.index) + " [" + std::to_string(m.first) + "," +
         std::to_string(m.last) + "] " + m.entity_type;
}

std::set<MentionKey> UniqueKeys(const std::vector<EntityMention>& mentions,
                                const char* which) {
  std::set<MentionKey> keys;
  for (const EntityMention& m : mentions) {
    if (!keys.insert(KeyOf(m)).second) {
      throw ParseError(std::string("duplicate mention in ") + which + ": " + Describe(m));
    }
  }
  return keys;
}

double Round3(double x) { return std::round(x * 1000.0) / 1000.0; }

int Winner(double a, double b) {
  if (a > b) return 0;
  if (b > a) return 1;
  return -1;
}

}  // namespace

PrfCounts PrfFromCounts(size_t tp, size_t predicted, size_t gold) {
  if (tp > predicted || tp > gold) {
    throw ContractError("true positives exceed predicted or gold count");
  }
  PrfCounts c;
  c.true_positives = tp;
  c.predicted_count = predicted;
  c.gold_count = gold;
  c.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / predicted;
  c.recall = gold == 0 ? 0.0 : static_cast<double>(tp) / gold;
  const double sum = c.precision + c.recall;
  c.f1 = sum == 0.0 ? 0.0 : 2.0 * c.precision * c.recall / sum;
  return c;
}

EvalReport EntityPrf(const std::vector<EntityMention>& predicted,
                     const std::vector<EntityMention>& gold) {
  const std::set<MentionKey> gold_keys = UniqueKeys(gold, "gold");
  const std::set<MentionKey> pred_keys = UniqueKeys(predicted, "predictions");

  struct Tally { size_t tp = 0, pred = 0, gold = 0; };
  std::map<std::string, Tally> tallies;
  Tally all;
  for (const EntityMention& m : gold) {
    ++tallies[m.entity_type].gold;
    ++all.gold;
  }
  for (const EntityMention& m : predicted) {
    Tally& t = tallies[m.entity_type];
    ++t.pred;
    ++all.pred;
    // Keys are unique on both sides, so set membership is the one-to-one match.
    if (gold_keys.count(KeyOf(m)) != 0) {
      ++t.tp;
      ++all.tp;
    }
  }

  EvalReport report;
  report.overall = PrfFromCounts(all.tp, all.pred, all.gold);
  for (const auto& [type, t] : tallies) {
    report.per_type[type] = PrfFromCounts(t.tp, t.pred, t.gold);
  }
  return report;
}

Comparison CompareModels(const EvalReport& a, const EvalReport& b) {
  if (a.overall.gold_count != b.overall.gold_count) {
    throw ContractError("reports use different gold sets (" +
                        std::to_string(a.overall.gold_count) + " vs " +
                        std::to_string(b.overall.gold_count) + " mentions)");
  }
  Comparison c;
  c.delta.precision = a.overall.precision - b.overall.precision;
  c.delta.recall = a.overall.recall - b.overall.recall;
  c.delta.f1 = a.overall.f1 - b.overall.f1;
  c.table_delta.precision = Round3(Round3(a.overall.precision) - Round3(b.overall.precision));
  c.table_delta.recall = Round3(Round3(a.overall.recall) - Round3(b.overall.recall));
  c.table_delta.f1 = Round3(Round3(a.overall.f1) - Round3(b.overall.f1));
  c.precision_winner = Winner(a.overall.precision, b.overall.precision);
  c.recall_winner = Winner(a.overall.recall, b.overall.recall);
  c.f1_winner = Winner(a.overall.f1, b.overall.f1);
  return c;
}

std::string Format3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

}  // namespace trialner
