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

#ifndef TRIALNER_EVALKIT_H_
#define TRIALNER_EVALKIT_H_

#include <map>
#include <string>
#include <vector>

#include "trialner/corpus.h"

namespace trialner {

struct PrfCounts {
  size_t true_positives = 0;
  size_t predicted_count = 0;
  size_t gold_count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Fills precision, recall and f1 from the three counts. Each ratio is 0 when
// its denominator is 0. Throws ContractError if tp exceeds either count.
PrfCounts PrfFromCounts(size_t tp, size_t predicted, size_t gold);

struct EvalReport {
  PrfCounts overall;
  std::map<std::string, PrfCounts> per_type;
};

// Exact matching on (criterion, first, last, type); each gold mention is
// consumed at most once. Duplicate identical mentions within either input
// raise ParseError.
EvalReport EntityPrf(const std::vector<EntityMention>& predicted,
                     const std::vector<EntityMention>& gold);

struct MetricDelta {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Comparison {
  MetricDelta delta;        // a - b on exact ratios
  MetricDelta table_delta;  // a - b on the three-decimal values, as tabulated
  int precision_winner;    // 0: a, 1: b, -1: tie
  int recall_winner;
  int f1_winner;
};

// Throws ContractError when the reports were built on different gold sets.
Comparison CompareModels(const EvalReport& a, const EvalReport& b);

// Fixed three-decimal rendering used in reports, e.g. "0.942".
std::string Format3(double x);

}  // namespace trialner

#endif  // TRIALNER_EVALKIT_H_
