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

#ifndef TRIALNER_TESTS_PATTERN_ORACLE_H_
#define TRIALNER_TESTS_PATTERN_ORACLE_H_

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "trialner/patterns.h"

namespace trialner {
namespace testing {

inline const std::string& OracleKey(const TrialVariable& v, RowMode mode) {
  return mode == RowMode::kType ? v.variable.variable_type : v.variable.canonical;
}

inline void AddUnique(std::vector<std::string>* names, const std::string& s) {
  if (std::find(names->begin(), names->end(), s) == names->end()) names->push_back(s);
}

// Does trial `t` carry row key `key`? Linear scan of all variables.
inline bool TrialHasKey(const std::vector<TrialVariable>& vars, const std::string& t,
                        const std::string& key, RowMode mode,
                        const std::string* type_filter = nullptr) {
  for (const TrialVariable& v : vars) {
    if (type_filter && v.variable.variable_type != *type_filter) continue;
    if (v.trial_id == t && OracleKey(v, mode) == key) return true;
  }
  return false;
}

inline bool HasCondition(const TrialRecord& t, const std::string& c) {
  return std::find(t.conditions.begin(), t.conditions.end(), c) != t.conditions.end();
}

inline std::vector<std::string> RankNames(std::vector<std::pair<std::string, size_t>> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& p : v) out.push_back(p.first);
  return out;
}

// Nested-loop recount of Aggregate.
inline FrequencyTable OracleAggregate(const std::vector<TrialVariable>& vars,
                                      const std::vector<TrialRecord>& trials, RowMode mode,
                                      size_t min_count) {
  std::vector<std::string> keys, conditions;
  for (const TrialVariable& v : vars) AddUnique(&keys, OracleKey(v, mode));
  for (const TrialRecord& t : trials)
    for (const std::string& c : t.conditions) AddUnique(&conditions, c);

  std::vector<std::pair<std::string, size_t>> kept;
  for (const std::string& k : keys) {
    size_t n = 0;
    for (const TrialRecord& t : trials) n += TrialHasKey(vars, t.trial_id, k, mode);
    if (n > min_count) kept.emplace_back(k, n);
  }
  auto count = [&](const std::string& k, const std::string& c) {
    size_t n = 0;
    for (const TrialRecord& t : trials)
      n += TrialHasKey(vars, t.trial_id, k, mode) && HasCondition(t, c);
    return n;
  };
  std::vector<std::pair<std::string, size_t>> cols;
  for (const std::string& c : conditions) {
    size_t total = 0;
    for (const auto& [k, n] : kept) total += count(k, c);
    if (total > 0) cols.emplace_back(c, total);
  }

  FrequencyTable table;
  table.row_mode = mode;
  table.min_count = min_count;
  table.rows = RankNames(kept);
  table.columns = RankNames(cols);
  for (const std::string& r : table.rows) {
    for (const auto& [k, n] : kept)
      if (k == r) table.row_totals.push_back(n);
    std::vector<size_t> line;
    for (const std::string& c : table.columns) line.push_back(count(r, c));
    table.cells.push_back(line);
  }
  return table;
}

inline std::vector<std::pair<std::string, size_t>> OracleTopVariables(
    const std::vector<TrialVariable>& vars, const std::vector<TrialRecord>& trials,
    const std::string* type_filter, size_t k) {
  std::vector<std::string> names;
  for (const TrialVariable& v : vars)
    if (!type_filter || v.variable.variable_type == *type_filter)
      AddUnique(&names, v.variable.canonical);
  std::vector<std::pair<std::string, size_t>> counts;
  for (const std::string& name : names) {
    size_t n = 0;
    for (const TrialRecord& t : trials)
      n += TrialHasKey(vars, t.trial_id, name, RowMode::kVariable, type_filter);
    counts.emplace_back(name, n);
  }
  const std::vector<std::string> ranked = RankNames(counts);
  std::vector<std::pair<std::string, size_t>> out;
  for (const std::string& name : ranked) {
    if (out.size() == k) break;
    for (const auto& p : counts)
      if (p.first == name) out.push_back(p);
  }
  return out;
}

}  // namespace testing
}  // namespace trialner

#endif  // TRIALNER_TESTS_PATTERN_ORACLE_H_
