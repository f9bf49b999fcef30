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

#include "trialner/patterns.h"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "trialner/errors.h"

namespace trialner {
namespace {

const std::string& RowKey(const TrialVariable& v, RowMode mode) {
  return mode == RowMode::kType ? v.variable.variable_type : v.variable.canonical;
}

// Names ordered by descending count, then ascending name.
std::vector<std::string> RankByCount(const std::map<std::string, size_t>& counts) {
  std::vector<std::string> names;
  for (const auto& [name, n] : counts) names.push_back(name);
  std::stable_sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
    return counts.at(a) > counts.at(b);
  });
  return names;
}

std::string CsvField(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string_view RowModeName(RowMode mode) {
  return mode == RowMode::kType ? "type" : "variable";
}

RowMode ParseRowMode(std::string_view name) {
  if (name == "type") return RowMode::kType;
  if (name == "variable") return RowMode::kVariable;
  throw ConfigError("row mode must be \"type\" or \"variable\", got \"" +
                    std::string(name) + "\"");
}

size_t FrequencyTable::Cell(std::string_view row, std::string_view column) const {
  const auto r = std::find(rows.begin(), rows.end(), row);
  const auto c = std::find(columns.begin(), columns.end(), column);
  if (r == rows.end() || c == columns.end()) return 0;
  return cells[r - rows.begin()][c - columns.begin()];
}

FrequencyTable Aggregate(const std::vector<TrialVariable>& variables,
                         const std::vector<TrialRecord>& trials, RowMode row_mode,
                         size_t min_count) {
  std::unordered_map<std::string, const TrialRecord*> by_id;
  for (const TrialRecord& t : trials) by_id.emplace(t.trial_id, &t);

  // Row key -> distinct trials.
  std::map<std::string, std::set<std::string>> trials_of;
  for (const TrialVariable& v : variables) {
    if (by_id.count(v.trial_id) == 0) {
      throw ContractError("variable refers to unknown trial \"" + v.trial_id + "\"");
    }
    trials_of[RowKey(v, row_mode)].insert(v.trial_id);
  }

  std::map<std::string, size_t> row_totals;
  for (const auto& [key, ids] : trials_of) {
    if (ids.size() > min_count) row_totals[key] = ids.size();
  }

  // (row, condition) -> distinct trials. Conditions repeated inside one
  // record count once.
  std::map<std::string, std::map<std::string, size_t>> counts;
  std::map<std::string, size_t> column_totals;
  for (const auto& [key, total] : row_totals) {
    for (const std::string& id : trials_of[key]) {
      const std::set<std::string> conditions(by_id[id]->conditions.begin(),
                                             by_id[id]->conditions.end());
      for (const std::string& c : conditions) {
        ++counts[key][c];
        ++column_totals[c];
      }
    }
  }

  FrequencyTable table;
  table.row_mode = row_mode;
  table.min_count = min_count;
  table.rows = RankByCount(row_totals);
  table.columns = RankByCount(column_totals);
  for (const std::string& r : table.rows) {
    table.row_totals.push_back(row_totals[r]);
    std::vector<size_t> line;
    for (const std::string& c : table.columns) {
      const auto it = counts[r].find(c);
      line.push_back(it == counts[r].end() ? 0 : it->second);
    }
    table.cells.push_back(std::move(line));
  }
  return table;
}

std::vector<std::pair<std::string, size_t>> TopVariables(
    const std::vector<TrialVariable>& variables,
    const std::optional<std::string>& type_filter, size_t k) {
  if (k == 0) throw ContractError("top_variables needs k >= 1");
  std::map<std::string, std::set<std::string>> trials_of;
  for (const TrialVariable& v : variables) {
    if (type_filter && v.variable.variable_type != *type_filter) continue;
    trials_of[v.variable.canonical].insert(v.trial_id);
  }
  std::map<std::string, size_t> totals;
  for (const auto& [name, ids] : trials_of) totals[name] = ids.size();
  std::vector<std::pair<std::string, size_t>> out;
  for (const std::string& name : RankByCount(totals)) {
    if (out.size() == k) break;
    out.emplace_back(name, totals[name]);
  }
  return out;
}

std::string TableToCsv(const FrequencyTable& table) {
  std::string out(RowModeName(table.row_mode));
  for (const std::string& c : table.columns) {
    out += ',';
    out += CsvField(c);
  }
  out += '\n';
  for (size_t r = 0; r < table.rows.size(); ++r) {
    out += CsvField(table.rows[r]);
    for (size_t n : table.cells[r]) {
      out += ',';
      out += std::to_string(n);
    }
    out += '\n';
  }
  return out;
}

}  // namespace trialner
