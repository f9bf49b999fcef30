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

#ifndef TRIALNER_PATTERNS_H_
#define TRIALNER_PATTERNS_H_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trialner/corpus.h"
#include "trialner/normalizer.h"

namespace trialner {

constexpr size_t kDefaultMinCount = 10;

enum class RowMode { kType, kVariable };

std::string_view RowModeName(RowMode mode);
RowMode ParseRowMode(std::string_view name);

struct TrialVariable {
  std::string trial_id;
  NormalizedVariable variable;
};

// Distinct-trial counts of row keys against trial conditions.
struct FrequencyTable {
  RowMode row_mode = RowMode::kType;
  size_t min_count = kDefaultMinCount;
  std::vector<std::string> rows;              // descending total, then name
  std::vector<size_t> row_totals;             // distinct trials per row
  std::vector<std::string> columns;           // descending total, then name
  std::vector<std::vector<size_t>> cells;     // [row][column]

  size_t Cell(std::string_view row, std::string_view column) const;
  friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;
};

// Keeps rows whose distinct-trial total is strictly greater than min_count.
// Columns are the conditions with a nonzero count in some kept row. A trial
// counts once per row key regardless of arm or mention multiplicity.
// Throws ContractError for a trial_id absent from `trials`.
FrequencyTable Aggregate(const std::vector<TrialVariable>& variables,
                         const std::vector<TrialRecord>& trials, RowMode row_mode,
                         size_t min_count = kDefaultMinCount);

// Canonical variables ranked by distinct-trial count (ties lexicographic),
// optionally restricted to one entity type. Requires k >= 1.
std::vector<std::pair<std::string, size_t>> TopVariables(
    const std::vector<TrialVariable>& variables,
    const std::optional<std::string>& type_filter, size_t k);

// RFC 4180 CSV; header "type" or "variable" followed by the columns.
std::string TableToCsv(const FrequencyTable& table);

}  // namespace trialner

#endif  // TRIALNER_PATTERNS_H_
