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

#ifndef TRIALNER_CORPUS_H_
#define TRIALNER_CORPUS_H_

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trialner {

enum class Arm { kInclusion, kExclusion };

std::string_view ArmName(Arm arm);
// Throws ParseError for anything other than "inclusion" / "exclusion".
Arm ParseArm(std::string_view name);

// A registry study as loaded from trials.jsonl.
struct TrialRecord {
  std::string trial_id;
  std::vector<std::string> conditions;
  std::string eligibility_text;
  // Set when the record cannot be segmented (no text, no headings).
  std::optional<std::string> exclusion_reason;

  bool excluded() const { return exclusion_reason.has_value(); }
};

// Byte offsets [start, end) into the owning criterion text.
struct Token {
  std::string surface;
  size_t start = 0;
  size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Criterion {
  std::string trial_id;
  Arm arm = Arm::kInclusion;
  int index = 0;
  std::string text;
  std::vector<Token> tokens;

  friend bool operator==(const Criterion&, const Criterion&) = default;
};

// Identifies a criterion across files: (trial_id, arm, index).
struct CriterionRef {
  std::string trial_id;
  Arm arm = Arm::kInclusion;
  int index = 0;

  friend auto operator<=>(const CriterionRef&, const CriterionRef&) = default;
  friend bool operator==(const CriterionRef&, const CriterionRef&) = default;
};

CriterionRef RefOf(const Criterion& c);

struct EntityMention {
  CriterionRef ref;
  std::string entity_type;
  size_t first = 0;  // inclusive token index
  size_t last = 0;   // inclusive token index
  std::string surface;
  double confidence = 1.0;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct TaggedSequence {
  Criterion criterion;
  std::vector<std::string> tags;
};

// Loads trials.jsonl. Every parseable record is returned; records with empty
// eligibility text or with neither "inclusion criteria:" nor "exclusion
// criteria:" heading (case-insensitive) come back with exclusion_reason set.
// Throws IoError / ParseError (the message names the 1-based line number).
std::vector<TrialRecord> LoadTrials(const std::string& path);
std::vector<TrialRecord> ParseTrials(std::string_view jsonl);

// Splits a record's criteria text into inclusion then exclusion criteria.
// Throws ContractError for excluded records.
std::vector<Criterion> SegmentCriteria(const TrialRecord& record);

// Whitespace split, then punctuation split. '/' and '.' stay inside a token
// when both neighbours are alphanumeric ("pao2/fio2", "2.5"). Bytes >= 0x80
// count as alphanumeric so UTF-8 words are never cut.
std::vector<Token> Tokenize(std::string_view text);

// Builds a criterion from pre-split tokens joined by single spaces.
Criterion CriterionFromTokens(CriterionRef ref,
                              const std::vector<std::string>& surfaces);

// Lowercases ASCII letters.
std::string Lowercase(std::string_view s);

// Text covered by tokens [first, last] of `c`.
std::string SpanSurface(const Criterion& c, size_t first, size_t last);

}  // namespace trialner

#endif  // TRIALNER_CORPUS_H_
