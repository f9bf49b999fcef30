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

#ifndef TRIALNER_NORMALIZER_H_
#define TRIALNER_NORMALIZER_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trialner/corpus.h"
#include "trialner/lexicon.h"

namespace trialner {

constexpr double kDefaultFuzzyThreshold = 0.85;

size_t EditDistance(std::string_view a, std::string_view b);
// 1 - distance / max(|a|, |b|); 1 for two empty strings.
double EditSimilarity(std::string_view a, std::string_view b);

struct ConceptMatch {
  const ConceptEntry* entry = nullptr;
  std::string name;      // the stored name that matched
  double similarity = 0.0;
};

// Best stored name by edit similarity to the canonical form of `term`; ties
// prefer the shorter name, then the lexicographically smaller one.
std::optional<ConceptMatch> FuzzyMatch(std::string_view term, const Lexicon& lexicon,
                                       double threshold = kDefaultFuzzyThreshold);

// A canonical literal with an optional trailing-word group:
//   "pao2/fio2 [ratio|index]"  matches "pao2/fio2", "pao2/fio2 ratio" and
//                              "pao2/fio2 index".
// Matching is against the whole canonical term.
struct RewriteRule {
  int priority = 0;
  std::string pattern;
  std::string replacement;

  bool Matches(std::string_view canonical_term) const;
};

// Ordered by descending priority, then file order. Construction rejects rule
// sets where some replacement would itself be rewritten to something else.
class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::vector<RewriteRule> rules);

  // TSV: priority<TAB>pattern<TAB>replacement; '#' comments.
  static RuleSet Parse(std::string_view tsv);
  static RuleSet Load(const std::string& path);

  const std::vector<RewriteRule>& rules() const { return rules_; }
  const RewriteRule* FirstMatch(std::string_view canonical_term) const;

 private:
  std::vector<RewriteRule> rules_;
};

enum class VariableSource { kLexiconLink, kRule, kPassthrough };

std::string_view SourceName(VariableSource s);
VariableSource ParseSource(std::string_view name);

struct NormalizedVariable {
  std::string canonical;
  std::string variable_type;
  VariableSource source = VariableSource::kPassthrough;
  std::optional<std::string> matched_concept_id;

  friend bool operator==(const NormalizedVariable&, const NormalizedVariable&) = default;
};

// (1) fuzzy link to the lexicon, (2) else the first matching rewrite rule
// (its replacement is linked to the lexicon when possible), (3) else the
// canonical form itself. Throws ContractError on a blank term.
NormalizedVariable NormalizeTerm(std::string_view term, std::string_view type,
                                 const Lexicon& lexicon, const RuleSet& rules,
                                 double threshold = kDefaultFuzzyThreshold);

// One normalized mention as written by `normalize` and read by `patterns`.
struct NormalizedMention {
  EntityMention mention;
  NormalizedVariable variable;
};

std::string NormalizedToJsonl(const std::vector<NormalizedMention>& rows);
std::vector<NormalizedMention> NormalizedFromJsonl(std::string_view jsonl);

}  // namespace trialner

#endif  // TRIALNER_NORMALIZER_H_
