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

#ifndef TRIALNER_LEXICON_H_
#define TRIALNER_LEXICON_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trialner/corpus.h"

namespace trialner {

// Lowercased, whitespace runs collapsed to one space, trimmed.
std::string CanonicalForm(std::string_view text);

struct ConceptEntry {
  std::string concept_id;
  std::string semantic_type;   // e.g. "Drug", "Persons", "Age groups"
  std::string preferred_name;  // canonical form
  std::vector<std::string> synonyms;  // canonical forms
};

// Name/synonym dictionary with a token-sequence index for longest-match
// scanning. Immutable after construction.
class Lexicon {
 public:
  struct StoredName {
    std::string name;   // canonical form
    size_t entry = 0;   // owning entry
  };

  Lexicon() = default;
  // Names shared by several concepts go to the first concept that lists
  // them; each such collision is recorded in warnings().
  explicit Lexicon(std::vector<ConceptEntry> entries);

  // TSV: concept_id<TAB>semantic_type<TAB>preferred_name<TAB>syn1|syn2|...
  // '#' lines and blank lines are skipped. Throws ParseError with the line
  // number on malformed rows.
  static Lexicon Parse(std::string_view tsv);
  static Lexicon Load(const std::string& path);

  const std::vector<ConceptEntry>& entries() const { return entries_; }
  const std::vector<StoredName>& names() const { return names_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  size_t max_name_tokens() const { return max_tokens_; }

  // Entry owning a canonical name, or null.
  const ConceptEntry* Lookup(std::string_view name) const;
  // Entry whose name tokenizes to exactly `lowered_tokens`, or null.
  const ConceptEntry* LookupTokens(const std::vector<std::string>& lowered_tokens,
                                   size_t begin, size_t end) const;

 private:
  std::vector<ConceptEntry> entries_;
  std::vector<StoredName> names_;
  std::vector<std::string> warnings_;
  std::unordered_map<std::string, size_t> by_name_;
  std::unordered_map<std::string, size_t> by_tokens_;
  size_t max_tokens_ = 0;
};

// Case-insensitive token-sequence matching. Candidates are accepted longest
// first, then leftmost, skipping any that overlap an accepted mention.
// Mentions carry the concept's semantic type and confidence 1.
std::vector<EntityMention> MatchEntities(const Criterion& criterion,
                                         const Lexicon& lexicon);

}  // namespace trialner

#endif  // TRIALNER_LEXICON_H_
