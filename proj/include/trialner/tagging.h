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

#ifndef TRIALNER_TAGGING_H_
#define TRIALNER_TAGGING_H_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trialner/corpus.h"

namespace trialner {

// Entity type inventory and the BIO tag indices derived from it:
// 0 = "O", then "B-<type>", "I-<type>" for each type in order.
class TagSet {
 public:
  TagSet() : TagSet(std::vector<std::string>{}) {}
  explicit TagSet(std::vector<std::string> entity_types);

  // ALLERGY, CHRONIC_DISEASE, ... AGE.
  static TagSet Default();
  // One type per line; blank lines and '#' comments ignored.
  static TagSet Load(const std::string& path);

  const std::vector<std::string>& entity_types() const { return types_; }
  const std::vector<std::string>& tags() const { return tags_; }
  size_t size() const { return tags_.size(); }

  bool HasType(std::string_view type) const;
  std::optional<int> IndexOf(std::string_view tag) const;
  // Throws ConfigError for tags outside the inventory.
  int RequireIndex(std::string_view tag) const;
  int BeginTag(std::string_view type) const;
  int InsideTag(std::string_view type) const;

  friend bool operator==(const TagSet& a, const TagSet& b) {
    return a.types_ == b.types_;
  }

 private:
  std::vector<std::string> types_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> index_;
};

// Splits "B-X" into ('B', "X"); "O" and anything unparseable give ('O', "").
std::pair<char, std::string> SplitTag(std::string_view tag);

bool IsValidBio(const std::vector<std::string>& tags);

// Throws ContractError on overlapping or out-of-range spans and ConfigError
// on types missing from `tagset`.
TaggedSequence EncodeBio(const Criterion& criterion,
                         const std::vector<EntityMention>& mentions,
                         const TagSet& tagset);

// Total decoder: any tag sequence is accepted. A lone I-X (after O or after a
// different type) opens a new X mention.
std::vector<EntityMention> DecodeBio(const TaggedSequence& tagged);

}  // namespace trialner

#endif  // TRIALNER_TAGGING_H_
