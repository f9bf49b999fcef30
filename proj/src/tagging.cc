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

#include "trialner/tagging.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "trialner/errors.h"

namespace trialner {

TagSet::TagSet(std::vector<std::string> entity_types)
    : types_(std::move(entity_types)) {
  tags_.push_back("O");
  for (const std::string& t : types_) {
    if (t.empty()) throw ConfigError("empty entity type name");
    tags_.push_back("B-" + t);
    tags_.push_back("I-" + t);
  }
  for (size_t i = 0; i < tags_.size(); ++i) {
    if (!index_.emplace(tags_[i], static_cast<int>(i)).second) {
      throw ConfigError("duplicate tag " + tags_[i]);
    }
  }
}

TagSet TagSet::Default() {
  return TagSet({"ALLERGY", "CHRONIC_DISEASE", "CANCER", "PREGNANCY", "CONSENT",
                 "TREATMENT", "CLINICAL_VARIABLE", "LANGUAGE_FLUENCY",
                 "TECHNOLOGY_ACCESS", "GENDER", "AGE"});
}

TagSet TagSet::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tag set file " + path);
  std::vector<std::string> types;
  std::string line;
  while (std::getline(in, line)) {
    const size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const size_t e = line.find_last_not_of(" \t\r");
    types.push_back(line.substr(b, e + 1 - b));
  }
  return TagSet(std::move(types));
}

bool TagSet::HasType(std::string_view type) const {
  return std::find(types_.begin(), types_.end(), type) != types_.end();
}

std::optional<int> TagSet::IndexOf(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int TagSet::RequireIndex(std::string_view tag) const {
  if (auto idx = IndexOf(tag)) return *idx;
  throw ConfigError("tag \"" + std::string(tag) + "\" not in tag set");
}

int TagSet::BeginTag(std::string_view type) const {
  return RequireIndex("B-" + std::string(type));
}

int TagSet::InsideTag(std::string_view type) const {
  return RequireIndex("I-" + std::string(type));
}

std::pair<char, std::string> SplitTag(std::string_view tag) {
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return {tag[0], std::string(tag.substr(2))};
  }
  return {'O', ""};
}

bool IsValidBio(const std::vector<std::string>& tags) {
  std::string prev_type;
  for (const std::string& tag : tags) {
    auto [kind, type] = SplitTag(tag);
    if (kind == 'O' && tag != "O") return false;
    if (kind == 'I' && type != prev_type) return false;
    prev_type = type;
  }
  return true;
}

TaggedSequence EncodeBio(const Criterion& criterion,
                         const std::vector<EntityMention>& mentions,
                         const TagSet& tagset) {
  const size_t n = criterion.tokens.size();
  TaggedSequence out{criterion, std::vector<std::string>(n, "O")};
  std::vector<int> owner(n, -1);
  for (size_t m = 0; m < mentions.size(); ++m) {
    const EntityMention& e = mentions[m];
    if (e.first > e.last || e.last >= n) {
      throw ContractError("mention span [" + std::to_string(e.first) + ", " +
                          std::to_string(e.last) + "] outside " +
                          std::to_string(n) + " tokens");
    }
    if (!tagset.HasType(e.entity_type)) {
      throw ConfigError("entity type " + e.entity_type + " not in tag set");
    }
    for (size_t t = e.first; t <= e.last; ++t) {
      if (owner[t] >= 0) {
        const EntityMention& o = mentions[owner[t]];
        throw ContractError(
            "overlapping mentions [" + std::to_string(o.first) + ", " +
            std::to_string(o.last) + "] and [" + std::to_string(e.first) +
            ", " + std::to_string(e.last) + "]");
      }
      owner[t] = static_cast<int>(m);
      out.tags[t] = (t == e.first ? "B-" : "I-") + e.entity_type;
    }
  }
  return out;
}

std::vector<EntityMention> DecodeBio(const TaggedSequence& tagged) {
  const Criterion& c = tagged.criterion;
  const size_t n = std::min(tagged.tags.size(), c.tokens.size());
  std::vector<EntityMention> out;
  std::string open_type;
  auto close = [&](size_t last) {
    if (open_type.empty()) return;
    out.back().last = last;
    out.back().surface = SpanSurface(c, out.back().first, last);
    open_type.clear();
  };
  for (size_t i = 0; i < n; ++i) {
    auto [kind, type] = SplitTag(tagged.tags[i]);
    if (kind == 'I' && type == open_type) continue;
    if (i > 0) close(i - 1);
    if (kind == 'O') continue;
    // B-X, or an I-X without a compatible predecessor: start a new mention.
    EntityMention m;
    m.ref = RefOf(c);
    m.entity_type = type;
    m.first = i;
    m.last = i;
    out.push_back(std::move(m));
    open_type = type;
  }
  if (n > 0) close(n - 1);
  return out;
}

}  // namespace trialner
