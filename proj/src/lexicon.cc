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

#include "trialner/lexicon.h"

#include <algorithm>

#include "trialner/errors.h"
#include "trialner/formats.h"

namespace trialner {
namespace {

constexpr char kKeySep = '\x1f';

std::string TokenKey(const std::vector<std::string>& toks, size_t begin,
                     size_t end) {
  std::string key;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) key.push_back(kKeySep);
    key += toks[i];
  }
  return key;
}

std::vector<std::string> SplitOn(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    const size_t next = s.find(sep, pos);
    out.emplace_back(s.substr(pos, next == std::string_view::npos ? s.npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

std::string CanonicalForm(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

Lexicon::Lexicon(std::vector<ConceptEntry> entries) : entries_(std::move(entries)) {
  for (size_t e = 0; e < entries_.size(); ++e) {
    ConceptEntry& entry = entries_[e];
    entry.preferred_name = CanonicalForm(entry.preferred_name);
    for (std::string& s : entry.synonyms) s = CanonicalForm(s);
    std::erase_if(entry.synonyms, [](const std::string& s) { return s.empty(); });
    if (entry.preferred_name.empty()) {
      throw ParseError("concept " + entry.concept_id + " has an empty preferred name");
    }
    std::vector<std::string> all = {entry.preferred_name};
    all.insert(all.end(), entry.synonyms.begin(), entry.synonyms.end());
    for (const std::string& name : all) {
      auto [it, inserted] = by_name_.emplace(name, e);
      if (!inserted) {
        if (it->second != e) {
          warnings_.push_back("name \"" + name + "\" of " + entry.concept_id +
                              " already belongs to " +
                              entries_[it->second].concept_id + "; keeping the first");
        }
        continue;
      }
      names_.push_back({name, e});
      std::vector<std::string> toks;
      for (const Token& t : Tokenize(name)) toks.push_back(t.surface);
      max_tokens_ = std::max(max_tokens_, toks.size());
      by_tokens_.emplace(TokenKey(toks, 0, toks.size()), e);
    }
  }
}

Lexicon Lexicon::Parse(std::string_view tsv) {
  std::vector<ConceptEntry> entries;
  size_t pos = 0, line_no = 0;
  while (pos < tsv.size()) {
    size_t nl = tsv.find('\n', pos);
    if (nl == std::string_view::npos) nl = tsv.size();
    std::string_view line = tsv.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cols = SplitOn(line, '\t');
    if (cols.size() < 3 || cols.size() > 4 || cols[0].empty() || cols[1].empty() ||
        CanonicalForm(cols[2]).empty()) {
      throw ParseError("lexicon line " + std::to_string(line_no) +
                       ": expected concept_id, semantic_type, preferred_name "
                       "[, synonyms]");
    }
    ConceptEntry e{cols[0], cols[1], cols[2], {}};
    if (cols.size() == 4 && !cols[3].empty()) e.synonyms = SplitOn(cols[3], '|');
    entries.push_back(std::move(e));
  }
  return Lexicon(std::move(entries));
}

Lexicon Lexicon::Load(const std::string& path) { return Parse(ReadFile(path)); }

const ConceptEntry* Lexicon::Lookup(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? nullptr : &entries_[it->second];
}

const ConceptEntry* Lexicon::LookupTokens(
    const std::vector<std::string>& lowered_tokens, size_t begin, size_t end) const {
  auto it = by_tokens_.find(TokenKey(lowered_tokens, begin, end));
  return it == by_tokens_.end() ? nullptr : &entries_[it->second];
}

std::vector<EntityMention> MatchEntities(const Criterion& criterion,
                                         const Lexicon& lexicon) {
  const size_t n = criterion.tokens.size();
  std::vector<std::string> lowered;
  lowered.reserve(n);
  for (const Token& t : criterion.tokens) lowered.push_back(Lowercase(t.surface));

  struct Candidate {
    size_t first, last;
    const ConceptEntry* entry;
  };
  std::vector<Candidate> candidates;
  for (size_t s = 0; s < n; ++s) {
    const size_t max_len = std::min(lexicon.max_name_tokens(), n - s);
    for (size_t len = max_len; len >= 1; --len) {
      if (const ConceptEntry* e = lexicon.LookupTokens(lowered, s, s + len)) {
        candidates.push_back({s, s + len - 1, e});
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     const size_t la = a.last - a.first, lb = b.last - b.first;
                     if (la != lb) return la > lb;
                     return a.first < b.first;
                   });
  std::vector<bool> taken(n, false);
  std::vector<Candidate> accepted;
  for (const Candidate& c : candidates) {
    bool free = true;
    for (size_t t = c.first; t <= c.last && free; ++t) free = !taken[t];
    if (!free) continue;
    for (size_t t = c.first; t <= c.last; ++t) taken[t] = true;
    accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Candidate& a, const Candidate& b) { return a.first < b.first; });
  std::vector<EntityMention> out;
  for (const Candidate& c : accepted) {
    EntityMention m;
    m.ref = RefOf(criterion);
    m.entity_type = c.entry->semantic_type;
    m.first = c.first;
    m.last = c.last;
    m.surface = SpanSurface(criterion, c.first, c.last);
    m.confidence = 1.0;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace trialner
