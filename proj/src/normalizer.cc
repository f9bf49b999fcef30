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

#include "trialner/normalizer.h"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "trialner/errors.h"
#include "trialner/formats.h"

namespace trialner {

size_t EditDistance(std::string_view a, std::string_view b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double EditSimilarity(std::string_view a, std::string_view b) {
  const size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(EditDistance(a, b)) / static_cast<double>(longest);
}

std::optional<ConceptMatch> FuzzyMatch(std::string_view term, const Lexicon& lexicon,
                                       double threshold) {
  const std::string canon = CanonicalForm(term);
  if (canon.empty()) throw ContractError("fuzzy match of an empty term");
  std::optional<ConceptMatch> best;
  for (const Lexicon::StoredName& n : lexicon.names()) {
    // Similarity can reach the threshold only if lengths are close enough.
    const size_t longest = std::max(canon.size(), n.name.size());
    const size_t diff = canon.size() > n.name.size() ? canon.size() - n.name.size()
                                                     : n.name.size() - canon.size();
    if (1.0 - static_cast<double>(diff) / static_cast<double>(longest) < threshold) {
      continue;
    }
    const double sim = EditSimilarity(canon, n.name);
    if (sim < threshold) continue;
    const bool better =
        !best || sim > best->similarity ||
        (sim == best->similarity &&
         (n.name.size() < best->name.size() ||
          (n.name.size() == best->name.size() && n.name < best->name)));
    if (better) best = ConceptMatch{&lexicon.entries()[n.entry], n.name, sim};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Rules

bool RewriteRule::Matches(std::string_view term) const {
  const size_t open = pattern.rfind('[');
  if (open == std::string::npos || pattern.back() != ']') return term == pattern;
  const std::string base = CanonicalForm(pattern.substr(0, open));
  if (term == base) return true;
  if (term.size() <= base.size() + 1 || term.substr(0, base.size()) != base ||
      term[base.size()] != ' ') {
    return false;
  }
  const std::string_view tail = term.substr(base.size() + 1);
  std::string_view alts(pattern);
  alts = alts.substr(open + 1, alts.size() - open - 2);
  while (true) {
    const size_t bar = alts.find('|');
    if (CanonicalForm(alts.substr(0, bar)) == tail) return true;
    if (bar == std::string_view::npos) return false;
    alts.remove_prefix(bar + 1);
  }
}

RuleSet::RuleSet(std::vector<RewriteRule> rules) : rules_(std::move(rules)) {
  for (RewriteRule& r : rules_) {
    r.replacement = CanonicalForm(r.replacement);
    if (r.pattern.empty() || r.replacement.empty()) {
      throw ParseError("rewrite rule with empty pattern or replacement");
    }
  }
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const RewriteRule& a, const RewriteRule& b) {
                     return a.priority > b.priority;
                   });
  for (const RewriteRule& r : rules_) {
    const RewriteRule* again = FirstMatch(r.replacement);
    if (again != nullptr && again->replacement != r.replacement) {
      throw ParseError("rule \"" + r.pattern + "\" -> \"" + r.replacement +
                       "\" is not a fixed point: \"" + again->pattern +
                       "\" rewrites it to \"" + again->replacement + "\"");
    }
  }
}

RuleSet RuleSet::Parse(std::string_view tsv) {
  std::vector<RewriteRule> rules;
  size_t pos = 0, line_no = 0;
  while (pos < tsv.size()) {
    size_t nl = tsv.find('\n', pos);
    if (nl == std::string_view::npos) nl = tsv.size();
    std::string_view line = tsv.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line[0] == '#') continue;
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos) {
      throw ParseError("rules line " + std::to_string(line_no) +
                       ": expected priority<TAB>pattern<TAB>replacement");
    }
    RewriteRule r;
    try {
      size_t used = 0;
      const std::string prio(line.substr(0, t1));
      r.priority = std::stoi(prio, &used);
      if (used != prio.size()) throw std::invalid_argument(prio);
    } catch (const std::exception&) {
      throw ParseError("rules line " + std::to_string(line_no) + ": bad priority");
    }
    r.pattern = CanonicalForm(line.substr(t1 + 1, t2 - t1 - 1));
    r.replacement = std::string(line.substr(t2 + 1));
    if (r.pattern.empty() || CanonicalForm(r.replacement).empty()) {
      throw ParseError("rules line " + std::to_string(line_no) +
                       ": empty pattern or replacement");
    }
    rules.push_back(std::move(r));
  }
  return RuleSet(std::move(rules));
}

RuleSet RuleSet::Load(const std::string& path) { return Parse(ReadFile(path)); }

const RewriteRule* RuleSet::FirstMatch(std::string_view term) const {
  for (const RewriteRule& r : rules_) {
    if (r.Matches(term)) return &r;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Normalization

std::string_view SourceName(VariableSource s) {
  switch (s) {
    case VariableSource::kLexiconLink: return "lexicon_link";
    case VariableSource::kRule: return "rule";
    case VariableSource::kPassthrough: return "passthrough";
  }
  return "passthrough";
}

VariableSource ParseSource(std::string_view name) {
  if (name == "lexicon_link") return VariableSource::kLexiconLink;
  if (name == "rule") return VariableSource::kRule;
  if (name == "passthrough") return VariableSource::kPassthrough;
  throw ParseError("unknown normalization source \"" + std::string(name) + "\"");
}

NormalizedVariable NormalizeTerm(std::string_view term, std::string_view type,
                                 const Lexicon& lexicon, const RuleSet& rules,
                                 double threshold) {
  const std::string canon = CanonicalForm(term);
  if (canon.empty()) throw ContractError("cannot normalize a blank term");
  NormalizedVariable out;
  out.variable_type = std::string(type);
  if (auto m = FuzzyMatch(canon, lexicon, threshold)) {
    out.canonical = m->entry->preferred_name;
    out.source = VariableSource::kLexiconLink;
    out.matched_concept_id = m->entry->concept_id;
    return out;
  }
  if (const RewriteRule* r = rules.FirstMatch(canon)) {
    out.canonical = r->replacement;
    out.source = VariableSource::kRule;
    // A rewritten term that names a concept takes the concept's preferred
    // name, so normalizing the output again is a no-op.
    if (auto m = FuzzyMatch(out.canonical, lexicon, threshold)) {
      out.canonical = m->entry->preferred_name;
      out.matched_concept_id = m->entry->concept_id;
    }
    return out;
  }
  out.canonical = canon;
  out.source = VariableSource::kPassthrough;
  return out;
}

std::string NormalizedToJsonl(const std::vector<NormalizedMention>& rows) {
  std::string out;
  for (const NormalizedMention& r : rows) {
    const EntityMention& m = r.mention;
    nlohmann::json j = {{"trial_id", m.ref.trial_id},
                        {"arm", ArmName(m.ref.arm)},
                        {"index", m.ref.index},
                        {"first", m.first},
                        {"last", m.last},
                        {"type", m.entity_type},
                        {"surface", m.surface},
                        {"confidence", RoundConfidence(m.confidence)},
                        {"canonical", r.variable.canonical},
                        {"source", SourceName(r.variable.source)}};
    j["concept_id"] = r.variable.matched_concept_id
                          ? nlohmann::json(*r.variable.matched_concept_id)
                          : nlohmann::json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<NormalizedMention> NormalizedFromJsonl(std::string_view jsonl) {
  std::vector<NormalizedMention> out;
  const std::vector<EntityMention> mentions = MentionsFromJsonl(jsonl);
  size_t k = 0, pos = 0, line_no = 0;
  while (pos < jsonl.size()) {
    size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      NormalizedMention row;
      row.mention = mentions.at(k++);
      row.variable.canonical = j.at("canonical").get<std::string>();
      if (row.variable.canonical.empty()) throw ParseError("empty canonical");
      row.variable.variable_type = row.mention.entity_type;
      row.variable.source = ParseSource(j.at("source").get<std::string>());
      if (j.contains("concept_id") && !j["concept_id"].is_null()) {
        row.variable.matched_concept_id = j["concept_id"].get<std::string>();
      }
      if (row.variable.source == VariableSource::kLexiconLink &&
          !row.variable.matched_concept_id) {
        throw ParseError("lexicon_link without concept_id");
      }
      out.push_back(std::move(row));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace trialner
