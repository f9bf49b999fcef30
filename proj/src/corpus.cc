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

#include "trialner/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "trialner/errors.h"

namespace trialner {
namespace {

constexpr std::string_view kInclusionHeading = "inclusion criteria:";
constexpr std::string_view kExclusionHeading = "exclusion criteria:";

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsWordChar(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u);
}

bool IsDigit(char c) { return c >= '0' && c <= '9'; }

size_t FindCaseInsensitive(std::string_view haystack, std::string_view needle) {
  const std::string lower = Lowercase(haystack);
  const size_t pos = lower.find(needle);
  return pos;
}

// Length of a bullet marker at `pos` ("-", "*", "•", "12.", "3)") when it is
// followed by whitespace or the end of text; 0 otherwise.
size_t BulletLength(std::string_view s, size_t pos) {
  size_t len = 0;
  if (s[pos] == '-' || s[pos] == '*') {
    len = 1;
  } else if (s.substr(pos, 3) == "\xE2\x80\xA2") {
    len = 3;
  } else if (IsDigit(s[pos])) {
    size_t i = pos;
    while (i < s.size() && IsDigit(s[i]) && i - pos < 3) ++i;
    if (i < s.size() && (s[i] == '.' || s[i] == ')')) len = i + 1 - pos;
  }
  if (len == 0) return 0;
  if (pos + len < s.size() && !IsSpace(s[pos + len])) return 0;
  return len;
}

std::string_view Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && IsSpace(s[b])) ++b;
  while (e > b && IsSpace(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Rule-based splitting of one arm's text into criterion strings.
std::vector<std::string> SplitSegments(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  bool at_start = true;
  auto flush = [&] {
    const std::string_view t = Trim(current);
    if (!t.empty()) out.emplace_back(t);
    current.clear();
    at_start = true;
  };
  size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (at_start) {
      if (IsSpace(c)) {
        ++i;
        continue;
      }
      if (const size_t len = BulletLength(text, i); len > 0) {
        i += len;
        continue;
      }
      at_start = false;
    }
    if (c == '\n' || c == '\r' || c == ';') {
      flush();
      ++i;
      continue;
    }
    if (c == '.') {
      const bool joined = i > 0 && i + 1 < text.size() &&
                          IsWordChar(text[i - 1]) && IsWordChar(text[i + 1]);
      if (!joined) {
        flush();
        ++i;
        continue;
      }
    }
    current.push_back(c);
    ++i;
  }
  flush();
  return out;
}

TrialRecord RecordFromJson(const nlohmann::json& j) {
  TrialRecord r;
  if (!j.is_object()) throw ParseError("expected a JSON object");
  if (!j.contains("trial_id") || !j["trial_id"].is_string()) {
    throw ParseError("missing string field \"trial_id\"");
  }
  r.trial_id = j["trial_id"].get<std::string>();
  if (r.trial_id.empty()) throw ParseError("empty \"trial_id\"");
  if (j.contains("conditions")) {
    r.conditions = j["conditions"].get<std::vector<std::string>>();
  }
  if (j.contains("eligibility_text") && !j["eligibility_text"].is_null()) {
    r.eligibility_text = j["eligibility_text"].get<std::string>();
  }
  if (Trim(r.eligibility_text).empty()) {
    r.exclusion_reason = "no eligibility text";
  } else if (FindCaseInsensitive(r.eligibility_text, kInclusionHeading) ==
                 std::string::npos &&
             FindCaseInsensitive(r.eligibility_text, kExclusionHeading) ==
                 std::string::npos) {
    r.exclusion_reason = "no inclusion/exclusion criteria headings";
  }
  return r;
}

}  // namespace

std::string_view ArmName(Arm arm) {
  return arm == Arm::kInclusion ? "inclusion" : "exclusion";
}

Arm ParseArm(std::string_view name) {
  if (name == "inclusion") return Arm::kInclusion;
  if (name == "exclusion") return Arm::kExclusion;
  throw ParseError("unknown arm \"" + std::string(name) + "\"");
}

CriterionRef RefOf(const Criterion& c) { return {c.trial_id, c.arm, c.index}; }

std::string Lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<TrialRecord> ParseTrials(std::string_view jsonl) {
  std::vector<TrialRecord> out;
  std::unordered_set<std::string> seen;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < jsonl.size()) {
    size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      TrialRecord r = RecordFromJson(nlohmann::json::parse(line));
      if (!seen.insert(r.trial_id).second) {
        throw ParseError("duplicate trial_id \"" + r.trial_id + "\"");
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TrialRecord> LoadTrials(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trials file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path);
  return ParseTrials(buf.str());
}

std::vector<Criterion> SegmentCriteria(const TrialRecord& record) {
  if (record.excluded()) {
    throw ContractError("trial " + record.trial_id +
                        " is excluded: " + *record.exclusion_reason);
  }
  const std::string_view text = record.eligibility_text;
  const size_t inc = FindCaseInsensitive(text, kInclusionHeading);
  const size_t exc = FindCaseInsensitive(text, kExclusionHeading);

  // Arm body runs from the end of its heading to the other heading (when it
  // comes later) or to the end of text.
  auto body = [&](size_t self, size_t other, size_t heading_len) {
    const size_t begin = self + heading_len;
    const size_t end =
        (other != std::string_view::npos && other > self) ? other : text.size();
    return text.substr(begin, end - begin);
  };

  std::vector<Criterion> out;
  auto emit = [&](Arm arm, std::string_view arm_text) {
    int index = 0;
    for (std::string& seg : SplitSegments(arm_text)) {
      Criterion c;
      c.trial_id = record.trial_id;
      c.arm = arm;
      c.tokens = Tokenize(seg);
      if (c.tokens.empty()) continue;
      c.index = index++;
      c.text = std::move(seg);
      out.push_back(std::move(c));
    }
  };
  if (inc != std::string_view::npos) {
    emit(Arm::kInclusion, body(inc, exc, kInclusionHeading.size()));
  }
  if (exc != std::string_view::npos) {
    emit(Arm::kExclusion, body(exc, inc, kExclusionHeading.size()));
  }
  return out;
}

std::vector<Token> Tokenize(std::string_view text) {
  std::vector<Token> tokens;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    if (IsSpace(text[i])) {
      ++i;
      continue;
    }
    size_t chunk_end = i;
    while (chunk_end < n && !IsSpace(text[chunk_end])) ++chunk_end;
    size_t j = i;
    while (j < chunk_end) {
      if (IsWordChar(text[j])) {
        size_t k = j;
        while (k < chunk_end) {
          if (IsWordChar(text[k])) {
            ++k;
          } else if ((text[k] == '/' || text[k] == '.') && k + 1 < chunk_end &&
                     IsWordChar(text[k + 1])) {
            ++k;
          } else {
            break;
          }
        }
        tokens.push_back({std::string(text.substr(j, k - j)), j, k});
        j = k;
      } else {
        tokens.push_back({std::string(text.substr(j, 1)), j, j + 1});
        ++j;
      }
    }
    i = chunk_end;
  }
  return tokens;
}

Criterion CriterionFromTokens(CriterionRef ref,
                              const std::vector<std::string>& surfaces) {
  Criterion c;
  c.trial_id = std::move(ref.trial_id);
  c.arm = ref.arm;
  c.index = ref.index;
  for (const std::string& s : surfaces) {
    if (!c.text.empty()) c.text.push_back(' ');
    const size_t start = c.text.size();
    c.text += s;
    c.tokens.push_back({s, start, c.text.size()});
  }
  return c;
}

std::string SpanSurface(const Criterion& c, size_t first, size_t last) {
  if (first > last || last >= c.tokens.size()) {
    throw ContractError("token span [" + std::to_string(first) + ", " +
                        std::to_string(last) + "] outside criterion of " +
                        std::to_string(c.tokens.size()) + " tokens");
  }
  const size_t b = c.tokens[first].start;
  const size_t e = c.tokens[last].end;
  return c.text.substr(b, e - b);
}

}  // namespace trialner
