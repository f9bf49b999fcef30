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

#include "trialner/formats.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trialner/errors.h"

namespace trialner {
namespace {

using nlohmann::json;

// Calls fn(line, line_no) for every non-blank line.
template <typename Fn>
void ForEachLine(std::string_view text, Fn fn) {
  size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      fn(line, line_no);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string Dump(const json& j) { return j.dump() + "\n"; }

}  // namespace

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path);
  return buf.str();
}

void WriteFile(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("error writing " + path);
}

std::string CriteriaToJsonl(const std::vector<Criterion>& criteria) {
  std::string out;
  for (const Criterion& c : criteria) {
    json tokens = json::array();
    for (const Token& t : c.tokens) {
      tokens.push_back({{"surface", t.surface}, {"start", t.start}, {"end", t.end}});
    }
    json j = {{"trial_id", c.trial_id},
              {"arm", ArmName(c.arm)},
              {"index", c.index},
              {"text", c.text},
              {"tokens", std::move(tokens)}};
    out += Dump(j);
  }
  return out;
}

std::vector<Criterion> CriteriaFromJsonl(std::string_view jsonl) {
  std::vector<Criterion> out;
  ForEachLine(jsonl, [&](std::string_view line, size_t) {
    const json j = json::parse(line);
    Criterion c;
    c.trial_id = j.at("trial_id").get<std::string>();
    c.arm = ParseArm(j.at("arm").get<std::string>());
    c.index = j.at("index").get<int>();
    c.text = j.at("text").get<std::string>();
    if (j.contains("tokens")) {
      for (const json& t : j["tokens"]) {
        Token tok{t.at("surface").get<std::string>(), t.at("start").get<size_t>(),
                  t.at("end").get<size_t>()};
        if (tok.start >= tok.end || tok.end > c.text.size() ||
            c.text.compare(tok.start, tok.end - tok.start, tok.surface) != 0) {
          throw ParseError("token \"" + tok.surface +
                           "\" does not match its offsets");
        }
        c.tokens.push_back(std::move(tok));
      }
    } else {
      c.tokens = Tokenize(c.text);
    }
    out.push_back(std::move(c));
  });
  return out;
}

std::string MentionsToJsonl(const std::vector<EntityMention>& mentions) {
  std::string out;
  for (const EntityMention& m : mentions) {
    json j = {{"trial_id", m.ref.trial_id},
              {"arm", ArmName(m.ref.arm)},
              {"index", m.ref.index},
              {"first", m.first},
              {"last", m.last},
              {"type", m.entity_type},
              {"surface", m.surface},
              {"confidence", RoundConfidence(m.confidence)}};
    out += Dump(j);
  }
  return out;
}

std::vector<EntityMention> MentionsFromJsonl(std::string_view jsonl) {
  std::vector<EntityMention> out;
  ForEachLine(jsonl, [&](std::string_view line, size_t) {
    const json j = json::parse(line);
    EntityMention m;
    m.ref.trial_id = j.at("trial_id").get<std::string>();
    m.ref.arm = ParseArm(j.at("arm").get<std::string>());
    m.ref.index = j.at("index").get<int>();
    m.first = j.at("first").get<size_t>();
    m.last = j.at("last").get<size_t>();
    m.entity_type = j.at("type").get<std::string>();
    if (m.first > m.last) throw ParseError("first > last");
    if (j.contains("surface")) m.surface = j["surface"].get<std::string>();
    if (j.contains("confidence")) {
      m.confidence = j["confidence"].get<double>();
      if (!(m.confidence >= 0.0 && m.confidence <= 1.0)) {
        throw ParseError("confidence outside [0, 1]");
      }
    }
    out.push_back(std::move(m));
  });
  return out;
}

std::vector<ConllSentence> ConllFromString(std::string_view text) {
  std::vector<ConllSentence> out;
  ConllSentence current;
  size_t pos = 0, line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) out.push_back(std::move(current));
    current = {};
  };
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      flush();
      continue;
    }
    const size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string_view::npos) {
      throw ParseError("CoNLL line " + std::to_string(line_no) +
                       ": expected token<TAB>tag");
    }
    current.tokens.emplace_back(line.substr(0, tab));
    current.tags.emplace_back(line.substr(tab + 1));
  }
  flush();
  return out;
}

std::string ConllToString(const std::vector<ConllSentence>& sentences) {
  std::string out;
  for (const ConllSentence& s : sentences) {
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      out += s.tokens[i];
      out += '\t';
      out += s.tags[i];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<TaggedSequence> ToTaggedSequences(
    const std::vector<ConllSentence>& sentences, const std::string& prefix) {
  std::vector<TaggedSequence> out;
  out.reserve(sentences.size());
  for (size_t i = 0; i < sentences.size(); ++i) {
    CriterionRef ref{prefix + ":" + std::to_string(i), Arm::kInclusion, 0};
    out.push_back({CriterionFromTokens(ref, sentences[i].tokens),
                   sentences[i].tags});
  }
  return out;
}

double RoundConfidence(double p) { return std::round(p * 1e6) / 1e6; }

}  // namespace trialner
