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

#ifndef TRIALNER_FORMATS_H_
#define TRIALNER_FORMATS_H_

#include <string>
#include <string_view>
#include <vector>

#include "trialner/corpus.h"

namespace trialner {

// Reads a whole file; throws IoError.
std::string ReadFile(const std::string& path);
// Writes (truncating) a whole file; throws IoError.
void WriteFile(const std::string& path, std::string_view contents);

// criteria.jsonl:
//   {"trial_id", "arm", "index", "text", "tokens": [{"surface","start","end"}]}
std::string CriteriaToJsonl(const std::vector<Criterion>& criteria);
std::vector<Criterion> CriteriaFromJsonl(std::string_view jsonl);

// Mention JSONL, shared by tag / match / eval:
//   {"trial_id","arm","index","first","last","type","surface","confidence"}
// Only the first six fields are required when reading.
std::string MentionsToJsonl(const std::vector<EntityMention>& mentions);
std::vector<EntityMention> MentionsFromJsonl(std::string_view jsonl);

// CoNLL: "token<TAB>tag" per line, blank line between sentences.
struct ConllSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};
std::vector<ConllSentence> ConllFromString(std::string_view text);
std::string ConllToString(const std::vector<ConllSentence>& sentences);

// Wraps CoNLL sentences as tagged criteria; trial ids are "<prefix>:<n>".
std::vector<TaggedSequence> ToTaggedSequences(
    const std::vector<ConllSentence>& sentences, const std::string& prefix);

// Rounds to 6 decimals so printed confidences stay short and stable.
double RoundConfidence(double p);

}  // namespace trialner

#endif  // TRIALNER_FORMATS_H_
