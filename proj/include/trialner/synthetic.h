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

#ifndef TRIALNER_SYNTHETIC_H_
#define TRIALNER_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "trialner/corpus.h"
#include "trialner/patterns.h"

namespace trialner {

// Template-built eligibility criteria with five entity types: AGE,
// PREGNANCY, CHRONIC_DISEASE, TREATMENT and CLINICAL_VARIABLE. Entities are
// drawn from fixed per-type phrase lists and placed into clause templates
// with filler words, so the tag of a word depends on both its identity and
// its neighbours.
struct SyntheticCorpus {
  std::vector<TaggedSequence> train;
  std::vector<TaggedSequence> dev;
  std::vector<TaggedSequence> test;
};

struct SyntheticOptions {
  size_t train_size = 400;
  size_t dev_size = 100;
  size_t test_size = 100;
  uint64_t seed = 7;
};

SyntheticCorpus GenerateCorpus(const SyntheticOptions& options);

// The entity types produced by GenerateCorpus, in tag-set order.
std::vector<std::string> SyntheticEntityTypes();

// Distinct lowercased word forms GenerateCorpus can emit.
std::vector<std::string> SyntheticVocabulary();

// A small trial population for pattern aggregation: trials with registry
// conditions and, for each, normalized variables (some repeated, both arms).
struct PatternFixture {
  std::vector<TrialRecord> trials;
  std::vector<TrialVariable> variables;
};

PatternFixture GeneratePatternFixture(size_t num_trials, uint64_t seed);

}  // namespace trialner

#endif  // TRIALNER_SYNTHETIC_H_
