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

#include "trialner/synthetic.h"

#include <set>

#include <gtest/gtest.h>

#include "trialner/lexicon.h"
#include "trialner/tagging.h"

namespace trialner {
namespace {

TEST(SyntheticTest, SizesTypesAndVocabulary) {
  const SyntheticCorpus c = GenerateCorpus(SyntheticOptions{});
  EXPECT_EQ(c.train.size(), 400u);
  EXPECT_EQ(c.dev.size(), 100u);
  EXPECT_EQ(c.test.size(), 100u);
  EXPECT_EQ(SyntheticEntityTypes().size(), 5u);
  const std::vector<std::string> vocab = SyntheticVocabulary();
  EXPECT_GE(vocab.size(), 250u);
  EXPECT_LE(vocab.size(), 350u);
  const std::set<std::string> vocab_set(vocab.begin(), vocab.end());
  const TagSet tags(SyntheticEntityTypes());
  std::set<std::string> seen_types;
  for (const auto* split : {&c.train, &c.dev, &c.test}) {
    for (const TaggedSequence& s : *split) {
      ASSERT_EQ(s.tags.size(), s.criterion.tokens.size());
      for (const Token& t : s.criterion.tokens) EXPECT_TRUE(vocab_set.count(CanonicalForm(t.surface))) << t.surface;
      for (const std::string& tag : s.tags) {
        ASSERT_TRUE(tags.IndexOf(tag).has_value()) << tag;
        if (tag != "O") seen_types.insert(tag.substr(2));
      }
      // Decoding and re-encoding must reproduce the gold tags exactly.
      EXPECT_TRUE(IsValidBio(s.tags));
      EXPECT_EQ(EncodeBio(s.criterion, DecodeBio(s), tags).tags, s.tags);
    }
  }
  EXPECT_EQ(seen_types.size(), 5u);
}

TEST(SyntheticTest, DeterministicPerSeed) {
  SyntheticOptions o;
  const SyntheticCorpus a = GenerateCorpus(o);
  const SyntheticCorpus b = GenerateCorpus(o);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train[i].criterion, b.train[i].criterion);
    EXPECT_EQ(a.train[i].tags, b.train[i].tags);
  }
  o.seed = 8;
  const SyntheticCorpus c = GenerateCorpus(o);
  EXPECT_NE(a.train[0].criterion.text + a.train[1].criterion.text,
            c.train[0].criterion.text + c.train[1].criterion.text);
}

TEST(SyntheticTest, PatternFixtureShape) {
  const PatternFixture f = GeneratePatternFixture(20, 7);
  EXPECT_EQ(f.trials.size(), 20u);
  for (const TrialRecord& t : f.trials) {
    EXPECT_GE(t.conditions.size(), 1u);
    EXPECT_LE(t.conditions.size(), 3u);
  }
  EXPECT_FALSE(f.variables.empty());
}

}  // namespace
}  // namespace trialner
