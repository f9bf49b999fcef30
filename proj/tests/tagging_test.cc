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

#include <gtest/gtest.h>

#include "trialner/errors.h"
#include "trialner/rng.h"

namespace trialner {
namespace {

Criterion Words(size_t n) {
  std::vector<std::string> w;
  for (size_t i = 0; i < n; ++i) w.push_back("w" + std::to_string(i));
  return CriterionFromTokens({"T", Arm::kInclusion, 0}, w);
}

EntityMention Mention(const Criterion& c, const std::string& type, size_t first, size_t last) {
  return {RefOf(c), type, first, last, SpanSurface(c, first, last), 1.0};
}

TEST(TagSetTest, DefaultInventoryLayout) {
  const TagSet t = TagSet::Default();
  EXPECT_EQ(t.entity_types().size(), 11u);
  EXPECT_EQ(t.size(), 23u);
  EXPECT_EQ(t.tags()[0], "O");
  EXPECT_EQ(t.tags()[1], "B-ALLERGY");
  EXPECT_EQ(t.tags()[2], "I-ALLERGY");
  EXPECT_EQ(t.tags().back(), "I-AGE");
  EXPECT_EQ(t.BeginTag("AGE"), 21);
  EXPECT_EQ(t.InsideTag("AGE"), 22);
  EXPECT_TRUE(t.HasType("PREGNANCY"));
  EXPECT_THROW(t.RequireIndex("B-SMOKING"), ConfigError);
  EXPECT_THROW(TagSet({"A", "A"}), ConfigError);
}

TEST(TagSetTest, ShippedFileMatchesDefault) {
  EXPECT_EQ(TagSet::Load(TRIALNER_SOURCE_DIR "/data/tagset_default.txt"), TagSet::Default());
  EXPECT_THROW(TagSet::Load("/nonexistent/tags.txt"), IoError);
}

TEST(BioTest, SplitAndValidate) {
  EXPECT_EQ(SplitTag("B-AGE"), (std::pair<char, std::string>{'B', "AGE"}));
  EXPECT_EQ(SplitTag("I-CLINICAL_VARIABLE").second, "CLINICAL_VARIABLE");
  EXPECT_EQ(SplitTag("O").first, 'O');
  EXPECT_TRUE(IsValidBio({"O", "B-A", "I-A", "B-B", "O"}));
  EXPECT_FALSE(IsValidBio({"O", "I-A"}));
  EXPECT_FALSE(IsValidBio({"B-A", "I-B"}));
}

TEST(BioTest, EncodeExample) {
  const Criterion c = Words(5);
  const TaggedSequence t =
      EncodeBio(c, {Mention(c, "AGE", 3, 4), Mention(c, "GENDER", 0, 0)}, TagSet::Default());
  EXPECT_EQ(t.tags, (std::vector<std::string>{"B-GENDER", "O", "O", "B-AGE", "I-AGE"}));
}

TEST(BioTest, EncodeRejectsBadInput) {
  const Criterion c = Words(4);
  const TagSet tags = TagSet::Default();
  EXPECT_THROW(EncodeBio(c, {Mention(c, "AGE", 0, 2), Mention(c, "AGE", 2, 3)}, tags),
               ContractError);
  EntityMention out_of_range = Mention(c, "AGE", 0, 0);
  out_of_range.last = 9;
  EXPECT_THROW(EncodeBio(c, {out_of_range}, tags), ContractError);
  EXPECT_THROW(EncodeBio(c, {Mention(c, "SMOKING", 0, 0)}, tags), ConfigError);
}

TEST(BioTest, DecodeRepairsLoneInside) {
  const Criterion c = Words(5);
  const std::vector<EntityMention> m =
      DecodeBio({c, {"I-AGE", "I-AGE", "B-GENDER", "I-AGE", "O"}});
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].entity_type, "AGE");
  EXPECT_EQ(m[0].first, 0u);
  EXPECT_EQ(m[0].last, 1u);
  EXPECT_EQ(m[1].entity_type, "GENDER");
  EXPECT_EQ(m[2].first, 3u);
  EXPECT_EQ(m[2].last, 3u);
  EXPECT_EQ(m[0].surface, "w0 w1");
}

// Property: decode(encode(M)) == M for random non-overlapping mention sets.
TEST(BioTest, RoundTripOnRandomMentionSets) {
  Rng rng(17);
  const TagSet tags = TagSet::Default();
  for (int trial = 0; trial < 1000; ++trial) {
    const Criterion c = Words(1 + rng.Below(15));
    std::vector<EntityMention> mentions;
    size_t i = 0;
    while (i < c.tokens.size()) {
      if (rng.Bernoulli(0.4)) {
        const size_t len = 1 + rng.Below(std::min<size_t>(4, c.tokens.size() - i));
        const std::string& type = tags.entity_types()[rng.Below(11)];
        mentions.push_back(Mention(c, type, i, i + len - 1));
        i += len;
      } else {
        ++i;
      }
    }
    const TaggedSequence t = EncodeBio(c, mentions, tags);
    EXPECT_TRUE(IsValidBio(t.tags));
    EXPECT_EQ(DecodeBio(t), mentions);
  }
}

}  // namespace
}  // namespace trialner
