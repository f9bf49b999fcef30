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

#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "trialner/errors.h"

namespace trialner {
namespace {

TEST(CriteriaJsonlTest, RoundTrip) {
  std::vector<Criterion> cs = {
      CriterionFromTokens({"T1", Arm::kInclusion, 0}, {"adults", "≥", "18"}),
      CriterionFromTokens({"T1", Arm::kExclusion, 3}, {"PaO2/FiO2", "<", "300"}),
  };
  EXPECT_EQ(CriteriaFromJsonl(CriteriaToJsonl(cs)).size(), 2u);
  const std::vector<Criterion> back = CriteriaFromJsonl(CriteriaToJsonl(cs));
  for (size_t i = 0; i < cs.size(); ++i) {
    EXPECT_EQ(back[i].text, cs[i].text);
    EXPECT_EQ(RefOf(back[i]), RefOf(cs[i]));
    ASSERT_EQ(back[i].tokens.size(), cs[i].tokens.size());
    for (size_t k = 0; k < cs[i].tokens.size(); ++k) {
      EXPECT_EQ(back[i].tokens[k].surface, cs[i].tokens[k].surface);
      EXPECT_EQ(back[i].tokens[k].start, cs[i].tokens[k].start);
    }
  }
  EXPECT_EQ(CriteriaToJsonl(back), CriteriaToJsonl(cs));
}

TEST(CriteriaJsonlTest, MissingTokensAreRecomputedAndBadOffsetsRejected) {
  const auto cs = CriteriaFromJsonl(
      R"({"trial_id":"T","arm":"inclusion","index":0,"text":"age > 18"})"
      "\n");
  ASSERT_EQ(cs[0].tokens.size(), 3u);
  EXPECT_EQ(cs[0].tokens[1].surface, ">");
  EXPECT_THROW(
      CriteriaFromJsonl(R"({"trial_id":"T","arm":"inclusion","index":0,"text":"age",)"
                        R"("tokens":[{"surface":"agx","start":0,"end":3}]})"),
      ParseError);
  EXPECT_THROW(CriteriaFromJsonl(R"({"trial_id":"T","arm":"sideways","index":0,"text":"a"})"),
               ParseError);
}

TEST(MentionsJsonlTest, RoundTripWithRoundedConfidence) {
  std::vector<EntityMention> ms = {
      {{"T1", Arm::kExclusion, 2}, "TREATMENT", 3, 4, "immune checkpoint", 0.123456789},
      {{"T2", Arm::kInclusion, 0}, "AGE", 0, 0, "adults", 1.0},
  };
  const std::vector<EntityMention> back = MentionsFromJsonl(MentionsToJsonl(ms));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].confidence, 0.123457);
  EXPECT_EQ(back[1], ms[1]);
  EXPECT_EQ(MentionsToJsonl(back), MentionsToJsonl(ms));
}

TEST(MentionsJsonlTest, MinimalFieldsAndErrors) {
  const auto ms = MentionsFromJsonl(
      R"({"trial_id":"T","arm":"inclusion","index":1,"first":2,"last":3,"type":"AGE"})");
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms[0].confidence, 1.0);
  EXPECT_THROW(MentionsFromJsonl(
                   R"({"trial_id":"T","arm":"inclusion","index":1,"first":3,"last":2,"type":"A"})"),
               ParseError);
  try {
    MentionsFromJsonl("\n{\"trial_id\":\"T\"}\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ConllTest, RoundTripAndPrefix) {
  const std::string text = "Age\tB-AGE\n>\tI-AGE\n18\tI-AGE\n\nPregnant\tB-PREGNANCY\n";
  const std::vector<ConllSentence> s = ConllFromString(text);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].tokens, (std::vector<std::string>{"Age", ">", "18"}));
  EXPECT_EQ(s[1].tags, (std::vector<std::string>{"B-PREGNANCY"}));
  EXPECT_EQ(ConllFromString(ConllToString(s))[1].tokens, s[1].tokens);
  const std::vector<TaggedSequence> t = ToTaggedSequences(s, "dev");
  EXPECT_EQ(t[1].criterion.trial_id, "dev:1");
  EXPECT_EQ(t[0].criterion.text, "Age > 18");
  EXPECT_THROW(ConllFromString("Age B-AGE\n"), ParseError);
}

TEST(FileIoTest, ReadWriteAndErrors) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "trialner_formats_test.txt").string();
  WriteFile(path, "abc\n");
  EXPECT_EQ(ReadFile(path), "abc\n");
  std::remove(path.c_str());
  EXPECT_THROW(ReadFile(path), IoError);
  EXPECT_THROW(WriteFile("/nonexistent/dir/x", "a"), IoError);
}

}  // namespace
}  // namespace trialner
