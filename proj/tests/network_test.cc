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

#include "trialner/network.h"

#include <cmath>

#include <gtest/gtest.h>

#include "trialner/errors.h"
#include "trialner/rng.h"

namespace trialner {
namespace {

constexpr double kLayerTolerance = 1e-6;

NetworkDims SmallDims(AttentionVariant variant, bool on_hidden = false) {
  NetworkDims d;
  d.vocab_size = 7;
  d.embed_dim = 4;
  d.hidden_dim = 3;
  d.attention_dim = 3;
  d.output_dim = 5;
  d.decoder_dim = 4;
  d.num_tags = 5;
  d.variant = variant;
  d.scores_on_hidden = on_hidden;
  return d;
}

ModelParams RandomParams(const NetworkDims& dims, Rng& rng) {
  ModelParams p = ModelParams::Initialize(dims, rng);
  p.ForEach([&](const std::string& name, DenseArray& a) {
    if (name == "crf.transitions") return;
    for (double& v : a.values()) v = rng.Uniform(-0.9, 0.9);
  });
  return p;
}

DenseArray RandomMatrix(size_t r, size_t c, Rng& rng) {
  DenseArray m = DenseArray::Matrix(r, c);
  for (double& v : m.values()) v = rng.Uniform(-1.0, 1.0);
  return m;
}

// sum of w * out over real rows.
double Project(const DenseArray& out, const DenseArray& w, const std::vector<uint8_t>& mask) {
  double s = 0.0;
  for (size_t i = 0; i < out.rows(); ++i) {
    if (!mask[i]) continue;
    for (size_t j = 0; j < out.cols(); ++j) s += out(i, j) * w(i, j);
  }
  return s;
}

const std::vector<uint8_t> kMask = {1, 1, 1, 1, 0};

TEST(LstmLayerTest, GradientsMatchFiniteDifferences) {
  Rng rng(1);
  const NetworkDims dims = SmallDims(AttentionVariant::kNone);
  for (bool reverse : {false, true}) {
    ModelParams p = RandomParams(dims, rng);
    LstmBlock& block = p.forward_lstm;
    const DenseArray x = RandomMatrix(5, dims.embed_dim, rng);
    const DenseArray w = RandomMatrix(5, dims.hidden_dim, rng);
    const LstmTrace trace = LstmForward(x, kMask, block, reverse);
    LstmBlock g{ZerosLike(block.input_weights), ZerosLike(block.recurrent_weights),
                ZerosLike(block.bias)};
    DenseArray dx = ZerosLike(x);
    LstmBackward(trace, x, kMask, block, reverse, w, g, dx);

    auto with = [&](DenseArray& slot) {
      return [&](const DenseArray& v) {
        const DenseArray saved = slot;
        slot = v;
        const double out = Project(LstmForward(x, kMask, block, reverse).h, w, kMask);
        slot = saved;
        return out;
      };
    };
    auto loss_x = [&](const DenseArray& v) {
      return Project(LstmForward(v, kMask, block, reverse).h, w, kMask);
    };
    EXPECT_LT(GradCheck(loss_x, x, dx), kLayerTolerance);
    EXPECT_LT(GradCheck(with(block.input_weights), block.input_weights, g.input_weights),
              kLayerTolerance);
    EXPECT_LT(GradCheck(with(block.recurrent_weights), block.recurrent_weights,
                        g.recurrent_weights),
              kLayerTolerance);
    EXPECT_LT(GradCheck(with(block.bias), block.bias, g.bias), kLayerTolerance);
    for (size_t j = 0; j < dims.hidden_dim; ++j) EXPECT_EQ(trace.h(4, j), 0.0);
  }
}

TEST(LstmLayerTest, CellStepMatchesTraceRow) {
  Rng rng(2);
  const NetworkDims dims = SmallDims(AttentionVariant::kNone);
  const ModelParams p = RandomParams(dims, rng);
  const DenseArray x = RandomMatrix(3, dims.embed_dim, rng);
  const std::vector<uint8_t> mask = {1, 1, 1};
  const LstmTrace trace = LstmForward(x, mask, p.forward_lstm, false);
  std::vector<double> h(dims.hidden_dim, 0.0), c(dims.hidden_dim, 0.0);
  for (size_t t = 0; t < 3; ++t) {
    LstmState s = LstmCellStep(x.row(t), h, c, p.forward_lstm);
    for (size_t j = 0; j < dims.hidden_dim; ++j) EXPECT_NEAR(s.h[j], trace.h(t, j), 1e-14);
    h = s.h;
    c = s.c;
  }
}

class AttentionLayerTest
    : public ::testing::TestWithParam<std::tuple<AttentionVariant, bool>> {};

TEST_P(AttentionLayerTest, GradientsMatchFiniteDifferences) {
  const auto [variant, on_hidden] = GetParam();
  Rng rng(3);
  const NetworkDims dims = SmallDims(variant, on_hidden);
  ModelParams p = RandomParams(dims, rng);
  const DenseArray hidden = RandomMatrix(5, 2 * dims.hidden_dim, rng);
  const DenseArray reps =
      on_hidden ? hidden : RandomMatrix(5, dims.RepresentationDim(), rng);
  const DenseArray w = RandomMatrix(5, dims.output_dim, rng);
  const AttentionTrace trace = AttentionForward(reps, hidden, kMask, variant, p);
  ModelParams g = ZeroGradients(dims);
  DenseArray d_reps = ZerosLike(reps), d_hidden = ZerosLike(hidden);
  AttentionBackward(trace, kMask, p, w, g, d_reps, d_hidden);

  auto loss_reps = [&](const DenseArray& v) {
    return Project(AttentionForward(v, hidden, kMask, variant, p).output, w, kMask);
  };
  auto loss_hidden = [&](const DenseArray& v) {
    return Project(AttentionForward(reps, v, kMask, variant, p).output, w, kMask);
  };
  if (on_hidden) {
    // reps and hidden are the same matrix: the total derivative is the sum.
    DenseArray total = d_hidden;
    for (size_t i = 0; i < total.size(); ++i) total[i] += d_reps[i];
    auto loss_both = [&](const DenseArray& v) {
      return Project(AttentionForward(v, v, kMask, variant, p).output, w, kMask);
    };
    EXPECT_LT(GradCheck(loss_both, hidden, total), kLayerTolerance);
  } else {
    EXPECT_LT(GradCheck(loss_reps, reps, d_reps), kLayerTolerance);
    EXPECT_LT(GradCheck(loss_hidden, hidden, d_hidden), kLayerTolerance);
  }

  std::vector<DenseArray*> values, grads;
  std::vector<std::string> names;
  p.ForEach([&](const std::string& name, DenseArray& a) {
    values.push_back(&a);
    names.push_back(name);
  });
  g.ForEach([&](const std::string&, DenseArray& a) { grads.push_back(&a); });
  for (size_t k = 0; k < values.size(); ++k) {
    if (names[k].rfind("attn.", 0) != 0 || values[k]->empty()) continue;
    DenseArray& slot = *values[k];
    auto loss = [&](const DenseArray& v) {
      const DenseArray saved = slot;
      slot = v;
      const double out = Project(AttentionForward(reps, hidden, kMask, variant, p).output,
                                 w, kMask);
      slot = saved;
      return out;
    };
    EXPECT_LT(GradCheck(loss, slot, *grads[k]), kLayerTolerance) << names[k];
  }
}

TEST_P(AttentionLayerTest, WeightsIgnorePaddedColumns) {
  const auto [variant, on_hidden] = GetParam();
  Rng rng(4);
  const NetworkDims dims = SmallDims(variant, on_hidden);
  const ModelParams p = RandomParams(dims, rng);
  const DenseArray hidden = RandomMatrix(5, 2 * dims.hidden_dim, rng);
  const DenseArray reps = on_hidden ? hidden : RandomMatrix(5, dims.RepresentationDim(), rng);
  const AttentionTrace t = AttentionForward(reps, hidden, kMask, variant, p);
  for (size_t i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (size_t j = 0; j < 5; ++j) sum += t.weights(i, j);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(t.weights(i, 4), 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Variants, AttentionLayerTest,
    ::testing::Combine(::testing::Values(AttentionVariant::kDot, AttentionVariant::kMultiply,
                                         AttentionVariant::kAdd),
                       ::testing::Bool()));

TEST(DecoderLayerTest, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  const NetworkDims dims = SmallDims(AttentionVariant::kMultiply);
  ModelParams p = RandomParams(dims, rng);
  const DenseArray z = RandomMatrix(5, dims.output_dim, rng);
  const DenseArray w = RandomMatrix(5, dims.num_tags, rng);
  const DecoderTrace trace = DecoderForward(z, kMask, p);
  ModelParams g = ZeroGradients(dims);
  DenseArray dz = ZerosLike(z);
  DecoderBackward(trace, kMask, p, w, g, dz);
  auto loss_z = [&](const DenseArray& v) {
    return Project(DecoderForward(v, kMask, p).emissions, w, kMask);
  };
  EXPECT_LT(GradCheck(loss_z, z, dz), kLayerTolerance);
  for (auto [slot, grad] : {std::pair{&p.dec_hidden_weights, &g.dec_hidden_weights},
                            std::pair{&p.dec_hidden_bias, &g.dec_hidden_bias},
                            std::pair{&p.dec_out_weights, &g.dec_out_weights},
                            std::pair{&p.dec_out_bias, &g.dec_out_bias}}) {
    auto loss = [&, slot = slot](const DenseArray& v) {
      const DenseArray saved = *slot;
      *slot = v;
      const double out = Project(DecoderForward(z, kMask, p).emissions, w, kMask);
      *slot = saved;
      return out;
    };
    EXPECT_LT(GradCheck(loss, *slot, *grad), kLayerTolerance);
  }
}

TEST(NetworkTest, PaddingDoesNotChangeRealRows) {
  Rng rng(6);
  for (AttentionVariant v : {AttentionVariant::kNone, AttentionVariant::kDot,
                             AttentionVariant::kMultiply, AttentionVariant::kAdd}) {
    const NetworkDims dims = SmallDims(v);
    const ModelParams p = RandomParams(dims, rng);
    const std::vector<int> ids = {2, 3, 4};
    const ForwardCache a = NetworkForward(p, dims, ids, {1, 1, 1}, false, 0.0, nullptr);
    const ForwardCache b =
        NetworkForward(p, dims, {2, 3, 4, 0, 0}, {1, 1, 1, 0, 0}, false, 0.0, nullptr);
    for (size_t i = 0; i < 3; ++i) {
      for (size_t k = 0; k < dims.num_tags; ++k) {
        EXPECT_NEAR(a.emissions()(i, k), b.emissions()(i, k), 1e-12);
      }
    }
  }
}

TEST(NetworkTest, NoneVariantFeedsBiLstmStatesToDecoder) {
  Rng rng(7);
  const NetworkDims dims = SmallDims(AttentionVariant::kNone);
  const ModelParams p = RandomParams(dims, rng);
  EXPECT_EQ(p.AttentionParameterCount(), 0u);
  const ForwardCache c = NetworkForward(p, dims, {2, 5, 3}, {1, 1, 1}, false, 0.0, nullptr);
  EXPECT_EQ(c.z, c.hidden);
}

TEST(NetworkTest, DropoutOnlyWhenTraining) {
  Rng rng(8);
  const NetworkDims dims = SmallDims(AttentionVariant::kMultiply);
  const ModelParams p = RandomParams(dims, rng);
  const std::vector<int> ids = {2, 3, 4, 5};
  const std::vector<uint8_t> mask = {1, 1, 1, 1};
  const ForwardCache eval1 = NetworkForward(p, dims, ids, mask, false, 0.5, nullptr);
  const ForwardCache eval2 = NetworkForward(p, dims, ids, mask, false, 0.5, nullptr);
  EXPECT_EQ(eval1.emissions(), eval2.emissions());
  Rng drop(1);
  const ForwardCache train = NetworkForward(p, dims, ids, mask, true, 0.5, &drop);
  EXPECT_NE(train.emissions(), eval1.emissions());
  for (double s : train.x_dropout.values()) EXPECT_TRUE(s == 0.0 || s == 2.0);
}

TEST(NetworkTest, InitializationFollowsConventions) {
  Rng rng(9);
  const NetworkDims dims = SmallDims(AttentionVariant::kAdd);
  const ModelParams p = ModelParams::Initialize(dims, rng);
  for (double v : p.embeddings.row(Vocabulary::kPad)) EXPECT_EQ(v, 0.0);
  for (size_t j = 0; j < 4 * dims.hidden_dim; ++j) {
    const bool forget = j >= dims.hidden_dim && j < 2 * dims.hidden_dim;
    EXPECT_EQ(p.forward_lstm.bias[j], forget ? 1.0 : 0.0);
  }
  const double limit = std::sqrt(6.0 / (dims.num_tags + dims.decoder_dim));
  for (double v : p.dec_out_weights.values()) EXPECT_LE(std::abs(v), limit);
  EXPECT_TRUE(p.AllFinite());
}

TEST(VocabularyTest, BuildLowercasesAndKeepsFirstAppearanceOrder) {
  const Vocabulary v = Vocabulary::Build({{"Fever", "cough"}, {"fever", "HIV"}});
  EXPECT_EQ(v.tokens(),
            (std::vector<std::string>{"<PAD>", "<UNK>", "fever", "cough", "hiv"}));
  EXPECT_EQ(v.Index("FEVER"), 2);
  EXPECT_EQ(v.Index("unseen"), Vocabulary::kUnk);
  const Vocabulary rare = Vocabulary::Build({{"a", "b", "a"}}, 2);
  EXPECT_TRUE(rare.Contains("a"));
  EXPECT_FALSE(rare.Contains("b"));
}

TEST(NetworkDimsTest, ValidateRejectsZeroSizes) {
  NetworkDims d = SmallDims(AttentionVariant::kDot);
  d.hidden_dim = 0;
  EXPECT_THROW(d.Validate(), ConfigError);
}

TEST(VariantTest, NamesRoundTrip) {
  for (AttentionVariant v : {AttentionVariant::kNone, AttentionVariant::kDot,
                             AttentionVariant::kMultiply, AttentionVariant::kAdd}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_THROW(ParseVariant("concat"), ConfigError);
}

}  // namespace
}  // namespace trialner
