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

#ifndef TRIALNER_TRAINER_H_
#define TRIALNER_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trialner/corpus.h"
#include "trialner/network.h"
#include "trialner/tagging.h"

namespace trialner {

struct TrainConfig {
  size_t embed_dim = 100;
  size_t hidden_dim = 128;
  size_t attention_dim = 64;
  size_t output_dim = 256;
  size_t decoder_dim = 256;
  double dropout = 0.2;
  size_t batch_size = 64;
  int epochs = 10;
  AttentionVariant variant = AttentionVariant::kMultiply;
  bool scores_on_hidden = false;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
  uint64_t seed = 1;
  bool shuffle = true;
  bool freeze_embeddings = false;
  size_t max_len = 256;
  int min_word_count = 1;
  // Empty: inferred from the training tags, sorted.
  std::vector<std::string> entity_types;
  std::string pretrained_vectors;

  // Throws ConfigError.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig FromJson(const nlohmann::json& j);

  NetworkDims Dims(size_t vocab_size, size_t num_tags) const;
};

// A trained (or freshly initialized) tagger and everything needed to
// reproduce its inputs.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  TrainConfig config;
  Vocabulary vocab;
  TagSet tagset;
  NetworkDims dims;
  ModelParams params;

  // Random parameters for the given vocabulary / tag set.
  static Checkpoint Create(const TrainConfig& config, Vocabulary vocab,
                           TagSet tagset);
};

// Checkpoint file: "TNERCKPT", u64 little-endian header length, JSON header
// (version, config, vocabulary, tag set, array manifest with shapes and byte
// offsets), then raw little-endian float64 arrays in manifest order.
std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(std::string_view bytes);
void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Batching

struct EncodedExample {
  std::vector<int> ids;
  std::vector<int> tags;
};

// Maps surfaces and tags to indices, truncating at `max_len` (a warning is
// passed to `warn` when set). Throws ConfigError on tags outside `tagset`.
std::vector<EncodedExample> EncodeDataset(
    const std::vector<TaggedSequence>& data, const Vocabulary& vocab,
    const TagSet& tagset, size_t max_len,
    const std::function<void(const std::string&)>& warn = nullptr);

struct Batch {
  std::vector<size_t> examples;           // indices into the dataset
  std::vector<std::vector<int>> ids;      // padded with <PAD>
  std::vector<std::vector<int>> tags;     // padded with -1
  std::vector<std::vector<uint8_t>> mask; // 1 = real token
  size_t max_len = 0;
};

// Consecutive chunks of `batch_size`; when `shuffle` the order is a
// Fisher-Yates permutation drawn from (seed, epoch).
std::vector<Batch> MakeBatches(const std::vector<EncodedExample>& data,
                               size_t batch_size, uint64_t seed, int epoch,
                               bool shuffle);

// ---------------------------------------------------------------------------
// Optimization

// Adaptive moment estimation over every array of ModelParams. Forbidden CRF
// transitions never receive gradient, so they never move.
class AdamOptimizer {
 public:
  AdamOptimizer(const NetworkDims& dims, double learning_rate, double beta1,
                double beta2, double epsilon);
  void Step(ModelParams& params, const ModelParams& grads);
  int steps() const { return steps_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int steps_ = 0;
  ModelParams m_;
  ModelParams v_;
};

// Scales `grads` so their global L2 norm is at most `max_norm`. Returns the
// norm before scaling.
double ClipGlobalNorm(ModelParams& grads, double max_norm);

// Loss and gradient of one padded example: NLL over real tokens only.
struct ExampleLoss {
  double loss = 0.0;
  size_t tokens = 0;
  ModelParams grads;
};
ExampleLoss ExampleLossAndGradient(const Checkpoint& model,
                                   const std::vector<int>& ids,
                                   const std::vector<int>& tags,
                                   const std::vector<uint8_t>& mask, bool training,
                                   Rng* rng);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;     // mean per-token NLL over the epoch
  double dev_accuracy = 0.0;
  double dev_loss = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;       // parameters of the best dev-accuracy epoch
  std::vector<EpochStats> history;
  int best_epoch = 0;
};

// Throws NumericError naming epoch and batch if the loss diverges.
TrainResult Train(const TrainConfig& config,
                  const std::vector<TaggedSequence>& train_set,
                  const std::vector<TaggedSequence>& dev_set,
                  const std::function<void(const std::string&)>& log = nullptr);

struct EvalStats {
  double accuracy = 0.0;       // Viterbi tags correct / real tokens
  double loss = 0.0;           // mean per-token NLL
  size_t tokens = 0;
};

EvalStats EvaluateModel(const Checkpoint& model,
                        const std::vector<TaggedSequence>& data);

// ---------------------------------------------------------------------------
// Inference

struct Prediction {
  std::vector<std::string> tags;
  DenseArray marginals;
  std::vector<EntityMention> mentions;  // confidence filled, unfiltered
};

Prediction Predict(const Checkpoint& model, const Criterion& criterion);

// Mentions whose confidence is at least `min_confidence`.
std::vector<EntityMention> TagCriterion(const Checkpoint& model,
                                        const Criterion& criterion,
                                        double min_confidence);

}  // namespace trialner

#endif  // TRIALNER_TRAINER_H_
