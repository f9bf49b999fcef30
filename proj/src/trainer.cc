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

#include "trialner/trainer.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "trialner/crf.h"
#include "trialner/errors.h"

namespace trialner {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::Validate() const {
  if (embed_dim == 0 || hidden_dim == 0 || attention_dim == 0 || output_dim == 0 ||
      decoder_dim == 0) {
    throw ConfigError("all dimensions must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("dropout must be in [0, 1)");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (max_len == 0) throw ConfigError("max_len must be >= 1");
  if (min_word_count < 1) throw ConfigError("min_word_count must be >= 1");
}

json TrainConfig::ToJson() const {
  return {{"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"attention_dim", attention_dim},
          {"output_dim", output_dim},
          {"decoder_dim", decoder_dim},
          {"dropout", dropout},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"attention", std::string(VariantName(variant))},
          {"scores_on_hidden", scores_on_hidden},
          {"learning_rate", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_epsilon", adam_epsilon},
          {"clip_norm", clip_norm},
          {"seed", seed},
          {"shuffle", shuffle},
          {"freeze_embeddings", freeze_embeddings},
          {"max_len", max_len},
          {"min_word_count", min_word_count},
          {"entity_types", entity_types},
          {"pretrained_vectors", pretrained_vectors}};
}

TrainConfig TrainConfig::FromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  TrainConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "embed_dim") c.embed_dim = v.get<size_t>();
      else if (k == "hidden_dim") c.hidden_dim = v.get<size_t>();
      else if (k == "attention_dim") c.attention_dim = v.get<size_t>();
      else if (k == "output_dim") c.output_dim = v.get<size_t>();
      else if (k == "decoder_dim") c.decoder_dim = v.get<size_t>();
      else if (k == "dropout") c.dropout = v.get<double>();
      else if (k == "batch_size") c.batch_size = v.get<size_t>();
      else if (k == "epochs") c.epochs = v.get<int>();
      else if (k == "attention") c.variant = ParseVariant(v.get<std::string>());
      else if (k == "scores_on_hidden") c.scores_on_hidden = v.get<bool>();
      else if (k == "learning_rate") c.learning_rate = v.get<double>();
      else if (k == "beta1") c.beta1 = v.get<double>();
      else if (k == "beta2") c.beta2 = v.get<double>();
      else if (k == "adam_epsilon") c.adam_epsilon = v.get<double>();
      else if (k == "clip_norm") c.clip_norm = v.get<double>();
      else if (k == "seed") c.seed = v.get<uint64_t>();
      else if (k == "shuffle") c.shuffle = v.get<bool>();
      else if (k == "freeze_embeddings") c.freeze_embeddings = v.get<bool>();
      else if (k == "max_len") c.max_len = v.get<size_t>();
      else if (k == "min_word_count") c.min_word_count = v.get<int>();
      else if (k == "entity_types") c.entity_types = v.get<std::vector<std::string>>();
      else if (k == "pretrained_vectors") c.pretrained_vectors = v.get<std::string>();
      else throw ConfigError("unknown training config key \"" + k + "\"");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad training config value: ") + e.what());
  }
  c.Validate();
  return c;
}

NetworkDims TrainConfig::Dims(size_t vocab_size, size_t num_tags) const {
  NetworkDims d;
  d.vocab_size = vocab_size;
  d.embed_dim = embed_dim;
  d.hidden_dim = hidden_dim;
  d.attention_dim = attention_dim;
  d.output_dim = output_dim;
  d.decoder_dim = decoder_dim;
  d.num_tags = num_tags;
  d.variant = variant;
  d.scores_on_hidden = scores_on_hidden;
  d.Validate();
  return d;
}

Checkpoint Checkpoint::Create(const TrainConfig& config, Vocabulary vocab,
                              TagSet tagset) {
  config.Validate();
  Checkpoint c;
  c.config = config;
  c.dims = config.Dims(vocab.size(), tagset.size());
  c.vocab = std::move(vocab);
  c.tagset = std::move(tagset);
  Rng rng(config.seed, /*stream=*/0);
  c.params = ModelParams::Initialize(c.dims, rng);
  return c;
}

// ---------------------------------------------------------------------------
// Batching

std::vector<EncodedExample> EncodeDataset(
    const std::vector<TaggedSequence>& data, const Vocabulary& vocab,
    const TagSet& tagset, size_t max_len,
    const std::function<void(const std::string&)>& warn) {
  std::vector<EncodedExample> out;
  out.reserve(data.size());
  for (const TaggedSequence& s : data) {
    const auto& toks = s.criterion.tokens;
    if (toks.size() != s.tags.size()) {
      throw ContractError("criterion " + s.criterion.trial_id +
                          " has mismatched token and tag counts");
    }
    if (toks.empty()) throw ContractError("empty training sequence");
    size_t n = toks.size();
    if (n > max_len) {
      if (warn) {
        warn("truncating " + s.criterion.trial_id + " from " + std::to_string(n) +
             " to " + std::to_string(max_len) + " tokens");
      }
      n = max_len;
    }
    EncodedExample e;
    for (size_t i = 0; i < n; ++i) {
      e.ids.push_back(vocab.Index(toks[i].surface));
      e.tags.push_back(tagset.RequireIndex(s.tags[i]));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Batch> MakeBatches(const std::vector<EncodedExample>& data,
                               size_t batch_size, uint64_t seed, int epoch,
                               bool shuffle) {
  if (data.empty()) throw ContractError("cannot batch an empty dataset");
  if (batch_size == 0) throw ContractError("batch size must be >= 1");
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle) {
    Rng rng(seed, /*stream=*/1000 + static_cast<uint64_t>(epoch));
    rng.Shuffle(order);
  }
  std::vector<Batch> out;
  for (size_t b = 0; b < order.size(); b += batch_size) {
    Batch batch;
    const size_t end = std::min(order.size(), b + batch_size);
    for (size_t i = b; i < end; ++i) {
      batch.examples.push_back(order[i]);
      batch.max_len = std::max(batch.max_len, data[order[i]].ids.size());
    }
    for (size_t idx : batch.examples) {
      const EncodedExample& e = data[idx];
      std::vector<int> ids = e.ids, tags = e.tags;
      std::vector<uint8_t> mask(e.ids.size(), 1);
      ids.resize(batch.max_len, Vocabulary::kPad);
      tags.resize(batch.max_len, -1);
      mask.resize(batch.max_len, 0);
      batch.ids.push_back(std::move(ids));
      batch.tags.push_back(std::move(tags));
      batch.mask.push_back(std::move(mask));
    }
    out.push_back(std::move(batch));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimization

AdamOptimizer::AdamOptimizer(const NetworkDims& dims, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(ZeroGradients(dims)),
      v_(ZeroGradients(dims)) {}

void AdamOptimizer::Step(ModelParams& params, const ModelParams& grads) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, steps_);
  const double c2 = 1.0 - std::pow(beta2_, steps_);
  std::vector<DenseArray*> p, m, v;
  std::vector<const DenseArray*> g;
  params.ForEach([&](const std::string&, DenseArray& a) { p.push_back(&a); });
  m_.ForEach([&](const std::string&, DenseArray& a) { m.push_back(&a); });
  v_.ForEach([&](const std::string&, DenseArray& a) { v.push_back(&a); });
  grads.ForEach([&](const std::string&, const DenseArray& a) { g.push_back(&a); });
  for (size_t a = 0; a < p.size(); ++a) {
    DenseArray& pa = *p[a];
    DenseArray& ma = *m[a];
    DenseArray& va = *v[a];
    const DenseArray& ga = *g[a];
    if (!pa.SameShape(ga)) throw ShapeError("gradient shape mismatch in Adam");
    for (size_t i = 0; i < pa.size(); ++i) {
      const double gi = ga[i];
      ma[i] = beta1_ * ma[i] + (1.0 - beta1_) * gi;
      va[i] = beta2_ * va[i] + (1.0 - beta2_) * gi * gi;
      const double step = lr_ * (ma[i] / c1) / (std::sqrt(va[i] / c2) + eps_);
      pa[i] -= step;
    }
  }
}

double ClipGlobalNorm(ModelParams& grads, double max_norm) {
  double sq = 0.0;
  grads.ForEach([&](const std::string&, const DenseArray& a) {
    for (double x : a.values()) sq += x * x;
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    grads.ForEach([&](const std::string&, DenseArray& a) {
      for (double& x : a.values()) x *= scale;
    });
  }
  return norm;
}

namespace {

void Accumulate(ModelParams& acc, const ModelParams& g) {
  std::vector<DenseArray*> dst;
  acc.ForEach([&](const std::string&, DenseArray& a) { dst.push_back(&a); });
  size_t k = 0;
  g.ForEach([&](const std::string&, const DenseArray& a) {
    DenseArray& d = *dst[k++];
    for (size_t i = 0; i < a.size(); ++i) d[i] += a[i];
  });
}

void Scale(ModelParams& p, double s) {
  p.ForEach([&](const std::string&, DenseArray& a) {
    for (double& x : a.values()) x *= s;
  });
}

// Real rows of `p` selected by `mask`.
DenseArray RealRows(const DenseArray& p, const std::vector<uint8_t>& mask) {
  size_t n = 0;
  for (uint8_t m : mask) n += m;
  DenseArray out = DenseArray::Matrix(n, p.cols());
  size_t r = 0;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    std::copy(p.row(i).begin(), p.row(i).end(), out.row(r++).begin());
  }
  return out;
}

}  // namespace

ExampleLoss ExampleLossAndGradient(const Checkpoint& model,
                                   const std::vector<int>& ids,
                                   const std::vector<int>& tags,
                                   const std::vector<uint8_t>& mask, bool training,
                                   Rng* rng) {
  const ForwardCache cache = NetworkForward(model.params, model.dims, ids, mask,
                                            training, model.config.dropout, rng);
  std::vector<int> gold;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) gold.push_back(tags[i]);
  }
  const DenseArray emissions = RealRows(cache.emissions(), mask);
  CrfLoss crf = NllLoss(emissions, model.params.transitions, gold);
  DenseArray d_full = DenseArray::Matrix(ids.size(), model.dims.num_tags);
  size_t r = 0;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    std::copy(crf.d_emissions.row(r).begin(), crf.d_emissions.row(r).end(),
              d_full.row(i).begin());
    ++r;
  }
  ExampleLoss out;
  out.loss = crf.loss;
  out.tokens = gold.size();
  out.grads = NetworkBackward(model.params, model.dims, cache, d_full,
                              !model.config.freeze_embeddings);
  DenseArray& dt = out.grads.transitions;
  for (size_t i = 0; i < dt.size(); ++i) dt[i] += crf.d_transitions[i];
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

TagSet TagSetFor(const TrainConfig& config,
                 const std::vector<TaggedSequence>& train_set) {
  if (!config.entity_types.empty()) return TagSet(config.entity_types);
  std::set<std::string> types;
  for (const TaggedSequence& s : train_set) {
    for (const std::string& t : s.tags) {
      auto [kind, type] = SplitTag(t);
      if (kind != 'O') types.insert(type);
      else if (t != "O") throw ConfigError("malformed tag \"" + t + "\"");
    }
  }
  return TagSet(std::vector<std::string>(types.begin(), types.end()));
}

}  // namespace

TrainResult Train(const TrainConfig& config,
                  const std::vector<TaggedSequence>& train_set,
                  const std::vector<TaggedSequence>& dev_set,
                  const std::function<void(const std::string&)>& log) {
  config.Validate();
  if (train_set.empty()) throw ContractError("empty training set");
  std::vector<std::vector<std::string>> sentences;
  for (const TaggedSequence& s : train_set) {
    std::vector<std::string> toks;
    for (const Token& t : s.criterion.tokens) toks.push_back(t.surface);
    sentences.push_back(std::move(toks));
  }
  Checkpoint model = Checkpoint::Create(
      config, Vocabulary::Build(sentences, config.min_word_count),
      TagSetFor(config, train_set));
  if (!config.pretrained_vectors.empty()) {
    size_t dim = 0;
    const auto vectors = LoadWordVectors(config.pretrained_vectors, &dim);
    const size_t replaced = ApplyWordVectors(vectors, model.vocab, model.params.embeddings);
    if (log) log("initialized " + std::to_string(replaced) + " embedding rows");
  }

  const auto train_data =
      EncodeDataset(train_set, model.vocab, model.tagset, config.max_len, log);
  // Dev tags must fit the training tag set.
  EncodeDataset(dev_set, model.vocab, model.tagset, config.max_len);

  AdamOptimizer adam(model.dims, config.learning_rate, config.beta1, config.beta2,
                     config.adam_epsilon);
  TrainResult result;
  result.checkpoint = model;
  double best_accuracy = -1.0;
  Rng dropout_rng(config.seed, /*stream=*/2);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = MakeBatches(train_data, config.batch_size, config.seed,
                                     epoch, config.shuffle);
    double epoch_loss = 0.0;
    size_t epoch_tokens = 0;
    for (size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      ModelParams grads = ZeroGradients(model.dims);
      double batch_loss = 0.0;
      size_t batch_tokens = 0;
      try {
        for (size_t e = 0; e < batch.examples.size(); ++e) {
          ExampleLoss ex = ExampleLossAndGradient(model, batch.ids[e], batch.tags[e],
                                                  batch.mask[e], true, &dropout_rng);
          batch_loss += ex.loss;
          batch_tokens += ex.tokens;
          Accumulate(grads, ex.grads);
        }
      } catch (const NumericError& err) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b + 1) + ": " + err.what());
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b + 1) +
                           ": non-finite loss");
      }
      Scale(grads, 1.0 / static_cast<double>(batch_tokens));
      ClipGlobalNorm(grads, config.clip_norm);
      adam.Step(model.params, grads);
      epoch_loss += batch_loss;
      epoch_tokens += batch_tokens;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(epoch_tokens);
    if (!dev_set.empty()) {
      const EvalStats dev = EvaluateModel(model, dev_set);
      stats.dev_accuracy = dev.accuracy;
      stats.dev_loss = dev.loss;
    }
    result.history.push_back(stats);
    if (log) {
      char line[160];
      std::snprintf(line, sizeof(line),
                    "epoch %d: train loss %.4f, dev accuracy %.4f, dev loss %.4f",
                    epoch, stats.train_loss, stats.dev_accuracy, stats.dev_loss);
      log(line);
    }
    // Without a dev set the last epoch wins.
    if (dev_set.empty() || stats.dev_accuracy > best_accuracy) {
      best_accuracy = stats.dev_accuracy;
      result.best_epoch = epoch;
      result.checkpoint = model;
    }
  }
  return result;
}

EvalStats EvaluateModel(const Checkpoint& model,
                        const std::vector<TaggedSequence>& data) {
  const auto encoded =
      EncodeDataset(data, model.vocab, model.tagset, model.config.max_len);
  EvalStats out;
  size_t correct = 0;
  double loss = 0.0;
  for (const EncodedExample& e : encoded) {
    const std::vector<uint8_t> mask(e.ids.size(), 1);
    const ForwardCache cache =
        NetworkForward(model.params, model.dims, e.ids, mask, false, 0.0, nullptr);
    const ViterbiResult best = ViterbiDecode(cache.emissions(), model.params.transitions);
    for (size_t i = 0; i < e.tags.size(); ++i) correct += best.path[i] == e.tags[i];
    loss += LogPartition(cache.emissions(), model.params.transitions) -
            SequenceScore(cache.emissions(), model.params.transitions, e.tags);
    out.tokens += e.tags.size();
  }
  if (out.tokens > 0) {
    out.accuracy = static_cast<double>(correct) / static_cast<double>(out.tokens);
    out.loss = std::max(0.0, loss) / static_cast<double>(out.tokens);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference

Prediction Predict(const Checkpoint& model, const Criterion& criterion) {
  Prediction out;
  const size_t total = criterion.tokens.size();
  out.tags.assign(total, "O");
  if (total == 0) return out;
  const size_t n = std::min(total, model.config.max_len);
  std::vector<int> ids(n);
  for (size_t i = 0; i < n; ++i) ids[i] = model.vocab.Index(criterion.tokens[i].surface);
  const std::vector<uint8_t> mask(n, 1);
  const ForwardCache cache =
      NetworkForward(model.params, model.dims, ids, mask, false, 0.0, nullptr);
  const ViterbiResult best = ViterbiDecode(cache.emissions(), model.params.transitions);
  for (size_t i = 0; i < n; ++i) out.tags[i] = model.tagset.tags()[best.path[i]];
  out.marginals = TokenMarginals(cache.emissions(), model.params.transitions);
  out.mentions = DecodeBio({criterion, out.tags});
  for (EntityMention& m : out.mentions) {
    m.confidence = EntityConfidence(out.marginals, m, model.tagset);
  }
  return out;
}

std::vector<EntityMention> TagCriterion(const Checkpoint& model,
                                        const Criterion& criterion,
                                        double min_confidence) {
  std::vector<EntityMention> kept;
  for (EntityMention& m : Predict(model, criterion).mentions) {
    if (m.confidence >= min_confidence) kept.push_back(std::move(m));
  }
  return kept;
}

}  // namespace trialner
