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

#include "trialner/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "trialner/crf.h"
#include "trialner/numcore.h"
#include "trialner/rng.h"
#include "trialner/trainer.h"

namespace trialner {

std::vector<ArrayCheck> CheckModelGradients(const GradCheckOptions& options) {
  Rng rng(options.seed, 77);
  TrainConfig config;
  config.embed_dim = 5;
  config.hidden_dim = 3;
  config.attention_dim = 3;
  config.output_dim = 5;
  config.decoder_dim = 4;
  config.variant = options.variant;
  config.scores_on_hidden = options.scores_on_hidden;
  config.seed = options.seed;
  Vocabulary vocab({"<PAD>", "<UNK>", "a", "b", "c", "d", "e", "f"});
  Checkpoint model = Checkpoint::Create(config, vocab, TagSet({"X", "Y"}));

  // Nonzero biases and transitions so every term is exercised away from its
  // origin.
  model.params.ForEach([&](const std::string& name, DenseArray& a) {
    if (name == "crf.transitions") {
      const size_t k = model.dims.num_tags;
      for (size_t r = 0; r < k + 2; ++r) {
        for (size_t c = 0; c < k + 2; ++c) {
          if (IsTrainableTransition(k, r, c)) a(r, c) = rng.Uniform(-1.0, 1.0);
        }
      }
      return;
    }
    for (double& v : a.values()) {
      v = rng.Uniform(-options.init_scale, options.init_scale);
    }
  });
  for (double& v : model.params.embeddings.row(Vocabulary::kPad)) v = 0.0;

  // Every non-pad word once plus one repeat, then a padded position.
  std::vector<int> ids;
  for (int w = 1; w < static_cast<int>(vocab.size()); ++w) ids.push_back(w);
  rng.Shuffle(ids);
  ids.push_back(ids[rng.Below(ids.size())]);
  const size_t real = ids.size();
  ids.push_back(Vocabulary::kPad);
  const size_t n = ids.size();
  std::vector<int> tags(n, -1);
  std::vector<uint8_t> mask(n, 0);
  for (size_t i = 0; i < real; ++i) {
    tags[i] = static_cast<int>(rng.Below(model.dims.num_tags));
    mask[i] = 1;
  }

  const ExampleLoss analytic =
      ExampleLossAndGradient(model, ids, tags, mask, /*training=*/false, nullptr);

  std::vector<DenseArray*> values, grads;
  std::vector<std::string> names;
  model.params.ForEach([&](const std::string& name, DenseArray& a) {
    values.push_back(&a);
    names.push_back(name);
  });
  ModelParams g = analytic.grads;
  g.ForEach([&](const std::string&, DenseArray& a) { grads.push_back(&a); });

  std::vector<ArrayCheck> out;
  for (size_t k = 0; k < values.size(); ++k) {
    DenseArray& target = *values[k];
    if (target.empty()) continue;
    std::vector<size_t> candidates;
    if (names[k] == "embeddings") {
      const std::set<int> used(ids.begin(), ids.begin() + real);
      for (int id : used) {
        for (size_t c = 0; c < target.cols(); ++c) candidates.push_back(id * target.cols() + c);
      }
    } else if (names[k] == "crf.transitions") {
      const size_t kk = model.dims.num_tags;
      for (size_t r = 0; r < kk + 2; ++r) {
        for (size_t c = 0; c < kk + 2; ++c) {
          if (IsTrainableTransition(kk, r, c)) candidates.push_back(r * (kk + 2) + c);
        }
      }
    } else {
      for (size_t i = 0; i < target.size(); ++i) candidates.push_back(i);
    }
    ArrayCheck check;
    check.name = names[k];
    std::vector<size_t> tiny;
    std::erase_if(candidates, [&](size_t i) {
      const bool below = std::abs((*grads[k])[i]) < options.gradient_floor;
      if (below) tiny.push_back(i);
      return below;
    });
    check.below_floor = tiny.size();
    rng.Shuffle(candidates);
    if (candidates.size() > options.coords_per_array) {
      candidates.resize(options.coords_per_array);
    }
    const DenseArray saved = target;
    auto loss_at = [&](const DenseArray& point) {
      target = point;
      const double loss =
          ExampleLossAndGradient(model, ids, tags, mask, false, nullptr).loss;
      target = saved;
      return loss;
    };
    check.coordinates = candidates.size();
    for (size_t i : tiny) {
      DenseArray probe = saved;
      probe[i] += options.epsilon;
      const double up = loss_at(probe);
      probe[i] = saved[i] - options.epsilon;
      const double down = loss_at(probe);
      const double numeric = (up - down) / (2.0 * options.epsilon);
      check.max_absolute_error_below_floor = std::max(
          check.max_absolute_error_below_floor, std::abs(numeric - (*grads[k])[i]));
    }
    if (!candidates.empty()) {
      check.max_relative_error =
          GradCheck(loss_at, saved, *grads[k], options.epsilon, candidates);
    }
    out.push_back(check);
  }
  return out;
}

}  // namespace trialner
