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

#include "trialner/crf.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "trialner/errors.h"

namespace trialner {
namespace {

// Validates shapes and returns K.
size_t CheckInputs(const DenseArray& p, const DenseArray& t) {
  if (p.rank() != 2 || p.rows() == 0 || p.cols() == 0) {
    throw ShapeError("CRF emissions must be a non-empty [n x K] matrix, got " +
                     p.ShapeString());
  }
  const size_t k = p.cols();
  if (t.rank() != 2 || t.rows() != k + 2 || t.cols() != k + 2) {
    throw ShapeError("CRF transitions " + t.ShapeString() +
                     " do not match K=" + std::to_string(k));
  }
  p.CheckFinite("CRF emissions");
  t.CheckFinite("CRF transitions");
  return k;
}

// alpha(i, k): log-sum of scores of all prefixes ending in tag k at i,
// emissions included.
DenseArray ForwardTable(const DenseArray& p, const DenseArray& t) {
  const size_t n = p.rows(), k = p.cols(), start = StartTag(k);
  DenseArray alpha = DenseArray::Matrix(n, k);
  for (size_t b = 0; b < k; ++b) alpha(0, b) = t(start, b) + p(0, b);
  std::vector<double> terms(k);
  for (size_t i = 1; i < n; ++i) {
    for (size_t b = 0; b < k; ++b) {
      for (size_t a = 0; a < k; ++a) terms[a] = alpha(i - 1, a) + t(a, b);
      alpha(i, b) = p(i, b) + LogSumExp(terms);
    }
  }
  return alpha;
}

// beta(i, k): log-sum of scores of all suffixes after position i given tag k
// at i, STOP transition included, emission at i excluded.
DenseArray BackwardTable(const DenseArray& p, const DenseArray& t) {
  const size_t n = p.rows(), k = p.cols(), stop = StopTag(k);
  DenseArray beta = DenseArray::Matrix(n, k);
  for (size_t a = 0; a < k; ++a) beta(n - 1, a) = t(a, stop);
  std::vector<double> terms(k);
  for (size_t i = n - 1; i-- > 0;) {
    for (size_t a = 0; a < k; ++a) {
      for (size_t b = 0; b < k; ++b) {
        terms[b] = t(a, b) + p(i + 1, b) + beta(i + 1, b);
      }
      beta(i, a) = LogSumExp(terms);
    }
  }
  return beta;
}

double PartitionFromAlpha(const DenseArray& alpha, const DenseArray& t) {
  const size_t n = alpha.rows(), k = alpha.cols(), stop = StopTag(k);
  std::vector<double> terms(k);
  for (size_t a = 0; a < k; ++a) terms[a] = alpha(n - 1, a) + t(a, stop);
  return LogSumExp(terms);
}

}  // namespace

DenseArray NewTransitionTable(size_t num_tags) {
  const size_t m = num_tags + 2;
  DenseArray t = DenseArray::Matrix(m, m);
  for (size_t i = 0; i < m; ++i) {
    t(i, StartTag(num_tags)) = kForbiddenTransition;
    t(StopTag(num_tags), i) = kForbiddenTransition;
  }
  return t;
}

bool IsTrainableTransition(size_t num_tags, size_t from, size_t to) {
  return from != StopTag(num_tags) && to != StartTag(num_tags) &&
         !(from == StartTag(num_tags) && to == StopTag(num_tags));
}

double SequenceScore(const DenseArray& emissions, const DenseArray& transitions,
                     std::span<const int> tags) {
  const size_t k = CheckInputs(emissions, transitions);
  const size_t n = emissions.rows();
  if (tags.size() != n) {
    throw ContractError("tag sequence length " + std::to_string(tags.size()) +
                        " != " + std::to_string(n) + " positions");
  }
  for (int y : tags) {
    if (y < 0 || static_cast<size_t>(y) >= k) {
      throw ContractError("tag index " + std::to_string(y) + " out of range");
    }
  }
  // Same association order as the forward recursion, so the K=1 partition
  // and this score agree bit for bit.
  double s = transitions(StartTag(k), tags[0]) + emissions(0, tags[0]);
  for (size_t i = 1; i < n; ++i) {
    s = emissions(i, tags[i]) + (s + transitions(tags[i - 1], tags[i]));
  }
  return s + transitions(tags[n - 1], StopTag(k));
}

double LogPartition(const DenseArray& emissions, const DenseArray& transitions) {
  CheckInputs(emissions, transitions);
  return PartitionFromAlpha(ForwardTable(emissions, transitions), transitions);
}

CrfLoss NllLoss(const DenseArray& emissions, const DenseArray& transitions,
                std::span<const int> gold) {
  const size_t k = CheckInputs(emissions, transitions);
  const size_t n = emissions.rows();
  const double gold_score = SequenceScore(emissions, transitions, gold);
  const DenseArray alpha = ForwardTable(emissions, transitions);
  const DenseArray beta = BackwardTable(emissions, transitions);
  const double log_z = PartitionFromAlpha(alpha, transitions);

  CrfLoss out;
  out.loss = std::max(0.0, log_z - gold_score);
  out.d_emissions = DenseArray::Matrix(n, k);
  out.d_transitions = DenseArray::Matrix(k + 2, k + 2);
  DenseArray& dp = out.d_emissions;
  DenseArray& dt = out.d_transitions;
  const size_t start = StartTag(k), stop = StopTag(k);

  for (size_t i = 0; i < n; ++i) {
    for (size_t a = 0; a < k; ++a) {
      dp(i, a) = std::exp(alpha(i, a) + beta(i, a) - log_z);
    }
    dp(i, gold[i]) -= 1.0;
  }
  for (size_t b = 0; b < k; ++b) {
    dt(start, b) = std::exp(alpha(0, b) + beta(0, b) - log_z);
  }
  dt(start, gold[0]) -= 1.0;
  for (size_t a = 0; a < k; ++a) {
    dt(a, stop) = std::exp(alpha(n - 1, a) + beta(n - 1, a) - log_z);
  }
  dt(gold[n - 1], stop) -= 1.0;
  for (size_t i = 0; i + 1 < n; ++i) {
    for (size_t a = 0; a < k; ++a) {
      for (size_t b = 0; b < k; ++b) {
        dt(a, b) += std::exp(alpha(i, a) + transitions(a, b) +
                             emissions(i + 1, b) + beta(i + 1, b) - log_z);
      }
    }
    dt(gold[i], gold[i + 1]) -= 1.0;
  }
  return out;
}

ViterbiResult ViterbiDecode(const DenseArray& emissions,
                            const DenseArray& transitions) {
  const size_t k = CheckInputs(emissions, transitions);
  const size_t n = emissions.rows();
  DenseArray delta = DenseArray::Matrix(n, k);
  std::vector<int> back(n * k, 0);
  for (size_t b = 0; b < k; ++b) {
    delta(0, b) = transitions(StartTag(k), b) + emissions(0, b);
  }
  for (size_t i = 1; i < n; ++i) {
    for (size_t b = 0; b < k; ++b) {
      size_t best = 0;
      double best_score = delta(i - 1, 0) + transitions(0, b);
      for (size_t a = 1; a < k; ++a) {
        const double s = delta(i - 1, a) + transitions(a, b);
        if (s > best_score) {
          best_score = s;
          best = a;
        }
      }
      delta(i, b) = emissions(i, b) + best_score;
      back[i * k + b] = static_cast<int>(best);
    }
  }
  ViterbiResult out;
  size_t last = 0;
  out.score = delta(n - 1, 0) + transitions(0, StopTag(k));
  for (size_t a = 1; a < k; ++a) {
    const double s = delta(n - 1, a) + transitions(a, StopTag(k));
    if (s > out.score) {
      out.score = s;
      last = a;
    }
  }
  out.path.assign(n, 0);
  out.path[n - 1] = static_cast<int>(last);
  for (size_t i = n - 1; i > 0; --i) {
    out.path[i - 1] = back[i * k + out.path[i]];
  }
  return out;
}

DenseArray TokenMarginals(const DenseArray& emissions,
                          const DenseArray& transitions) {
  const size_t k = CheckInputs(emissions, transitions);
  const size_t n = emissions.rows();
  const DenseArray alpha = ForwardTable(emissions, transitions);
  const DenseArray beta = BackwardTable(emissions, transitions);
  const double log_z = PartitionFromAlpha(alpha, transitions);
  DenseArray m = DenseArray::Matrix(n, k);
  for (size_t i = 0; i < n; ++i) {
    for (size_t a = 0; a < k; ++a) {
      m(i, a) = std::exp(alpha(i, a) + beta(i, a) - log_z);
    }
  }
  return m;
}

double EntityConfidence(const DenseArray& marginals, const EntityMention& mention,
                        const TagSet& tagset) {
  if (mention.first > mention.last || mention.last >= marginals.rows()) {
    throw ContractError("mention span [" + std::to_string(mention.first) + ", " +
                        std::to_string(mention.last) + "] outside " +
                        std::to_string(marginals.rows()) + " positions");
  }
  if (marginals.cols() != tagset.size()) {
    throw ShapeError("marginals have " + std::to_string(marginals.cols()) +
                     " columns for a tag set of " +
                     std::to_string(tagset.size()));
  }
  double conf = 1.0;
  for (size_t t = mention.first; t <= mention.last; ++t) {
    const int tag = t == mention.first ? tagset.BeginTag(mention.entity_type)
                                       : tagset.InsideTag(mention.entity_type);
    conf = std::min(conf, marginals(t, tag));
  }
  return std::clamp(conf, 0.0, 1.0);
}

}  // namespace trialner
