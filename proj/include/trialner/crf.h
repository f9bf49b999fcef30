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

#ifndef TRIALNER_CRF_H_
#define TRIALNER_CRF_H_

#include <span>
#include <vector>

#include "trialner/corpus.h"
#include "trialner/numcore.h"
#include "trialner/tagging.h"

namespace trialner {

// Linear-chain CRF over K tags. The transition table is a (K+2)x(K+2) array
// whose last two rows/columns are the START (index K) and STOP (index K+1)
// tags. Entries into START and out of STOP are never read by scoring; they
// hold kForbiddenTransition and receive no gradient.
constexpr double kForbiddenTransition = -10000.0;

inline size_t StartTag(size_t num_tags) { return num_tags; }
inline size_t StopTag(size_t num_tags) { return num_tags + 1; }

DenseArray NewTransitionTable(size_t num_tags);
bool IsTrainableTransition(size_t num_tags, size_t from, size_t to);

// s(X, Y): START->y_1, y_i->y_{i+1}, y_n->STOP transitions plus emissions.
// Throws ContractError if a tag index is out of range or |Y| != n.
double SequenceScore(const DenseArray& emissions, const DenseArray& transitions,
                     std::span<const int> tags);

// log of the sum of exp(s) over all K^n tag sequences (forward algorithm).
double LogPartition(const DenseArray& emissions, const DenseArray& transitions);

struct CrfLoss {
  double loss = 0.0;               // log Z - s(gold) >= 0
  DenseArray d_emissions;          // [n x K]
  DenseArray d_transitions;        // [(K+2) x (K+2)]
};

CrfLoss NllLoss(const DenseArray& emissions, const DenseArray& transitions,
                std::span<const int> gold);

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
};

// Highest-scoring tag sequence. Ties go to the lowest tag index, resolved
// from the last position backwards.
ViterbiResult ViterbiDecode(const DenseArray& emissions,
                            const DenseArray& transitions);

// p(y_i = k | X) by forward-backward in log space; [n x K].
DenseArray TokenMarginals(const DenseArray& emissions,
                          const DenseArray& transitions);

// Minimum over the mention's tokens of the marginal of its own tag (B- on the
// first token, I- afterwards).
double EntityConfidence(const DenseArray& marginals, const EntityMention& mention,
                        const TagSet& tagset);

}  // namespace trialner

#endif  // TRIALNER_CRF_H_
