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

#ifndef TRIALNER_GRADCHECK_H_
#define TRIALNER_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "trialner/network.h"

namespace trialner {

struct ArrayCheck {
  std::string name;
  size_t coordinates = 0;   // coordinates compared
  size_t below_floor = 0;   // |analytic| under the resolvable floor
  double max_relative_error = 0.0;       // over compared coordinates
  double max_absolute_error_below_floor = 0.0;
};

struct GradCheckOptions {
  AttentionVariant variant = AttentionVariant::kMultiply;
  bool scores_on_hidden = false;
  uint64_t seed = 1;
  size_t coords_per_array = 20;
  double epsilon = 1e-5;
  double init_scale = 1.0;  // parameters drawn from U(-scale, scale)
  // Central differences at epsilon 1e-5 on an O(1) loss carry roundoff near
  // 1e-10, so relative error is only meaningful well above that.
  double gradient_floor = 1e-5;
};

// Compares the analytic gradient of the CRF loss of a tiny random model on a
// random padded sentence with central differences, array by array. Arrays
// unused by the variant are skipped; embedding coordinates are drawn from
// rows of words present in the sentence. Coordinates whose analytic gradient
// is below `gradient_floor` in magnitude are judged by absolute error.
std::vector<ArrayCheck> CheckModelGradients(const GradCheckOptions& options);

}  // namespace trialner

#endif  // TRIALNER_GRADCHECK_H_
