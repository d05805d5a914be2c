// Copyright 2026 The Shiftguard Authors.
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

#ifndef SHIFTGUARD_LOSSES_H_
#define SHIFTGUARD_LOSSES_H_

#include <cstddef>
#include <span>
#include <vector>

#include "shiftguard/numerics.h"

namespace shiftguard {

// Class the disagreeing model should move away from.
struct DisagreementTarget {
  std::size_t target_class = 0;
  std::size_t num_classes = 2;

  DisagreementTarget() = default;
  DisagreementTarget(std::size_t target, std::size_t classes);
};

enum class SampleMode { kAgree, kDisagree };

struct WeightedSample {
  Vector features;
  std::size_t label = 0;
  double weight = 1.0;
  SampleMode mode = SampleMode::kAgree;
};

struct LossAndGradient {
  double loss = 0.0;
  Vector grad;
};

// loss = logsumexp(l) - l_y; grad = softmax(l) - onehot(y).
LossAndGradient cross_entropy(std::span<const double> logits, std::size_t label);

// Cross entropy against the uniform distribution over every class except the target:
//   loss = -(1/(N-1)) sum_{i != t} l_i + logsumexp(l)
//   grad_j = softmax(l)_j - [j != t] / (N-1)
LossAndGradient disagreement_cross_entropy(std::span<const double> logits,
                                           const DisagreementTarget& target);

// Same loss evaluated on a probability vector directly (used by the validity checks).
double disagreement_cross_entropy_probs(std::span<const double> probs, std::size_t target);

// 1 / ((|Q| + 1) * batches_per_epoch). With one batch per epoch this keeps lambda * |Q| < 1.
double lambda_weight(std::size_t q_size, std::size_t batches_per_epoch);

struct BatchEntry {
  std::span<const double> logits;
  const WeightedSample* sample = nullptr;
};

struct BatchLoss {
  double loss = 0.0;
  std::vector<Vector> grads;  // d loss / d logits, one per batch entry
};

// Mean over the batch of weight * (CE for agree samples, lambda * DCE for disagree samples).
BatchLoss cdc_batch_loss(std::span<const BatchEntry> batch, double lambda);

// N - 1 agree-mode replicas, one per class other than the target, each with weight 1/(N-1).
std::vector<WeightedSample> replicate_for_disagreement(std::span<const double> features,
                                                       const DisagreementTarget& target);

}  // namespace shiftguard

#endif  // SHIFTGUARD_LOSSES_H_
