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

#include "shiftguard/losses.h"

#include <cmath>
#include <stdexcept>

namespace shiftguard {

DisagreementTarget::DisagreementTarget(std::size_t target, std::size_t classes)
    : target_class(target), num_classes(classes) {
  if (classes < 2) throw std::invalid_argument("disagreement needs at least two classes");
  if (target >= classes) throw std::invalid_argument("target class out of range");
}

LossAndGradient cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) throw std::invalid_argument("label out of range");
  LossAndGradient out;
  out.loss = log_sum_exp(logits) - logits[label];
  out.grad = softmax(logits);
  out.grad[label] -= 1.0;
  return out;
}

LossAndGradient disagreement_cross_entropy(std::span<const double> logits,
                                           const DisagreementTarget& target) {
  const std::size_t n = logits.size();
  if (n < 2) throw std::invalid_argument("disagreement needs at least two classes");
  if (target.num_classes != n) throw std::invalid_argument("logit width does not match target");
  if (target.target_class >= n) throw std::invalid_argument("target class out of range");
  const double inv = 1.0 / static_cast<double>(n - 1);
  double off_target = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != target.target_class) off_target += logits[i];
  }
  LossAndGradient out;
  out.loss = log_sum_exp(logits) - inv * off_target;
  out.grad = softmax(logits);
  for (std::size_t i = 0; i < n; ++i) {
    if (i != target.target_class) out.grad[i] -= inv;
  }
  return out;
}

double disagreement_cross_entropy_probs(std::span<const double> probs, std::size_t target) {
  const std::size_t n = probs.size();
  if (n < 2) throw std::invalid_argument("disagreement needs at least two classes");
  if (target >= n) throw std::invalid_argument("target class out of range");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != target) acc += std::log(probs[i]);
  }
  return acc / (1.0 - static_cast<double>(n));
}

double lambda_weight(std::size_t q_size, std::size_t batches_per_epoch) {
  if (q_size == 0 || batches_per_epoch == 0) {
    throw std::invalid_argument("lambda_weight needs positive sizes");
  }
  return 1.0 / (static_cast<double>(q_size + 1) * static_cast<double>(batches_per_epoch));
}

BatchLoss cdc_batch_loss(std::span<const BatchEntry> batch, double lambda) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double inv_size = 1.0 / static_cast<double>(batch.size());
  BatchLoss out;
  out.grads.reserve(batch.size());
  for (const BatchEntry& entry : batch) {
    const WeightedSample& s = *entry.sample;
    double scale = s.weight * inv_size;
    LossAndGradient lg;
    if (s.mode == SampleMode::kAgree) {
      lg = cross_entropy(entry.logits, s.label);
    } else {
      lg = disagreement_cross_entropy(entry.logits, DisagreementTarget(s.label, entry.logits.size()));
      scale *= lambda;
    }
    out.loss += scale * lg.loss;
    for (double& g : lg.grad) g *= scale;
    out.grads.push_back(std::move(lg.grad));
  }
  return out;
}

std::vector<WeightedSample> replicate_for_disagreement(std::span<const double> features,
                                                       const DisagreementTarget& target) {
  const std::size_t n = target.num_classes;
  if (n < 2) throw std::invalid_argument("disagreement needs at least two classes");
  const double w = 1.0 / static_cast<double>(n - 1);
  std::vector<WeightedSample> out;
  out.reserve(n - 1);
  for (std::size_t c = 0; c < n; ++c) {
    if (c == target.target_class) continue;
    WeightedSample s;
    s.features.assign(features.begin(), features.end());
    s.label = c;
    s.weight = w;
    s.mode = SampleMode::kAgree;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace shiftguard
