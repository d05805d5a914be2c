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

#ifndef SHIFTGUARD_GBT_H_
#define SHIFTGUARD_GBT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shiftguard/dataset.h"
#include "shiftguard/numerics.h"
#include "shiftguard/rng.h"

namespace shiftguard {

struct GbtConfig {
  double eta = 0.1;
  std::size_t max_depth = 6;
  std::size_t num_rounds = 10;
  double subsample = 0.8;
  double colsample = 0.8;
  double min_child_weight = 1.0;
  double reg_lambda = 1.0;
  // Boosting rounds added per disagreement epoch.
  std::size_t rounds_per_epoch = 1;
  // Multiplier on lambda / (N - 1) for the weight of every replicated target row.
  double disagreement_scale = 20.0;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] < threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;         // leaf output, learning rate already applied
};

struct Tree {
  std::size_t output = 0;  // class whose margin this tree adds to
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
};

// Class margins = base_margin + sum of tree outputs; probabilities = softmax(margins).
// Binary models keep margin[0] at zero and grow trees on margin[1] only.
struct GbtModel {
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  Vector base_margin;
  std::vector<Tree> trees;

  // Margins from weighted class frequencies; predicts the prior with no trees.
  static GbtModel from_priors(const WeightedDataset& train, std::size_t classes);
  void margins(std::span<const double> x, std::span<double> out) const;
};

// Adds `rounds` boosting rounds to `model` on `train`, starting from its current margins.
void gbt_boost(GbtModel& model, const GbtConfig& cfg, const WeightedDataset& train, std::size_t rounds,
               RngStream& rng);

// Weighted softmax cross-entropy of the model on a dataset, summed over rows.
double gbt_weighted_loss(const GbtModel& model, const WeightedDataset& data);

}  // namespace shiftguard

#endif  // SHIFTGUARD_GBT_H_
