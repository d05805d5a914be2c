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

#ifndef SHIFTGUARD_MLP_H_
#define SHIFTGUARD_MLP_H_

#include <cstddef>
#include <span>
#include <vector>

#include "shiftguard/dataset.h"
#include "shiftguard/losses.h"
#include "shiftguard/numerics.h"
#include "shiftguard/rng.h"

namespace shiftguard {

struct MlpConfig {
  std::vector<std::size_t> hidden_sizes{16, 16, 16};
  double dropout_rate = 0.3;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 1000;
  std::size_t batch_size = 32;
  double l2 = 0.0;
  std::size_t patience = 100;
  bool standardize = true;
  // Batch size while training a disagreeing copy; all of Q plus P rows up to this size.
  std::size_t cdc_batch_size = 128;
  // Multiplier on lambda for the disagreement term during CDC training.
  double disagreement_scale = 10.0;
  // Adam step size while training disagreeing copies; 0 reuses learning_rate.
  double cdc_learning_rate = 0.01;
};

// ReLU network; dropout follows every hidden layer during training only.
struct MlpModel {
  std::vector<Matrix> weights;  // layer l: (out, in)
  std::vector<Vector> biases;
  Standardizer input;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  double dropout_rate = 0.0;

  static MlpModel zeros(std::size_t dim, std::size_t classes, std::span<const std::size_t> hidden);
  void logits(std::span<const double> x, std::span<double> out) const;
  std::size_t parameter_count() const;
};

struct MlpGradient {
  std::vector<Matrix> dw;
  std::vector<Vector> db;

  explicit MlpGradient(const MlpModel& shape);
  void zero();
};

// Mean batch objective of cdc_batch_loss with dropout off; accumulates into grad when given.
double mlp_batch_objective(const MlpModel& m, std::span<const WeightedSample> batch, double lambda,
                           MlpGradient* grad);

// First-moment / second-moment optimizer state with bias correction.
class AdamState {
 public:
  AdamState(const MlpModel& shape, double learning_rate, double l2);
  void step(MlpModel& m, const MlpGradient& g);

 private:
  double lr_, l2_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  MlpGradient m1_, m2_;
};

// One dropout-enabled forward/backward pass over a batch, followed by an optimizer step.
// Returns the batch objective.
double mlp_train_step(MlpModel& m, AdamState& opt, std::span<const WeightedSample> batch, double lambda,
                      RngStream& rng);

MlpModel mlp_initialize(const MlpConfig& cfg, const Matrix& train_x, std::size_t classes, RngStream& rng);

}  // namespace shiftguard

#endif  // SHIFTGUARD_MLP_H_
