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

#ifndef SHIFTGUARD_LEARNERS_H_
#define SHIFTGUARD_LEARNERS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shiftguard/dataset.h"
#include "shiftguard/gbt.h"
#include "shiftguard/mlp.h"
#include "shiftguard/rng.h"

namespace shiftguard {

enum class LearnerKind { kMlp, kGbt };
enum class ValidationMetric { kAccuracy, kAuc };

std::string to_string(LearnerKind k);
LearnerKind learner_kind_from_string(const std::string& s);
std::string to_string(ValidationMetric m);
ValidationMetric validation_metric_from_string(const std::string& s);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kGbt;
  MlpConfig mlp;
  GbtConfig gbt;
  // AUC applies to two-class problems only; accuracy is used otherwise.
  ValidationMetric metric = ValidationMetric::kAccuracy;

  void validate() const;
  // Stable "key = value" lines used for hashing and for config files.
  std::string canonical() const;
};

class Model {
 public:
  Model() = default;
  explicit Model(MlpModel m, std::uint64_t seed = 0);
  explicit Model(GbtModel m, std::uint64_t seed = 0);

  LearnerKind kind() const;
  std::size_t num_classes() const;
  std::size_t feature_dim() const;
  std::uint64_t training_seed() const { return seed_; }
  bool empty() const { return num_classes() == 0; }

  // Metric recorded on the validation set at fit time; NaN when none was given.
  double validation_score() const { return validation_score_; }
  void set_validation_score(double v) { validation_score_ = v; }

  Vector predict_proba(std::span<const double> x) const;
  void predict_proba_into(std::span<const double> x, std::span<double> out) const;
  Matrix predict_proba(const Matrix& x) const;
  std::size_t predict(std::span<const double> x) const;
  std::vector<std::size_t> predict(const Matrix& x) const;

  const MlpModel* mlp() const { return std::get_if<MlpModel>(&impl_); }
  const GbtModel* gbt() const { return std::get_if<GbtModel>(&impl_); }
  MlpModel* mutable_mlp() { return std::get_if<MlpModel>(&impl_); }
  GbtModel* mutable_gbt() { return std::get_if<GbtModel>(&impl_); }

 private:
  std::variant<std::monostate, MlpModel, GbtModel> impl_;
  std::uint64_t seed_ = 0;
  double validation_score_ = std::numeric_limits<double>::quiet_NaN();
};

// Accuracy, or AUC of the class-1 probability when configured and N = 2.
double evaluate_metric(const Model& m, const Dataset& data, ValidationMetric metric);
double accuracy(const Model& m, const Dataset& data);
double binary_auc(std::span<const double> scores, std::span<const std::size_t> labels);
// Fraction of rows where the two models' argmax labels differ.
double disagreement_rate(const Model& a, const Model& b, const Matrix& x);

Model fit(const LearnerConfig& config, const WeightedDataset& train, const Dataset& val, RngStream& rng);

// Number of batches one disagreement epoch takes; feeds lambda_weight.
std::size_t disagreement_batches_per_epoch(const LearnerConfig& config, std::size_t p_train_size,
                                           std::size_t q_size);

// Trains a copy of `base` to agree on P_train and disagree with the pseudo-labels of Q,
// one epoch (MLP) or rounds_per_epoch boosting rounds (GBT) per run_epoch call.
class DisagreementTrainer {
 public:
  virtual ~DisagreementTrainer() = default;
  virtual void run_epoch() = 0;
  virtual const Model& current() const = 0;
  virtual std::size_t epochs_completed() const = 0;
};

std::unique_ptr<DisagreementTrainer> start_disagreeing(const LearnerConfig& config, const Model& base,
                                                       const Dataset& p_train, const Dataset& q_pseudo,
                                                       double lambda, RngStream rng);

// Runs `epochs` epochs of start_disagreeing and returns the result.
Model fit_disagreeing(const LearnerConfig& config, const Model& base, const Dataset& p_train,
                      const Dataset& p_val, const Dataset& q_pseudo, double lambda, RngStream& rng,
                      std::size_t epochs);

// Versioned model file: one JSON header line, then a little-endian binary body.
void write_model(std::ostream& out, const Model& m);
Model read_model(std::istream& in);

}  // namespace shiftguard

#endif  // SHIFTGUARD_LEARNERS_H_
