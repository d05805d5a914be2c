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

#ifndef SHIFTGUARD_BASELINES_H_
#define SHIFTGUARD_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "shiftguard/dataset.h"
#include "shiftguard/detectron.h"
#include "shiftguard/learners.h"
#include "shiftguard/rng.h"

namespace shiftguard {

struct EnsembleSpec {
  std::size_t size = 10;
  std::vector<std::uint64_t> seeds;  // empty means 0 .. size-1

  std::vector<std::uint64_t> resolved_seeds() const;
  void validate() const;
};

// Members differ only in their training seed.
std::vector<Model> train_ensemble(const LearnerConfig& config, const Dataset& p_train, const Dataset& p_val,
                                  const EnsembleSpec& spec);

// Raw p-values; a baseline flags shift when its p-value falls below a threshold
// calibrated on null draws (see pvalue_threshold).
struct BaselinePValue {
  double p_value = 1.0;
  std::vector<std::string> flags;
};

// Binomial test of the non-unanimous count on Q against the rate on P*.
BaselinePValue ensemble_disagreement_pvalue(const std::vector<Model>& ens, const Dataset& p_star, const Dataset& q);
// KS test of the ensemble-mean predictive entropy, Q versus P*.
BaselinePValue ensemble_entropy_pvalue(const std::vector<Model>& ens, const Dataset& p_star, const Dataset& q);
// Per-class KS tests on f's probabilities, combined as min(1, N * min p).
BaselinePValue bbsd_pvalue(const Model& f, const Dataset& p_star, const Dataset& q);
// Domain classifier trained on halves of a P* draw and Q; binomial test of held-out hits.
BaselinePValue ctst_pvalue(const LearnerConfig& config, const Dataset& p_sample, const Dataset& q, RngStream& rng);

// alpha-quantile of null p-values; detect when p < threshold.
double pvalue_threshold(const std::vector<double>& null_p_values, double alpha);

// Verdicts with thresholds already calibrated.
TestVerdict ensemble_disagreement_test(const std::vector<Model>& ens, const Dataset& p_star, const Dataset& q,
                                       double threshold);
TestVerdict ensemble_entropy_test(const std::vector<Model>& ens, const Dataset& p_star, const Dataset& q,
                                  double threshold);
TestVerdict bbsd_test(const Model& f, const Dataset& p_star, const Dataset& q, double threshold);
TestVerdict ctst_test(const LearnerConfig& config, const Dataset& p_sample, const Dataset& q, double threshold,
                      RngStream& rng);

}  // namespace shiftguard

#endif  // SHIFTGUARD_BASELINES_H_
