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

#ifndef SHIFTGUARD_CDC_H_
#define SHIFTGUARD_CDC_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shiftguard/dataset.h"
#include "shiftguard/learners.h"
#include "shiftguard/rng.h"

namespace shiftguard {

struct CdcTrainSpec {
  std::size_t ensemble_max = 5;        // members per ensemble
  double val_tolerance = 0.05;         // allowed drop of the validation metric
  std::size_t max_epochs_per_cdc = 10; // also the hard cap on optimization per member

  void validate() const;
  std::string canonical() const;
};

// Copy of q labeled with f's argmax predictions.
Dataset pseudo_label(const Model& f, const Dataset& q);

// Trains one constrained disagreement classifier. Stops at the first epoch whose
// validation metric falls more than val_tolerance below f's recorded metric and
// returns the last model that stayed within it.
Model train_cdc(const LearnerConfig& config, const Dataset& p_train, const Dataset& p_val, const Dataset& q_pseudo,
                const Model& f, const CdcTrainSpec& spec, RngStream& rng);

struct CdcEnsemble {
  Model base;
  std::vector<Model> members;
  std::vector<double> per_round_phi;          // non-decreasing
  std::vector<std::size_t> surviving_indices; // rows every member still agrees with f on
  std::size_t target_size = 0;

  double phi() const { return per_round_phi.empty() ? 0.0 : per_round_phi.back(); }
};

CdcEnsemble build_ensemble(const LearnerConfig& config, const Dataset& p_train, const Dataset& p_val,
                           const Dataset& target, const Model& f, const CdcTrainSpec& spec, RngStream& rng);

// Entropy of the mean probability vector over base and members (natural log).
double cdc_entropy(const CdcEnsemble& e, std::span<const double> x);
std::vector<double> cdc_entropies(const CdcEnsemble& e, const Matrix& x);

// Ensemble file: JSON header line, then each model in write_model format.
void write_ensemble(std::ostream& out, const CdcEnsemble& e);
CdcEnsemble read_ensemble(std::istream& in);

}  // namespace shiftguard

#endif  // SHIFTGUARD_CDC_H_
