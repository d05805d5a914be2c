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

#ifndef SHIFTGUARD_DETECTRON_H_
#define SHIFTGUARD_DETECTRON_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "shiftguard/cdc.h"
#include "shiftguard/dataset.h"
#include "shiftguard/learners.h"
#include "shiftguard/rng.h"

namespace shiftguard {

struct CalibrationRecord {
  std::size_t sample_size = 0;
  std::size_t runs = 0;
  double alpha = 0.05;
  std::vector<double> phi_p;
  std::vector<std::vector<double>> entropy_runs;
  std::vector<double> calib_p_values;
  double tau_disagreement = 0.0;
  double tau_entropy = 0.0;
  std::string config_hash;
  std::string config_snapshot;
  std::uint64_t base_seed = 0;

  void validate() const;
};

std::string calibration_to_json(const CalibrationRecord& r);
CalibrationRecord calibration_from_json(const std::string& text);

// Canonical text of everything a calibration depends on, and its FNV-1a hash.
std::string calibration_config_text(const Partition& p, const LearnerConfig& config, const CdcTrainSpec& spec,
                                    std::size_t sample_size, std::size_t runs, double alpha);
std::string calibration_config_hash(const std::string& config_text);

// K null runs on draws of size N from P*, each with its own child stream of rng.
// `jobs` worker threads share the runs; the record does not depend on `jobs`.
CalibrationRecord calibrate(const Partition& p, const LearnerConfig& config, const Model& f, std::size_t sample_size,
                            std::size_t runs, const CdcTrainSpec& spec, double alpha, const RngStream& rng,
                            std::size_t jobs = 1);

struct TestVerdict {
  std::string detector;         // e.g. detectron_entropy, bbsd
  std::string test;             // disagreement | entropy | pvalue
  double statistic = 0.0;
  double threshold = 0.0;
  bool detect_when_greater = true;  // statistic > threshold, else statistic < threshold
  bool shift_detected = false;
  std::size_t sample_size = 0;
  std::uint64_t base_seed = 0;
  std::uint64_t stream_id = 0;
  double wall_time_ms = 0.0;
  std::string config_hash;
  std::vector<std::string> flags;

  void decide();
};

// One line of JSON. wall_time_ms is the only field that varies between identical runs.
std::string verdict_to_json(const TestVerdict& v);

struct DetectronOutcome {
  CdcEnsemble ensemble;
  std::vector<double> entropies;  // per row of Q under the final ensemble
};

// Builds the ensemble against Q after checking it against the calibration.
DetectronOutcome detectron_run(const Partition& p, const Dataset& q, const CalibrationRecord& calib,
                               const LearnerConfig& config, const Model& f, const CdcTrainSpec& spec, RngStream& rng);

TestVerdict disagreement_verdict(double phi_q, const CalibrationRecord& calib);
// Drops one calibration run chosen by rng and pools the rest.
TestVerdict entropy_verdict(const std::vector<double>& entropies, const CalibrationRecord& calib, RngStream& rng);

TestVerdict test_disagreement(const Partition& p, const Dataset& q, const CalibrationRecord& calib,
                              const LearnerConfig& config, const Model& f, const CdcTrainSpec& spec, RngStream& rng);
TestVerdict test_entropy(const Partition& p, const Dataset& q, const CalibrationRecord& calib,
                         const LearnerConfig& config, const Model& f, const CdcTrainSpec& spec, RngStream& rng);

struct BaselineOptions {
  std::size_t ensemble_size = 10;
  std::size_t reference_size = 1000;  // rows of P* used as the i.i.d. reference sample
};

// Everything a detector needs: partitioned source data, an unlabeled target pool,
// learner settings and the trained base model.
struct ExperimentSetup {
  Partition parts;
  Dataset target_pool;
  LearnerConfig learner;
  CdcTrainSpec cdc;
  Model base;
  std::size_t calibration_runs = 100;
  double alpha = 0.05;
  std::size_t jobs = 1;
  BaselineOptions baselines;
  std::uint64_t seed = 0;
};

ExperimentSetup make_experiment(const Dataset& source, const Dataset& target_pool, const LearnerConfig& learner,
                                const CdcTrainSpec& cdc, const PartitionFractions& fractions, std::uint64_t seed);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string id() const = 0;
  // Names of the verdicts test() returns, in order.
  virtual std::vector<std::string> outputs() const = 0;
  virtual void calibrate(const ExperimentSetup& s, std::size_t sample_size, const RngStream& rng) = 0;
  virtual std::vector<TestVerdict> test(const ExperimentSetup& s, const Dataset& q, RngStream& rng) = 0;
};

// detectron, detectron_disagreement, detectron_entropy, ensemble, ensemble_disagreement,
// ensemble_entropy, bbsd, ctst, always, never.
std::unique_ptr<Detector> make_detector(const std::string& id);
std::vector<std::string> known_detectors();

struct PowerResult {
  std::string detector;
  std::size_t sample_size = 0;
  std::size_t trials = 0;
  std::size_t detections = 0;
  double tpr = 0.0;
  double std_err = 0.0;
  std::vector<TestVerdict> verdicts;
};

// Runs every detector on the same `trials` draws of size N from the target pool.
std::vector<PowerResult> evaluate_power(const ExperimentSetup& s, const std::vector<std::string>& detector_ids,
                                        std::size_t sample_size, std::size_t trials, const RngStream& rng);
PowerResult evaluate_power(const ExperimentSetup& s, const std::string& detector_id, std::size_t sample_size,
                           std::size_t trials, const RngStream& rng);

struct PsiPoint {
  double mean = 0.0;
  double std_err = 0.0;
};

// Mean paired difference of the disagreement rates per budget step.
std::vector<PsiPoint> disagreement_statistic_psi(const std::vector<std::vector<double>>& runs_q,
                                                 const std::vector<std::vector<double>>& runs_p);

// Disagreement rate of a single unconstrained disagreeing model on `sample`
// after each of `steps` epochs.
std::vector<double> disagreement_curve(const ExperimentSetup& s, const Dataset& sample, std::size_t steps,
                                       RngStream& rng);

}  // namespace shiftguard

#endif  // SHIFTGUARD_DETECTRON_H_
