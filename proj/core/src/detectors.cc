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


// Detector registry used by the power harness and the command-line tool.

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "shiftguard/baselines.h"
#include "shiftguard/detectron.h"

namespace shiftguard {

namespace {

double since_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void stamp(std::vector<TestVerdict>& vs, const RngStream& rng, double ms) {
  for (TestVerdict& v : vs) {
    v.base_seed = rng.base_seed();
    v.stream_id = rng.stream_id();
    v.wall_time_ms = ms;
  }
}

class DetectronDetector : public Detector {
 public:
  explicit DetectronDetector(std::string mode) : mode_(std::move(mode)) {}

  std::string id() const override { return mode_; }
  std::vector<std::string> outputs() const override {
    if (mode_ == "detectron") return {"detectron_disagreement", "detectron_entropy"};
    return {mode_};
  }

  void calibrate(const ExperimentSetup& s, std::size_t sample_size, const RngStream& rng) override {
    calib_ = shiftguard::calibrate(s.parts, s.learner, s.base, sample_size, s.calibration_runs, s.cdc, s.alpha, rng,
                                   s.jobs);
  }

  std::vector<TestVerdict> test(const ExperimentSetup& s, const Dataset& q, RngStream& rng) override {
    if (calib_.runs == 0) throw std::logic_error("detector used before calibration");
    const auto start = std::chrono::steady_clock::now();
    RngStream ens_rng = rng.split(1);
    RngStream pool_rng = rng.split(2);
    const DetectronOutcome out = detectron_run(s.parts, q, calib_, s.learner, s.base, s.cdc, ens_rng);
    std::vector<TestVerdict> vs;
    if (mode_ != "detectron_entropy") vs.push_back(disagreement_verdict(out.ensemble.phi(), calib_));
    if (mode_ != "detectron_disagreement") vs.push_back(entropy_verdict(out.entropies, calib_, pool_rng));
    stamp(vs, rng, since_ms(start));
    return vs;
  }

 private:
  std::string mode_;
  CalibrationRecord calib_;
};

// Shared plumbing for the i.i.d. baselines: reference rows from P*, null draws from P_val.
class PValueDetector : public Detector {
 public:
  void calibrate(const ExperimentSetup& s, std::size_t sample_size, const RngStream& rng) override {
    if (s.parts.val.size() < sample_size) throw std::invalid_argument("insufficient validation data for calibration");
    if (s.calibration_runs < 20) throw std::invalid_argument("calibration needs at least 20 runs");
    const std::size_t ref = std::min(s.baselines.reference_size, s.parts.holdout.size());
    if (ref == 0) throw std::invalid_argument("insufficient held-out data");
    std::vector<std::size_t> rows(ref);
    for (std::size_t i = 0; i < ref; ++i) rows[i] = i;
    reference_ = s.parts.holdout.subset(rows).without_labels();
    prepare(s);
    const std::vector<std::string> names = outputs();
    std::vector<std::vector<double>> nulls(names.size());
    const Dataset pool = s.parts.val.without_labels();
    for (std::size_t k = 0; k < s.calibration_runs; ++k) {
      RngStream run_rng = rng.split(k);
      const Dataset q = pool.subset(run_rng.sample_without_replacement(pool.size(), sample_size));
      RngStream p_rng = run_rng.split(1);
      const std::vector<BaselinePValue> ps = pvalues(s, q, p_rng);
      for (std::size_t j = 0; j < ps.size(); ++j) nulls[j].push_back(ps[j].p_value);
    }
    thresholds_.clear();
    for (const auto& n : nulls) thresholds_.push_back(pvalue_threshold(n, s.alpha));
  }

  std::vector<TestVerdict> test(const ExperimentSetup& s, const Dataset& q, RngStream& rng) override {
    if (thresholds_.empty()) throw std::logic_error("detector used before calibration");
    const auto start = std::chrono::steady_clock::now();
    RngStream p_rng = rng.split(1);
    const std::vector<BaselinePValue> ps = pvalues(s, q, p_rng);
    const std::vector<std::string> names = outputs();
    std::vector<TestVerdict> vs;
    for (std::size_t j = 0; j < ps.size(); ++j) {
      TestVerdict v;
      v.detector = names[j];
      v.test = "pvalue";
      v.statistic = ps[j].p_value;
      v.threshold = thresholds_[j];
      v.detect_when_greater = false;
      v.sample_size = q.size();
      v.flags = ps[j].flags;
      v.decide();
      vs.push_back(std::move(v));
    }
    stamp(vs, rng, since_ms(start));
    return vs;
  }

 protected:
  virtual void prepare(const ExperimentSetup&) {}
  virtual std::vector<BaselinePValue> pvalues(const ExperimentSetup& s, const Dataset& q, RngStream& rng) = 0;

  Dataset reference_;

 private:
  std::vector<double> thresholds_;
};

class EnsembleDetector : public PValueDetector {
 public:
  explicit EnsembleDetector(std::string mode) : mode_(std::move(mode)) {}
  std::string id() const override { return mode_; }
  std::vector<std::string> outputs() const override {
    if (mode_ == "ensemble") return {"ensemble_disagreement", "ensemble_entropy"};
    return {mode_};
  }

 protected:
  void prepare(const ExperimentSetup& s) override {
    if (!members_.empty()) return;
    EnsembleSpec spec;
    spec.size = s.baselines.ensemble_size;
    for (std::size_t i = 0; i < spec.size; ++i) spec.seeds.push_back(s.seed * 1000003ull + i);
    members_ = train_ensemble(s.learner, s.parts.train, s.parts.val, spec);
  }
  std::vector<BaselinePValue> pvalues(const ExperimentSetup&, const Dataset& q, RngStream&) override {
    std::vector<BaselinePValue> out;
    if (mode_ != "ensemble_entropy") out.push_back(ensemble_disagreement_pvalue(members_, reference_, q));
    if (mode_ != "ensemble_disagreement") out.push_back(ensemble_entropy_pvalue(members_, reference_, q));
    return out;
  }

 private:
  std::string mode_;
  std::vector<Model> members_;
};

class BbsdDetector : public PValueDetector {
 public:
  std::string id() const override { return "bbsd"; }
  std::vector<std::string> outputs() const override { return {"bbsd"}; }

 protected:
  std::vector<BaselinePValue> pvalues(const ExperimentSetup& s, const Dataset& q, RngStream&) override {
    return {bbsd_pvalue(s.base, reference_, q)};
  }
};

class CtstDetector : public PValueDetector {
 public:
  std::string id() const override { return "ctst"; }
  std::vector<std::string> outputs() const override { return {"ctst"}; }

 protected:
  std::vector<BaselinePValue> pvalues(const ExperimentSetup& s, const Dataset& q, RngStream& rng) override {
    const std::size_t n = std::min(q.size(), reference_.size());
    RngStream draw = rng.split(0);
    const Dataset p = reference_.subset(draw.sample_without_replacement(reference_.size(), n));
    RngStream fit_rng = rng.split(1);
    return {ctst_pvalue(s.learner, p, q, fit_rng)};
  }
};

// Fixed decisions; useful as harness controls.
class ConstantDetector : public Detector {
 public:
  explicit ConstantDetector(bool detect) : detect_(detect) {}
  std::string id() const override { return detect_ ? "always" : "never"; }
  std::vector<std::string> outputs() const override { return {id()}; }
  void calibrate(const ExperimentSetup&, std::size_t, const RngStream&) override {}
  std::vector<TestVerdict> test(const ExperimentSetup&, const Dataset& q, RngStream& rng) override {
    TestVerdict v;
    v.detector = id();
    v.test = "constant";
    v.statistic = detect_ ? 1.0 : 0.0;
    v.threshold = 0.5;
    v.sample_size = q.size();
    v.decide();
    std::vector<TestVerdict> vs{v};
    stamp(vs, rng, 0.0);
    return vs;
  }

 private:
  bool detect_;
};

}  // namespace

std::vector<std::string> known_detectors() {
  return {"detectron", "detectron_disagreement", "detectron_entropy", "ensemble", "ensemble_disagreement",
          "ensemble_entropy", "bbsd", "ctst", "always", "never"};
}

std::unique_ptr<Detector> make_detector(const std::string& id) {
  if (id == "detectron" || id == "detectron_disagreement" || id == "detectron_entropy") {
    return std::make_unique<DetectronDetector>(id);
  }
  if (id == "ensemble" || id == "ensemble_disagreement" || id == "ensemble_entropy") {
    return std::make_unique<EnsembleDetector>(id);
  }
  if (id == "bbsd") return std::make_unique<BbsdDetector>();
  if (id == "ctst") return std::make_unique<CtstDetector>();
  if (id == "always") return std::make_unique<ConstantDetector>(true);
  if (id == "never") return std::make_unique<ConstantDetector>(false);
  throw std::invalid_argument("unknown detector '" + id + "'");
}

}  // namespace shiftguard
