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

#include "shiftguard/detectron.h"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "shiftguard/losses.h"
#include "shiftguard/stats.h"

namespace shiftguard {

namespace {

constexpr int kCalibrationVersion = 1;

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::uint64_t model_digest(const Model& m) {
  std::ostringstream s;
  write_model(s, m);
  return fnv1a64(s.str());
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// Runs body(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename Body>
void parallel_for(std::size_t n, std::size_t jobs, Body body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void CalibrationRecord::validate() const {
  if (runs == 0 || phi_p.size() != runs || entropy_runs.size() != runs || calib_p_values.size() != runs) {
    throw std::runtime_error("calibration record: run counts disagree");
  }
  for (const auto& run : entropy_runs) {
    if (run.size() != sample_size) throw std::runtime_error("calibration record: entropy run has wrong length");
  }
  for (double phi : phi_p) {
    if (!(phi >= 0.0 && phi <= 1.0)) throw std::runtime_error("calibration record: phi outside [0,1]");
  }
}

std::string calibration_to_json(const CalibrationRecord& r) {
  nlohmann::ordered_json j;
  j["format"] = "shiftguard.calibration";
  j["version"] = kCalibrationVersion;
  j["config_hash"] = r.config_hash;
  j["base_seed"] = r.base_seed;
  j["sample_size"] = r.sample_size;
  j["runs"] = r.runs;
  j["alpha"] = r.alpha;
  j["quantile_convention"] = "lower: smallest v with at least ceil(qK) values <= v";
  j["tau_disagreement"] = r.tau_disagreement;
  j["tau_entropy"] = r.tau_entropy;
  j["phi_p"] = r.phi_p;
  j["calib_p_values"] = r.calib_p_values;
  j["entropy_runs"] = r.entropy_runs;
  j["config_snapshot"] = r.config_snapshot;
  return j.dump(2) + "\n";
}

CalibrationRecord calibration_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "shiftguard.calibration") throw std::runtime_error("not a calibration file");
  if (j.value("version", 0) != kCalibrationVersion) throw std::runtime_error("unsupported calibration version");
  CalibrationRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.base_seed = j.at("base_seed").get<std::uint64_t>();
  r.sample_size = j.at("sample_size").get<std::size_t>();
  r.runs = j.at("runs").get<std::size_t>();
  r.alpha = j.at("alpha").get<double>();
  r.tau_disagreement = j.at("tau_disagreement").get<double>();
  r.tau_entropy = j.at("tau_entropy").get<double>();
  r.phi_p = j.at("phi_p").get<std::vector<double>>();
  r.calib_p_values = j.at("calib_p_values").get<std::vector<double>>();
  r.entropy_runs = j.at("entropy_runs").get<std::vector<std::vector<double>>>();
  r.config_snapshot = j.value("config_snapshot", "");
  r.validate();
  return r;
}

std::string calibration_config_text(const Partition& p, const LearnerConfig& config, const CdcTrainSpec& spec,
                                    std::size_t sample_size, std::size_t runs, double alpha) {
  std::ostringstream s;
  s << "data.train = " << hex64(p.train.fingerprint) << '\n';
  s << "data.val = " << hex64(p.val.fingerprint) << '\n';
  s << "data.holdout = " << hex64(p.holdout.fingerprint) << '\n';
  s << config.canonical() << spec.canonical();
  s << "calibration.sample_size = " << sample_size << '\n';
  s << "calibration.runs = " << runs << '\n';
  s << "calibration.alpha = " << fmt(alpha) << '\n';
  return s.str();
}

std::string calibration_config_hash(const std::string& config_text) { return hex64(fnv1a64(config_text)); }

namespace {

std::string live_config_text(const Partition& p, const LearnerConfig& config, const Model& f,
                             const CdcTrainSpec& spec, std::size_t sample_size, std::size_t runs, double alpha) {
  return calibration_config_text(p, config, spec, sample_size, runs, alpha) + "model = " + hex64(model_digest(f)) +
         "\n";
}

}  // namespace

CalibrationRecord calibrate(const Partition& p, const LearnerConfig& config, const Model& f, std::size_t sample_size,
                            std::size_t runs, const CdcTrainSpec& spec, double alpha, const RngStream& rng,
                            std::size_t jobs) {
  if (sample_size == 0) throw std::invalid_argument("sample size must be positive");
  if (p.holdout.size() < sample_size) throw std::invalid_argument("insufficient held-out data");
  if (runs < 20) throw std::invalid_argument("calibration needs at least 20 runs");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  spec.validate();

  CalibrationRecord r;
  r.sample_size = sample_size;
  r.runs = runs;
  r.alpha = alpha;
  r.base_seed = rng.base_seed();
  r.config_snapshot = live_config_text(p, config, f, spec, sample_size, runs, alpha);
  r.config_hash = calibration_config_hash(r.config_snapshot);
  r.phi_p.assign(runs, 0.0);
  r.entropy_runs.assign(runs, {});
  const Dataset holdout = p.holdout.without_labels();

  parallel_for(runs, jobs, [&](std::size_t i) {
    RngStream run_rng = rng.split(i);
    const std::vector<std::size_t> idx = run_rng.sample_without_replacement(holdout.size(), sample_size);
    const Dataset sample = holdout.subset(idx);
    RngStream ens_rng = run_rng.split(1);
    const CdcEnsemble e = build_ensemble(config, p.train, p.val, sample, f, spec, ens_rng);
    r.phi_p[i] = e.phi();
    r.entropy_runs[i] = cdc_entropies(e, sample.features);
  });

  r.calib_p_values.assign(runs, 1.0);
  for (std::size_t i = 0; i < runs; ++i) {
    std::vector<double> pooled;
    pooled.reserve((runs - 1) * sample_size);
    for (std::size_t k = 0; k < runs; ++k) {
      if (k != i) pooled.insert(pooled.end(), r.entropy_runs[k].begin(), r.entropy_runs[k].end());
    }
    r.calib_p_values[i] = ks_two_sample(r.entropy_runs[i], pooled).p_value;
  }
  r.tau_disagreement = empirical_quantile(r.phi_p, 1.0 - alpha);
  r.tau_entropy = empirical_quantile(r.calib_p_values, alpha);
  return r;
}

void TestVerdict::decide() {
  shift_detected = detect_when_greater ? statistic > threshold : statistic < threshold;
}

std::string verdict_to_json(const TestVerdict& v) {
  nlohmann::ordered_json j;
  j["format"] = "shiftguard.verdict";
  j["version"] = 1;
  j["detector"] = v.detector;
  j["test"] = v.test;
  j["statistic"] = v.statistic;
  j["threshold"] = v.threshold;
  j["decision_rule"] = v.detect_when_greater ? "statistic > threshold" : "statistic < threshold";
  j["shift_detected"] = v.shift_detected;
  j["sample_size"] = v.sample_size;
  j["base_seed"] = v.base_seed;
  j["stream_id"] = v.stream_id;
  j["wall_time_ms"] = v.wall_time_ms;
  j["config_hash"] = v.config_hash;
  j["flags"] = v.flags;
  return j.dump();
}

DetectronOutcome detectron_run(const Partition& p, const Dataset& q, const CalibrationRecord& calib,
                               const LearnerConfig& config, const Model& f, const CdcTrainSpec& spec, RngStream& rng) {
  if (q.size() != calib.sample_size) throw std::invalid_argument("sample size must match calibration");
  const std::string live = live_config_text(p, config, f, spec, calib.sample_size, calib.runs, calib.alpha);
  if (calibration_config_hash(live) != calib.config_hash) throw std::invalid_argument("calibration/config mismatch");
  DetectronOutcome out;
  const Dataset target = q.without_labels();
  out.ensemble = build_ensemble(config, p.train, p.val, target, f, spec, rng);
  out.entropies = cdc_entropies(out.ensemble, target.features);
  return out;
}

TestVerdict disagreement_verdict(double phi_q, const CalibrationRecord& calib) {
  TestVerdict v;
  v.detector = "detectron_disagreement";
  v.test = "disagreement";
  v.statistic = phi_q;
  v.threshold = calib.tau_disagreement;
  v.detect_when_greater = true;
  v.sample_size = calib.sample_size;
  v.config_hash = calib.config_hash;
  v.decide();
  return v;
}

TestVerdict entropy_verdict(const std::vector<double>& entropies, const CalibrationRecord& calib, RngStream& rng) {
  if (entropies.size() != calib.sample_size) throw std::invalid_argument("sample size must match calibration");
  const std::size_t drop = static_cast<std::size_t>(rng.uniform_int(calib.runs));
  std::vector<double> pooled;
  pooled.reserve((calib.runs - 1) * calib.sample_size);
  for (std::size_t k = 0; k < calib.runs; ++k) {
    if (k != drop) pooled.insert(pooled.end(), calib.entropy_runs[k].begin(), calib.entropy_runs[k].end());
  }
  TestVerdict v;
  v.detector = "detectron_entropy";
  v.test = "entropy";
  v.statistic = ks_two_sample(entropies, pooled).p_value;
  v.threshold = calib.tau_entropy;
  v.detect_when_greater = false;
  v.sample_size = calib.sample_size;
  v.config_hash = calib.config_hash;
  v.decide();
  return v;
}

TestVerdict test_disagreement(const Partition& p, const Dataset& q, const CalibrationRecord& calib,
                              const LearnerConfig& config, const Model& f, const CdcTrainSpec& spec, RngStream& rng) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t stream = rng.stream_id();
  const DetectronOutcome out = detectron_run(p, q, calib, config, f, spec, rng);
  TestVerdict v = disagreement_verdict(out.ensemble.phi(), calib);
  v.base_seed = rng.base_seed();
  v.stream_id = stream;
  v.wall_time_ms = elapsed_ms(start);
  return v;
}

TestVerdict test_entropy(const Partition& p, const Dataset& q, const CalibrationRecord& calib,
                         const LearnerConfig& config, const Model& f, const CdcTrainSpec& spec, RngStream& rng) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t stream = rng.stream_id();
  RngStream ens_rng = rng.split(1);
  RngStream pool_rng = rng.split(2);
  const DetectronOutcome out = detectron_run(p, q, calib, config, f, spec, ens_rng);
  TestVerdict v = entropy_verdict(out.entropies, calib, pool_rng);
  v.base_seed = rng.base_seed();
  v.stream_id = stream;
  v.wall_time_ms = elapsed_ms(start);
  return v;
}

ExperimentSetup make_experiment(const Dataset& source, const Dataset& target_pool, const LearnerConfig& learner,
                                const CdcTrainSpec& cdc, const PartitionFractions& fractions, std::uint64_t seed) {
  learner.validate();
  cdc.validate();
  ExperimentSetup s;
  RngStream part_rng = rng_stream(seed, 1);
  s.parts = partition(source, fractions, part_rng);
  s.target_pool = target_pool.without_labels();
  s.learner = learner;
  s.cdc = cdc;
  s.seed = seed;
  RngStream fit_rng = rng_stream(seed, 2);
  s.base = fit(learner, WeightedDataset::from(s.parts.train), s.parts.val, fit_rng);
  return s;
}

std::vector<PowerResult> evaluate_power(const ExperimentSetup& s, const std::vector<std::string>& detector_ids,
                                        std::size_t sample_size, std::size_t trials, const RngStream& rng) {
  if (trials < 30) throw std::invalid_argument("power evaluation needs at least 30 trials");
  if (s.target_pool.size() < sample_size) throw std::invalid_argument("target pool smaller than sample size");
  std::vector<std::unique_ptr<Detector>> detectors;
  std::vector<PowerResult> results;
  for (const std::string& id : detector_ids) {
    detectors.push_back(make_detector(id));
    detectors.back()->calibrate(s, sample_size, rng.split(fnv1a64(id)));
    for (const std::string& out : detectors.back()->outputs()) {
      PowerResult r;
      r.detector = out;
      r.sample_size = sample_size;
      r.trials = trials;
      results.push_back(std::move(r));
    }
  }
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.split(0x7000000000000000ull + t);
    RngStream draw_rng = trial_rng.split(0);
    const Dataset q = s.target_pool.subset(draw_rng.sample_without_replacement(s.target_pool.size(), sample_size));
    std::size_t slot = 0;
    for (std::size_t d = 0; d < detectors.size(); ++d) {
      RngStream verdict_rng = trial_rng.split(fnv1a64(detector_ids[d]));
      for (TestVerdict& v : detectors[d]->test(s, q, verdict_rng)) {
        PowerResult& r = results.at(slot++);
        r.detections += v.shift_detected;
        r.verdicts.push_back(std::move(v));
      }
    }
  }
  for (PowerResult& r : results) {
    r.tpr = static_cast<double>(r.detections) / static_cast<double>(r.trials);
    r.std_err = std::sqrt(r.tpr * (1.0 - r.tpr) / static_cast<double>(r.trials));
  }
  return results;
}

PowerResult evaluate_power(const ExperimentSetup& s, const std::string& detector_id, std::size_t sample_size,
                           std::size_t trials, const RngStream& rng) {
  std::vector<PowerResult> all = evaluate_power(s, std::vector<std::string>{detector_id}, sample_size, trials, rng);
  if (all.size() != 1) throw std::invalid_argument("detector '" + detector_id + "' reports several tests");
  return std::move(all.front());
}

std::vector<PsiPoint> disagreement_statistic_psi(const std::vector<std::vector<double>>& runs_q,
                                                 const std::vector<std::vector<double>>& runs_p) {
  if (runs_q.size() != runs_p.size() || runs_q.empty()) throw std::invalid_argument("unpaired runs");
  const std::size_t steps = runs_q.front().size();
  for (std::size_t r = 0; r < runs_q.size(); ++r) {
    if (runs_q[r].size() != steps || runs_p[r].size() != steps) throw std::invalid_argument("unpaired runs");
  }
  const double k = static_cast<double>(runs_q.size());
  std::vector<PsiPoint> out(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < runs_q.size(); ++r) {
      const double d = runs_q[r][t] - runs_p[r][t];
      sum += d;
      sq += d * d;
    }
    out[t].mean = sum / k;
    if (runs_q.size() > 1) {
      const double var = std::max(0.0, (sq - k * out[t].mean * out[t].mean) / (k - 1.0));
      out[t].std_err = std::sqrt(var / k);
    }
  }
  return out;
}

std::vector<double> disagreement_curve(const ExperimentSetup& s, const Dataset& sample, std::size_t steps,
                                       RngStream& rng) {
  if (sample.size() == 0) throw std::invalid_argument("sample is empty");
  const Dataset q = pseudo_label(s.base, sample);
  const std::size_t batches = disagreement_batches_per_epoch(s.learner, s.parts.train.size(), q.size());
  auto trainer = start_disagreeing(s.learner, s.base, s.parts.train, q, lambda_weight(q.size(), batches), rng);
  std::vector<double> curve;
  curve.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    trainer->run_epoch();
    curve.push_back(disagreement_rate(trainer->current(), s.base, q.features));
  }
  return curve;
}

}  // namespace shiftguard
