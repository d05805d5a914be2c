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

#include "shiftguard/cdc.h"

#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "shiftguard/losses.h"

namespace shiftguard {

void CdcTrainSpec::validate() const {
  if (ensemble_max < 1) throw std::invalid_argument("ensemble size must be at least 1");
  if (!(val_tolerance > 0.0 && val_tolerance <= 1.0)) throw std::invalid_argument("tolerance must be in (0,1]");
  if (max_epochs_per_cdc < 1) throw std::invalid_argument("max epochs must be at least 1");
}

std::string CdcTrainSpec::canonical() const {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, val_tolerance);
  std::ostringstream s;
  s << "cdc.ensemble_max = " << ensemble_max << '\n';
  s << "cdc.val_tolerance = " << std::string(buf, ptr) << '\n';
  s << "cdc.max_epochs = " << max_epochs_per_cdc << '\n';
  return s.str();
}

Dataset pseudo_label(const Model& f, const Dataset& q) {
  Dataset out = q;
  out.labels = q.size() == 0 ? std::vector<std::size_t>{} : f.predict(q.features);
  out.num_classes = f.num_classes();
  out.refresh_fingerprint();
  return out;
}

Model train_cdc(const LearnerConfig& config, const Dataset& p_train, const Dataset& p_val, const Dataset& q_pseudo,
                const Model& f, const CdcTrainSpec& spec, RngStream& rng) {
  spec.validate();
  const double m0 = f.validation_score();
  if (!std::isfinite(m0)) throw std::invalid_argument("base validation metric unavailable");
  if (p_val.size() == 0 || !p_val.has_labels()) throw std::invalid_argument("base validation metric unavailable");
  const std::size_t batches = disagreement_batches_per_epoch(config, p_train.size(), q_pseudo.size());
  const double lambda = q_pseudo.size() == 0 ? 1.0 : lambda_weight(q_pseudo.size(), batches);
  auto trainer = start_disagreeing(config, f, p_train, q_pseudo, lambda, rng.split(0xcdc));
  Model kept = f;
  for (std::size_t epoch = 0; epoch < spec.max_epochs_per_cdc; ++epoch) {
    trainer->run_epoch();
    const double score = evaluate_metric(trainer->current(), p_val, config.metric);
    if (score < m0 - spec.val_tolerance) break;
    kept = trainer->current();
    kept.set_validation_score(score);
  }
  return kept;
}

CdcEnsemble build_ensemble(const LearnerConfig& config, const Dataset& p_train, const Dataset& p_val,
                           const Dataset& target, const Model& f, const CdcTrainSpec& spec, RngStream& rng) {
  spec.validate();
  if (target.size() == 0) throw std::invalid_argument("target set is empty");
  CdcEnsemble e;
  e.base = f;
  e.target_size = target.size();
  const Dataset labeled = pseudo_label(f, target);
  e.surviving_indices.resize(target.size());
  std::iota(e.surviving_indices.begin(), e.surviving_indices.end(), std::size_t{0});

  for (std::size_t round = 0; round < spec.ensemble_max && !e.surviving_indices.empty(); ++round) {
    const Dataset q = labeled.subset(e.surviving_indices);
    RngStream round_rng = rng.split(round);
    Model g = train_cdc(config, p_train, p_val, q, f, spec, round_rng);
    const std::vector<std::size_t> pred = g.predict(q.features);
    std::vector<std::size_t> kept;
    kept.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == q.labels[i]) kept.push_back(e.surviving_indices[i]);
    }
    e.surviving_indices = std::move(kept);
    e.members.push_back(std::move(g));
    e.per_round_phi.push_back(1.0 - static_cast<double>(e.surviving_indices.size()) /
                                        static_cast<double>(e.target_size));
  }
  return e;
}

double cdc_entropy(const CdcEnsemble& e, std::span<const double> x) {
  const std::size_t n = e.base.num_classes();
  Vector mean(n, 0.0), p(n);
  e.base.predict_proba_into(x, p);
  for (std::size_t c = 0; c < n; ++c) mean[c] += p[c];
  for (const Model& m : e.members) {
    m.predict_proba_into(x, p);
    for (std::size_t c = 0; c < n; ++c) mean[c] += p[c];
  }
  const double k = static_cast<double>(e.members.size() + 1);
  for (double& v : mean) v /= k;
  return entropy(mean);
}

std::vector<double> cdc_entropies(const CdcEnsemble& e, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = cdc_entropy(e, x.row(i));
  return out;
}

}  // namespace shiftguard
