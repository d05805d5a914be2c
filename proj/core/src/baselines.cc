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

#include "shiftguard/baselines.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "shiftguard/stats.h"

namespace shiftguard {

std::vector<std::uint64_t> EnsembleSpec::resolved_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(size);
  std::iota(out.begin(), out.end(), std::uint64_t{0});
  return out;
}

void EnsembleSpec::validate() const {
  if (!seeds.empty() && seeds.size() != size) throw std::invalid_argument("ensemble seed count does not match size");
  if (size < 2) throw std::invalid_argument("ensemble needs at least 2 members");
  const std::vector<std::uint64_t> s = resolved_seeds();
  if (std::set<std::uint64_t>(s.begin(), s.end()).size() != s.size()) {
    throw std::invalid_argument("ensemble seeds must be distinct");
  }
}

std::vector<Model> train_ensemble(const LearnerConfig& config, const Dataset& p_train, const Dataset& p_val,
                                  const EnsembleSpec& spec) {
  spec.validate();
  const WeightedDataset train = WeightedDataset::from(p_train);
  std::vector<Model> out;
  for (std::uint64_t seed : spec.resolved_seeds()) {
    RngStream rng = rng_stream(seed, 0xe5e);
    out.push_back(fit(config, train, p_val, rng));
  }
  return out;
}

namespace {

void check_pair(const Dataset& p, const Dataset& q) {
  if (p.size() == 0 || q.size() == 0) throw std::invalid_argument("reference and target samples must be non-empty");
  if (p.dim() != q.dim()) throw std::invalid_argument("reference and target dimensions differ");
}

void check_ensemble(const std::vector<Model>& ens) {
  if (ens.size() < 2) throw std::invalid_argument("ensemble needs at least 2 members");
}

std::size_t non_unanimous(const std::vector<Model>& ens, const Matrix& x) {
  std::vector<std::vector<std::size_t>> preds;
  for (const Model& m : ens) preds.push_back(m.predict(x));
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 1; k < preds.size(); ++k) {
      if (preds[k][i] != preds[0][i]) {
        ++count;
        break;
      }
    }
  }
  return count;
}

std::vector<double> mean_entropies(const std::vector<Model>& ens, const Matrix& x) {
  const std::size_t n = ens.front().num_classes();
  std::vector<double> out(x.rows());
  Vector mean(n), p(n);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (const Model& m : ens) {
      m.predict_proba_into(x.row(i), p);
      for (std::size_t c = 0; c < n; ++c) mean[c] += p[c] / static_cast<double>(ens.size());
    }
    out[i] = entropy(mean);
  }
  return out;
}

std::vector<double> column(const Matrix& m, std::size_t c) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m(i, c);
  return out;
}

TestVerdict pvalue_verdict(const std::string& detector, const BaselinePValue& p, std::size_t n, double threshold) {
  TestVerdict v;
  v.detector = detector;
  v.test = "pvalue";
  v.statistic = p.p_value;
  v.threshold = threshold;
  v.detect_when_greater = false;
  v.sample_size = n;
  v.flags = p.flags;
  v.decide();
  return v;
}

}  // namespace

BaselinePValue ensemble_disagreement_pvalue(const std::vector<Model>& ens, const Dataset& p_star, const Dataset& q) {
  check_ensemble(ens);
  check_pair(p_star, q);
  BaselinePValue out;
  const std::size_t x_ref = non_unanimous(ens, p_star.features);
  double rate = static_cast<double>(x_ref) / static_cast<double>(p_star.size());
  if (x_ref == 0 || x_ref == p_star.size()) {
    rate = (static_cast<double>(x_ref) + 1.0) / (static_cast<double>(p_star.size()) + 2.0);
    out.flags.push_back("add_one_smoothing");
  }
  const std::size_t x = non_unanimous(ens, q.features);
  out.p_value = binomial_upper_tail(x, q.size(), rate);
  return out;
}

BaselinePValue ensemble_entropy_pvalue(const std::vector<Model>& ens, const Dataset& p_star, const Dataset& q) {
  check_ensemble(ens);
  check_pair(p_star, q);
  BaselinePValue out;
  out.p_value = ks_two_sample(mean_entropies(ens, q.features), mean_entropies(ens, p_star.features)).p_value;
  return out;
}

BaselinePValue bbsd_pvalue(const Model& f, const Dataset& p_star, const Dataset& q) {
  check_pair(p_star, q);
  const Matrix pp = f.predict_proba(p_star.features);
  const Matrix pq = f.predict_proba(q.features);
  double min_p = 1.0;
  for (std::size_t c = 0; c < f.num_classes(); ++c) {
    min_p = std::min(min_p, ks_two_sample(column(pq, c), column(pp, c)).p_value);
  }
  BaselinePValue out;
  out.p_value = std::min(1.0, static_cast<double>(f.num_classes()) * min_p);
  return out;
}

BaselinePValue ctst_pvalue(const LearnerConfig& config, const Dataset& p_sample, const Dataset& q, RngStream& rng) {
  check_pair(p_sample, q);
  if (q.size() < 4 || p_sample.size() < 4) throw std::invalid_argument("insufficient samples to split");
  const std::vector<std::size_t> pp = rng.permutation(p_sample.size());
  const std::vector<std::size_t> qp = rng.permutation(q.size());
  const std::size_t p_half = p_sample.size() / 2, q_half = q.size() / 2;

  WeightedDataset train;
  train.num_classes = 2;
  train.features = Matrix(0, q.dim());
  for (std::size_t i = 0; i < p_half; ++i) train.append(p_sample.row(pp[i]), 0, 1.0);
  for (std::size_t i = 0; i < q_half; ++i) train.append(q.row(qp[i]), 1, 1.0);
  RngStream fit_rng = rng.split(1);
  const Model domain = fit(config, train, Dataset{}, fit_rng);

  std::size_t hits = 0, tested = 0;
  for (std::size_t i = p_half; i < p_sample.size(); ++i, ++tested) hits += domain.predict(p_sample.row(pp[i])) == 0;
  for (std::size_t i = q_half; i < q.size(); ++i, ++tested) hits += domain.predict(q.row(qp[i])) == 1;
  BaselinePValue out;
  out.p_value = binomial_upper_tail(hits, tested, 0.5);
  return out;
}

double pvalue_threshold(const std::vector<double>& null_p_values, double alpha) {
  if (null_p_values.empty()) throw std::invalid_argument("no null p-values");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  return empirical_quantile(null_p_values, alpha);
}

TestVerdict ensemble_disagreement_test(const std::vector<Model>& ens, const Dataset& p_star, const Dataset& q,
                                       double threshold) {
  return pvalue_verdict("ensemble_disagreement", ensemble_disagreement_pvalue(ens, p_star, q), q.size(), threshold);
}

TestVerdict ensemble_entropy_test(const std::vector<Model>& ens, const Dataset& p_star, const Dataset& q,
                                  double threshold) {
  return pvalue_verdict("ensemble_entropy", ensemble_entropy_pvalue(ens, p_star, q), q.size(), threshold);
}

TestVerdict bbsd_test(const Model& f, const Dataset& p_star, const Dataset& q, double threshold) {
  return pvalue_verdict("bbsd", bbsd_pvalue(f, p_star, q), q.size(), threshold);
}

TestVerdict ctst_test(const LearnerConfig& config, const Dataset& p_sample, const Dataset& q, double threshold,
                      RngStream& rng) {
  return pvalue_verdict("ctst", ctst_pvalue(config, p_sample, q, rng), q.size(), threshold);
}

}  // namespace shiftguard
