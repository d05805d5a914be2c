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

#include "shiftguard/learners.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace shiftguard {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(LearnerKind k) { return k == LearnerKind::kMlp ? "mlp" : "gbt"; }

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "mlp") return LearnerKind::kMlp;
  if (s == "gbt") return LearnerKind::kGbt;
  throw std::invalid_argument("unknown learner kind '" + s + "'");
}

std::string to_string(ValidationMetric m) { return m == ValidationMetric::kAuc ? "auc" : "accuracy"; }

ValidationMetric validation_metric_from_string(const std::string& s) {
  if (s == "accuracy") return ValidationMetric::kAccuracy;
  if (s == "auc") return ValidationMetric::kAuc;
  throw std::invalid_argument("unknown validation metric '" + s + "'");
}

void LearnerConfig::validate() const {
  if (mlp.hidden_sizes.empty()) throw std::invalid_argument("mlp.hidden_sizes must not be empty");
  for (std::size_t h : mlp.hidden_sizes) {
    if (h == 0) throw std::invalid_argument("mlp.hidden_sizes entries must be positive");
  }
  if (!(mlp.dropout_rate >= 0.0 && mlp.dropout_rate < 1.0)) throw std::invalid_argument("mlp.dropout_rate must be in [0,1)");
  if (!(mlp.learning_rate > 0.0)) throw std::invalid_argument("mlp.learning_rate must be positive");
  if (mlp.max_epochs == 0) throw std::invalid_argument("mlp.max_epochs must be positive");
  if (mlp.batch_size == 0 || mlp.cdc_batch_size == 0) throw std::invalid_argument("mlp batch sizes must be positive");
  if (!(mlp.disagreement_scale > 0.0)) throw std::invalid_argument("mlp.disagreement_scale must be positive");
  if (!(mlp.cdc_learning_rate >= 0.0)) throw std::invalid_argument("mlp.cdc_learning_rate must be non-negative");
  if (!(mlp.l2 >= 0.0)) throw std::invalid_argument("mlp.l2 must be non-negative");
  if (!(gbt.eta > 0.0 && gbt.eta <= 1.0)) throw std::invalid_argument("gbt.eta must be in (0,1]");
  if (gbt.max_depth < 1) throw std::invalid_argument("gbt.max_depth must be at least 1");
  if (gbt.num_rounds < 1) throw std::invalid_argument("gbt.num_rounds must be at least 1");
  if (!(gbt.subsample > 0.0 && gbt.subsample <= 1.0)) throw std::invalid_argument("gbt.subsample must be in (0,1]");
  if (!(gbt.colsample > 0.0 && gbt.colsample <= 1.0)) throw std::invalid_argument("gbt.colsample must be in (0,1]");
  if (!(gbt.min_child_weight >= 0.0)) throw std::invalid_argument("gbt.min_child_weight must be non-negative");
  if (!(gbt.reg_lambda >= 0.0)) throw std::invalid_argument("gbt.reg_lambda must be non-negative");
  if (gbt.rounds_per_epoch < 1) throw std::invalid_argument("gbt.rounds_per_epoch must be at least 1");
  if (!(gbt.disagreement_scale > 0.0)) throw std::invalid_argument("gbt.disagreement_scale must be positive");
}

std::string LearnerConfig::canonical() const {
  std::ostringstream s;
  s << "learner.kind = " << to_string(kind) << '\n';
  s << "learner.metric = " << to_string(metric) << '\n';
  if (kind == LearnerKind::kMlp) {
    s << "mlp.hidden_sizes = ";
    for (std::size_t i = 0; i < mlp.hidden_sizes.size(); ++i) s << (i ? "," : "") << mlp.hidden_sizes[i];
    s << '\n';
    s << "mlp.dropout_rate = " << fmt(mlp.dropout_rate) << '\n';
    s << "mlp.learning_rate = " << fmt(mlp.learning_rate) << '\n';
    s << "mlp.max_epochs = " << mlp.max_epochs << '\n';
    s << "mlp.batch_size = " << mlp.batch_size << '\n';
    s << "mlp.l2 = " << fmt(mlp.l2) << '\n';
    s << "mlp.patience = " << mlp.patience << '\n';
    s << "mlp.standardize = " << (mlp.standardize ? "true" : "false") << '\n';
    s << "mlp.cdc_batch_size = " << mlp.cdc_batch_size << '\n';
    s << "mlp.disagreement_scale = " << fmt(mlp.disagreement_scale) << '\n';
    s << "mlp.cdc_learning_rate = " << fmt(mlp.cdc_learning_rate) << '\n';
  } else {
    s << "gbt.eta = " << fmt(gbt.eta) << '\n';
    s << "gbt.max_depth = " << gbt.max_depth << '\n';
    s << "gbt.num_rounds = " << gbt.num_rounds << '\n';
    s << "gbt.subsample = " << fmt(gbt.subsample) << '\n';
    s << "gbt.colsample = " << fmt(gbt.colsample) << '\n';
    s << "gbt.min_child_weight = " << fmt(gbt.min_child_weight) << '\n';
    s << "gbt.reg_lambda = " << fmt(gbt.reg_lambda) << '\n';
    s << "gbt.rounds_per_epoch = " << gbt.rounds_per_epoch << '\n';
    s << "gbt.disagreement_scale = " << fmt(gbt.disagreement_scale) << '\n';
  }
  return s.str();
}

Model::Model(MlpModel m, std::uint64_t seed) : impl_(std::move(m)), seed_(seed) {}
Model::Model(GbtModel m, std::uint64_t seed) : impl_(std::move(m)), seed_(seed) {}

LearnerKind Model::kind() const {
  if (gbt() != nullptr) return LearnerKind::kGbt;
  if (mlp() != nullptr) return LearnerKind::kMlp;
  throw std::logic_error("empty model");
}

std::size_t Model::num_classes() const {
  if (const auto* m = mlp()) return m->num_classes;
  if (const auto* g = gbt()) return g->num_classes;
  return 0;
}

std::size_t Model::feature_dim() const {
  if (const auto* m = mlp()) return m->feature_dim;
  if (const auto* g = gbt()) return g->feature_dim;
  return 0;
}

void Model::predict_proba_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != feature_dim()) throw std::invalid_argument("feature dimension mismatch");
  if (out.size() != num_classes()) throw std::invalid_argument("output width mismatch");
  if (const auto* m = mlp()) {
    m->logits(x, out);
  } else if (const auto* g = gbt()) {
    g->margins(x, out);
  } else {
    throw std::logic_error("empty model");
  }
  softmax_into(out, out);
}

Vector Model::predict_proba(std::span<const double> x) const {
  Vector p(num_classes());
  predict_proba_into(x, p);
  return p;
}

Matrix Model::predict_proba(const Matrix& x) const {
  Matrix out(x.rows(), num_classes());
  for (std::size_t i = 0; i < x.rows(); ++i) predict_proba_into(x.row(i), out.row(i));
  return out;
}

std::size_t Model::predict(std::span<const double> x) const { return argmax(predict_proba(x)); }

std::vector<std::size_t> Model::predict(const Matrix& x) const {
  std::vector<std::size_t> out(x.rows());
  Vector p(num_classes());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    predict_proba_into(x.row(i), p);
    out[i] = argmax(p);
  }
  return out;
}

double accuracy(const Model& m, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("empty evaluation set");
  if (!data.has_labels()) throw std::invalid_argument("evaluation set is unlabeled");
  const std::vector<std::size_t> pred = m.predict(data.features);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == data.labels[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

double binary_auc(std::span<const double> scores, std::span<const std::size_t> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with mid-ranks for ties.
  double rank_sum = 0.0;
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += mid;
    }
    i = j;
  }
  for (std::size_t y : labels) (y == 1 ? pos : neg)++;
  if (pos == 0 || neg == 0) throw std::invalid_argument("AUC needs both classes");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double evaluate_metric(const Model& m, const Dataset& data, ValidationMetric metric) {
  if (metric == ValidationMetric::kAuc && m.num_classes() == 2 && data.has_labels()) {
    const bool both = std::find(data.labels.begin(), data.labels.end(), 0) != data.labels.end() &&
                      std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
    if (both) {
      std::vector<double> scores(data.size());
      Vector p(2);
      for (std::size_t i = 0; i < data.size(); ++i) {
        m.predict_proba_into(data.row(i), p);
        scores[i] = p[1];
      }
      return binary_auc(scores, data.labels);
    }
  }
  return accuracy(m, data);
}

double disagreement_rate(const Model& a, const Model& b, const Matrix& x) {
  if (x.rows() == 0) return 0.0;
  const std::vector<std::size_t> pa = a.predict(x), pb = b.predict(x);
  std::size_t diff = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) diff += pa[i] != pb[i];
  return static_cast<double>(diff) / static_cast<double>(pa.size());
}

namespace {

std::size_t check_training_set(const WeightedDataset& train, const Dataset& val) {
  if (train.size() == 0) throw std::invalid_argument("empty training set");
  if (train.labels.size() != train.size() || train.weights.size() != train.size()) {
    throw std::invalid_argument("training labels/weights do not match rows");
  }
  for (double w : train.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("sample weight must be positive");
  }
  std::size_t classes = std::max<std::size_t>(train.num_classes, 2);
  for (std::size_t y : train.labels) classes = std::max(classes, y + 1);
  if (train.num_classes != 0) {
    for (std::size_t y : train.labels) {
      if (y >= train.num_classes) throw std::invalid_argument("label out of range");
    }
  }
  for (std::size_t y : val.labels) classes = std::max(classes, y + 1);
  if (val.size() > 0 && val.dim() != train.dim()) throw std::invalid_argument("validation dimension mismatch");
  return classes;
}

std::vector<WeightedSample> to_samples(const Matrix& x, const std::vector<std::size_t>& y,
                                       const std::vector<double>* w, SampleMode mode) {
  std::vector<WeightedSample> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out[i].features.assign(x.row(i).begin(), x.row(i).end());
    out[i].label = y[i];
    out[i].weight = w != nullptr ? (*w)[i] : 1.0;
    out[i].mode = mode;
  }
  return out;
}

// One pass over `samples` in a fresh random order, `batch` rows per step.
void mlp_epoch(MlpModel& m, AdamState& opt, const std::vector<WeightedSample>& samples, std::size_t batch,
               RngStream& rng) {
  const std::vector<std::size_t> perm = rng.permutation(samples.size());
  std::vector<WeightedSample> chunk;
  for (std::size_t start = 0; start < perm.size(); start += batch) {
    const std::size_t end = std::min(perm.size(), start + batch);
    chunk.clear();
    for (std::size_t i = start; i < end; ++i) chunk.push_back(samples[perm[i]]);
    mlp_train_step(m, opt, chunk, 1.0, rng);
  }
}

Model fit_mlp(const LearnerConfig& cfg, const WeightedDataset& train, const Dataset& val, std::size_t classes,
              RngStream& rng) {
  RngStream init_rng = rng.split(1);
  RngStream train_rng = rng.split(2);
  MlpModel net = mlp_initialize(cfg.mlp, train.features, classes, init_rng);
  AdamState opt(net, cfg.mlp.learning_rate, cfg.mlp.l2);
  const std::vector<WeightedSample> samples = to_samples(train.features, train.labels, &train.weights, SampleMode::kAgree);

  const bool has_val = val.size() > 0 && val.has_labels();
  Model best(net, rng.base_seed());
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < cfg.mlp.max_epochs; ++epoch) {
    mlp_epoch(net, opt, samples, cfg.mlp.batch_size, train_rng);
    if (!has_val) continue;
    Model candidate(net, rng.base_seed());
    const double score = evaluate_metric(candidate, val, cfg.metric);
    if (score > best_score) {
      best_score = score;
      best = std::move(candidate);
      since_best = 0;
    } else if (++since_best >= cfg.mlp.patience) {
      break;
    }
  }
  if (!has_val) return Model(std::move(net), rng.base_seed());
  best.set_validation_score(best_score);
  return best;
}

Model fit_gbt(const LearnerConfig& cfg, const WeightedDataset& train, const Dataset& val, std::size_t classes,
              RngStream& rng) {
  GbtModel g = GbtModel::from_priors(train, classes);
  RngStream boost_rng = rng.split(1);
  gbt_boost(g, cfg.gbt, train, cfg.gbt.num_rounds, boost_rng);
  Model m(std::move(g), rng.base_seed());
  if (val.size() > 0 && val.has_labels()) m.set_validation_score(evaluate_metric(m, val, cfg.metric));
  return m;
}

}  // namespace

Model fit(const LearnerConfig& config, const WeightedDataset& train, const Dataset& val, RngStream& rng) {
  config.validate();
  const std::size_t classes = check_training_set(train, val);
  return config.kind == LearnerKind::kMlp ? fit_mlp(config, train, val, classes, rng)
                                          : fit_gbt(config, train, val, classes, rng);
}

std::size_t disagreement_batches_per_epoch(const LearnerConfig& config, std::size_t p_train_size,
                                           std::size_t q_size) {
  if (config.kind == LearnerKind::kGbt) return 1;
  const std::size_t cap = config.mlp.cdc_batch_size;
  const std::size_t fill = q_size == 0 ? cap : (cap > q_size ? cap - q_size : 1);
  return std::max<std::size_t>(1, (p_train_size + fill - 1) / fill);
}

namespace {

class MlpDisagreementTrainer : public DisagreementTrainer {
 public:
  MlpDisagreementTrainer(const LearnerConfig& cfg, const Model& base, const Dataset& p_train,
                         const Dataset& q_pseudo, double lambda, RngStream rng)
      : cfg_(cfg),
        model_(base),
        opt_(*base.mlp(), cfg.mlp.cdc_learning_rate > 0.0 ? cfg.mlp.cdc_learning_rate : cfg.mlp.learning_rate,
             cfg.mlp.l2),
        lambda_(lambda * cfg.mlp.disagreement_scale),
        rng_(rng) {
    p_ = to_samples(p_train.features, p_train.labels, nullptr, SampleMode::kAgree);
    q_ = to_samples(q_pseudo.features, q_pseudo.labels, nullptr, SampleMode::kDisagree);
  }

  void run_epoch() override {
    MlpModel& net = *model_.mutable_mlp();
    if (q_.empty()) {
      mlp_epoch(net, opt_, p_, cfg_.mlp.cdc_batch_size, rng_);
    } else {
      const std::size_t batches = disagreement_batches_per_epoch(cfg_, p_.size(), q_.size());
      const std::size_t fill = p_.empty() ? 0 : (p_.size() + batches - 1) / batches;
      const std::vector<std::size_t> perm = rng_.permutation(p_.size());
      std::vector<WeightedSample> batch;
      for (std::size_t b = 0; b < batches; ++b) {
        batch.assign(q_.begin(), q_.end());
        const std::size_t start = b * fill;
        const std::size_t end = std::min(perm.size(), start + fill);
        for (std::size_t i = start; i < end; ++i) batch.push_back(p_[perm[i]]);
        mlp_train_step(net, opt_, batch, lambda_, rng_);
      }
    }
    ++epochs_;
  }

  const Model& current() const override { return model_; }
  std::size_t epochs_completed() const override { return epochs_; }

 private:
  LearnerConfig cfg_;
  Model model_;
  AdamState opt_;
  double lambda_;
  RngStream rng_;
  std::vector<WeightedSample> p_, q_;
  std::size_t epochs_ = 0;
};

class GbtDisagreementTrainer : public DisagreementTrainer {
 public:
  GbtDisagreementTrainer(const LearnerConfig& cfg, const Model& base, const Dataset& p_train,
                         const Dataset& q_pseudo, double lambda, RngStream rng)
      : cfg_(cfg), model_(base), rng_(rng) {
    data_ = WeightedDataset::from(p_train);
    data_.num_classes = base.num_classes();
    if (data_.size() == 0) data_.features = Matrix(0, base.feature_dim());
    const double scale = lambda * cfg.gbt.disagreement_scale;
    for (std::size_t i = 0; i < q_pseudo.size(); ++i) {
      const DisagreementTarget t(q_pseudo.labels[i], base.num_classes());
      for (WeightedSample& s : replicate_for_disagreement(q_pseudo.row(i), t)) {
        data_.append(s.features, s.label, s.weight * scale);
      }
    }
    data_.num_classes = base.num_classes();
  }

  void run_epoch() override {
    gbt_boost(*model_.mutable_gbt(), cfg_.gbt, data_, cfg_.gbt.rounds_per_epoch, rng_);
    ++epochs_;
  }

  const Model& current() const override { return model_; }
  std::size_t epochs_completed() const override { return epochs_; }

 private:
  LearnerConfig cfg_;
  Model model_;
  RngStream rng_;
  WeightedDataset data_;
  std::size_t epochs_ = 0;
};

}  // namespace

std::unique_ptr<DisagreementTrainer> start_disagreeing(const LearnerConfig& config, const Model& base,
                                                       const Dataset& p_train, const Dataset& q_pseudo,
                                                       double lambda, RngStream rng) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (base.empty()) throw std::invalid_argument("base model is empty");
  if (p_train.size() > 0 && !p_train.has_labels()) throw std::invalid_argument("P_train must be labeled");
  if (q_pseudo.size() > 0 && !q_pseudo.has_labels()) throw std::invalid_argument("Q must carry pseudo-labels");
  if (p_train.size() > 0 && p_train.dim() != base.feature_dim()) throw std::invalid_argument("feature dimension mismatch");
  if (q_pseudo.size() > 0 && q_pseudo.dim() != base.feature_dim()) throw std::invalid_argument("feature dimension mismatch");
  if (p_train.size() + q_pseudo.size() == 0) throw std::invalid_argument("nothing to train on");
  for (std::size_t y : q_pseudo.labels) {
    if (y >= base.num_classes()) throw std::invalid_argument("pseudo-label out of range");
  }
  if (base.kind() == LearnerKind::kMlp) {
    return std::make_unique<MlpDisagreementTrainer>(config, base, p_train, q_pseudo, lambda, rng);
  }
  return std::make_unique<GbtDisagreementTrainer>(config, base, p_train, q_pseudo, lambda, rng);
}

Model fit_disagreeing(const LearnerConfig& config, const Model& base, const Dataset& p_train, const Dataset& p_val,
                      const Dataset& q_pseudo, double lambda, RngStream& rng, std::size_t epochs) {
  Model out = base;
  if (q_pseudo.size() > 0) {
    auto trainer = start_disagreeing(config, base, p_train, q_pseudo, lambda, rng.split(0xd15));
    for (std::size_t e = 0; e < epochs; ++e) trainer->run_epoch();
    out = trainer->current();
  } else if (!(lambda > 0.0)) {
    throw std::invalid_argument("lambda must be positive");
  }
  if (p_val.size() > 0 && p_val.has_labels()) out.set_validation_score(evaluate_metric(out, p_val, config.metric));
  return out;
}

}  // namespace shiftguard
