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

#include "shiftguard/mlp.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shiftguard {

MlpModel MlpModel::zeros(std::size_t dim, std::size_t classes, std::span<const std::size_t> hidden) {
  MlpModel m;
  m.feature_dim = dim;
  m.num_classes = classes;
  std::size_t in = dim;
  for (std::size_t h : hidden) {
    m.weights.emplace_back(h, in, 0.0);
    m.biases.emplace_back(h, 0.0);
    in = h;
  }
  m.weights.emplace_back(classes, in, 0.0);
  m.biases.emplace_back(classes, 0.0);
  return m;
}

void MlpModel::logits(std::span<const double> x, std::span<double> out) const {
  if (x.size() != feature_dim) throw std::invalid_argument("feature dimension mismatch");
  Vector cur(x.size());
  input.apply(x, cur);
  Vector next;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    next.assign(weights[l].rows(), 0.0);
    affine(weights[l], biases[l], cur, next);
    if (l + 1 < weights.size()) {
      for (double& v : next) v = std::max(v, 0.0);
    }
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].data().size() + biases[l].size();
  return n;
}

MlpGradient::MlpGradient(const MlpModel& shape) {
  for (std::size_t l = 0; l < shape.weights.size(); ++l) {
    dw.emplace_back(shape.weights[l].rows(), shape.weights[l].cols(), 0.0);
    db.emplace_back(shape.biases[l].size(), 0.0);
  }
}

void MlpGradient::zero() {
  for (Matrix& m : dw) m.fill(0.0);
  for (Vector& v : db) std::fill(v.begin(), v.end(), 0.0);
}

namespace {

struct SampleTrace {
  // acts[0] is the standardized input; acts[l+1] the (masked) output of layer l.
  std::vector<Vector> acts;
  std::vector<Vector> gates;  // per hidden layer: 0 where ReLU or dropout zeroed, else the dropout scale
};

void forward_trace(const MlpModel& m, std::span<const double> x, RngStream* dropout_rng, SampleTrace& t) {
  const std::size_t layers = m.weights.size();
  t.acts.resize(layers + 1);
  t.gates.resize(layers - 1);
  t.acts[0].resize(x.size());
  m.input.apply(x, t.acts[0]);
  const double keep = 1.0 - m.dropout_rate;
  for (std::size_t l = 0; l < layers; ++l) {
    Vector& out = t.acts[l + 1];
    out.assign(m.weights[l].rows(), 0.0);
    affine(m.weights[l], m.biases[l], t.acts[l], out);
    if (l + 1 == layers) break;
    Vector& gate = t.gates[l];
    gate.resize(out.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      double g = out[j] > 0.0 ? 1.0 : 0.0;
      if (dropout_rng != nullptr && m.dropout_rate > 0.0) {
        g = dropout_rng->uniform() < keep ? g / keep : 0.0;
      }
      gate[j] = g;
      out[j] = out[j] > 0.0 ? out[j] * g : 0.0;
    }
  }
}

void backward_trace(const MlpModel& m, const SampleTrace& t, std::span<const double> dlogits, MlpGradient& g) {
  Vector delta(dlogits.begin(), dlogits.end());
  Vector prev;
  for (std::size_t l = m.weights.size(); l-- > 0;) {
    const Vector& in = t.acts[l];
    Matrix& dw = g.dw[l];
    for (std::size_t r = 0; r < delta.size(); ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      g.db[l][r] += d;
      auto row = dw.row(r);
      for (std::size_t c = 0; c < in.size(); ++c) row[c] += d * in[c];
    }
    if (l == 0) break;
    prev.assign(in.size(), 0.0);
    transposed_multiply(m.weights[l], delta, prev);
    const Vector& gate = t.gates[l - 1];
    for (std::size_t j = 0; j < prev.size(); ++j) prev[j] *= gate[j];
    delta.swap(prev);
  }
}

double batch_pass(const MlpModel& m, std::span<const WeightedSample> batch, double lambda, MlpGradient* grad,
                  RngStream* dropout_rng) {
  std::vector<SampleTrace> traces(batch.size());
  std::vector<BatchEntry> entries(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].features.size() != m.feature_dim) throw std::invalid_argument("feature dimension mismatch");
    forward_trace(m, batch[i].features, dropout_rng, traces[i]);
    entries[i].logits = traces[i].acts.back();
    entries[i].sample = &batch[i];
  }
  const BatchLoss loss = cdc_batch_loss(entries, lambda);
  if (grad != nullptr) {
    for (std::size_t i = 0; i < batch.size(); ++i) backward_trace(m, traces[i], loss.grads[i], *grad);
  }
  return loss.loss;
}

}  // namespace

double mlp_batch_objective(const MlpModel& m, std::span<const WeightedSample> batch, double lambda,
                           MlpGradient* grad) {
  return batch_pass(m, batch, lambda, grad, nullptr);
}

AdamState::AdamState(const MlpModel& shape, double learning_rate, double l2)
    : lr_(learning_rate), l2_(l2), m1_(shape), m2_(shape) {}

void AdamState::step(MlpModel& m, const MlpGradient& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](std::span<double> p, std::span<const double> gp, std::span<double> a, std::span<double> b,
                    bool decay) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = gp[i] + (decay ? l2_ * p[i] : 0.0);
      a[i] = beta1_ * a[i] + (1.0 - beta1_) * gi;
      b[i] = beta2_ * b[i] + (1.0 - beta2_) * gi * gi;
      p[i] -= lr_ * (a[i] / c1) / (std::sqrt(b[i] / c2) + eps_);
    }
  };
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    update(m.weights[l].data(), g.dw[l].data(), m1_.dw[l].data(), m2_.dw[l].data(), true);
    update(m.biases[l], g.db[l], m1_.db[l], m2_.db[l], false);
  }
}

double mlp_train_step(MlpModel& m, AdamState& opt, std::span<const WeightedSample> batch, double lambda,
                      RngStream& rng) {
  MlpGradient g(m);
  const double loss = batch_pass(m, batch, lambda, &g, &rng);
  opt.step(m, g);
  return loss;
}

MlpModel mlp_initialize(const MlpConfig& cfg, const Matrix& train_x, std::size_t classes, RngStream& rng) {
  MlpModel m = MlpModel::zeros(train_x.cols(), classes, cfg.hidden_sizes);
  m.dropout_rate = cfg.dropout_rate;
  if (cfg.standardize) m.input = Standardizer::fit(train_x);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    Matrix& w = m.weights[l];
    const double fan_in = static_cast<double>(w.cols());
    const double fan_out = static_cast<double>(w.rows());
    // He-uniform for ReLU layers, Glorot-uniform for the output layer.
    const double limit = l + 1 < m.weights.size() ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w.data()) v = limit * (2.0 * rng.uniform() - 1.0);
  }
  return m;
}

}  // namespace shiftguard
