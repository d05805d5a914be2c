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

#include "shiftguard/gbt.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shiftguard {

namespace {

constexpr double kMinHessian = 1e-16;
constexpr double kPriorFloor = 1e-6;
constexpr double kMinGain = 1e-12;

}  // namespace

double Tree::predict(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& n = nodes[i];
    i = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) {
      best = std::max(best, d[i]);
      continue;
    }
    d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
  }
  return best;
}

GbtModel GbtModel::from_priors(const WeightedDataset& train, std::size_t classes) {
  if (classes < 2) throw std::invalid_argument("need at least two classes");
  GbtModel m;
  m.num_classes = classes;
  m.feature_dim = train.dim();
  Vector freq(classes, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    freq[train.labels[i]] += train.weights[i];
    total += train.weights[i];
  }
  m.base_margin.assign(classes, 0.0);
  for (double& f : freq) f = std::clamp(total > 0 ? f / total : 1.0 / classes, kPriorFloor, 1.0 - kPriorFloor);
  if (classes == 2) {
    m.base_margin[1] = std::log(freq[1] / freq[0]);
  } else {
    for (std::size_t c = 0; c < classes; ++c) m.base_margin[c] = std::log(freq[c]);
  }
  return m;
}

void GbtModel::margins(std::span<const double> x, std::span<double> out) const {
  if (x.size() != feature_dim) throw std::invalid_argument("feature dimension mismatch");
  std::copy(base_margin.begin(), base_margin.end(), out.begin());
  for (const Tree& t : trees) out[t.output] += t.predict(x);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const GbtConfig& cfg, const Matrix& x, const std::vector<double>& g, const std::vector<double>& h,
              std::vector<std::size_t> features)
      : cfg_(cfg), x_(x), g_(g), h_(h), features_(std::move(features)) {}

  Tree build(std::vector<std::size_t> rows, std::size_t output) {
    tree_.output = output;
    tree_.nodes.clear();
    tree_.nodes.emplace_back();
    grow(0, std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  double leaf_weight(double gs, double hs) const { return -gs / (hs + cfg_.reg_lambda); }
  double score(double gs, double hs) const { return gs * gs / (hs + cfg_.reg_lambda); }

  void grow(std::size_t node, std::vector<std::size_t> rows, std::size_t depth) {
    double gs = 0.0, hs = 0.0;
    for (std::size_t r : rows) {
      gs += g_[r];
      hs += h_[r];
    }
    tree_.nodes[node].value = cfg_.eta * leaf_weight(gs, hs);
    if (depth >= cfg_.max_depth || rows.size() < 2) return;

    const double parent = score(gs, hs);
    double best_gain = kMinGain;
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = rows;
    for (std::size_t f : features_) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        gl += g_[sorted[i]];
        hl += h_[sorted[i]];
        const double v = x_(sorted[i], f), next = x_(sorted[i + 1], f);
        if (!(v < next)) continue;
        const double hr = hs - hl;
        if (hl < cfg_.min_child_weight || hr < cfg_.min_child_weight) continue;
        const double gain = score(gl, hl) + score(gs - gl, hr) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<std::int32_t>(f);
          best_threshold = v + 0.5 * (next - v);
          if (!(best_threshold > v)) best_threshold = next;
        }
      }
    }
    if (best_feature < 0) return;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_(r, best_feature) < best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const auto li = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();
    TreeNode& n = tree_.nodes[node];
    n.feature = best_feature;
    n.threshold = best_threshold;
    n.left = li;
    n.right = li + 1;
    grow(li, std::move(left), depth + 1);
    grow(li + 1, std::move(right), depth + 1);
  }

  const GbtConfig& cfg_;
  const Matrix& x_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  std::vector<std::size_t> features_;
  Tree tree_;
};

}  // namespace

void gbt_boost(GbtModel& model, const GbtConfig& cfg, const WeightedDataset& train, std::size_t rounds,
               RngStream& rng) {
  const std::size_t n = train.size();
  const std::size_t k = model.num_classes;
  if (n == 0) throw std::invalid_argument("empty training set");
  if (train.dim() != model.feature_dim) throw std::invalid_argument("feature dimension mismatch");

  Matrix margin(n, k);
  for (std::size_t i = 0; i < n; ++i) model.margins(train.features.row(i), margin.row(i));

  const std::size_t d = train.dim();
  const std::size_t n_features = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.colsample * static_cast<double>(d))), 1, d);
  std::vector<double> g(n), h(n);
  Matrix prob(n, k);
  const bool binary = k == 2;

  for (std::size_t round = 0; round < rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) softmax_into(margin.row(i), prob.row(i));
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (cfg.subsample >= 1.0 || rng.uniform() < cfg.subsample) rows.push_back(i);
    }
    const std::size_t first_class = binary ? 1 : 0;
    for (std::size_t c = first_class; c < k; ++c) {
      std::vector<std::size_t> feats = rng.sample_without_replacement(d, n_features);
      std::sort(feats.begin(), feats.end());
      for (std::size_t i = 0; i < n; ++i) {
        const double p = prob(i, c);
        const double y = train.labels[i] == c ? 1.0 : 0.0;
        const double w = train.weights[i];
        g[i] = w * (p - y);
        h[i] = w * std::max((binary ? 1.0 : 2.0) * p * (1.0 - p), kMinHessian);
      }
      Tree tree;
      if (rows.empty()) {
        tree.output = c;
        tree.nodes.emplace_back();
      } else {
        tree = TreeBuilder(cfg, train.features, g, h, std::move(feats)).build(rows, c);
      }
      for (std::size_t i = 0; i < n; ++i) margin(i, c) += tree.predict(train.features.row(i));
      model.trees.push_back(std::move(tree));
    }
  }
}

double gbt_weighted_loss(const GbtModel& model, const WeightedDataset& data) {
  Vector m(model.num_classes);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.margins(data.features.row(i), m);
    total += data.weights[i] * (log_sum_exp(m) - m[data.labels[i]]);
  }
  return total;
}

}  // namespace shiftguard
