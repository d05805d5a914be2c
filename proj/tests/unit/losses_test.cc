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


#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "shiftguard/losses.h"
#include "shiftguard/numerics.h"
#include "shiftguard/rng.h"

namespace shiftguard {
namespace {

std::vector<double> random_logits(RngStream& rng, std::size_t n, double scale = 3.0) {
  std::vector<double> l(n);
  for (double& v : l) v = scale * rng.normal();
  return l;
}

// Central differences of a scalar function of the logits.
template <typename F>
std::vector<double> numeric_gradient(F f, std::vector<double> l, double h = 1e-5) {
  std::vector<double> g(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double keep = l[i];
    l[i] = keep + h;
    const double up = f(l);
    l[i] = keep - h;
    const double down = f(l);
    l[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

TEST(CrossEntropy, UniformBinary) {
  EXPECT_NEAR(cross_entropy(std::vector<double>{0.0, 0.0}, 1).loss, std::log(2.0), 1e-15);
}

TEST(CrossEntropy, ConfidentCorrectApproachesZero) {
  EXPECT_LT(cross_entropy(std::vector<double>{0.0, 60.0, 0.0}, 1).loss, 1e-20);
}

TEST(CrossEntropy, LabelOutOfRangeThrows) {
  EXPECT_THROW(cross_entropy(std::vector<double>{0.0, 0.0}, 2), std::invalid_argument);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  RngStream rng(1, 0);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = std::vector<std::size_t>{2, 3, 5, 10}[t % 4];
    const auto l = random_logits(rng, n);
    const std::size_t y = rng.uniform_int(n);
    const auto fd = numeric_gradient([&](const std::vector<double>& v) { return cross_entropy(v, y).loss; }, l);
    const auto g = cross_entropy(l, y).grad;
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(g[i], fd[i], 1e-6);
  }
}

TEST(Dce, OffTargetUniformGivesLogNMinusOne) {
  for (std::size_t n : {3u, 4u, 7u}) {
    std::vector<double> p(n, 1.0 / static_cast<double>(n - 1));
    p[1] = 0.0;
    EXPECT_NEAR(disagreement_cross_entropy_probs(p, 1), std::log(static_cast<double>(n - 1)), 1e-12);
  }
}

TEST(Dce, UniformGivesLogN) {
  for (std::size_t n : {2u, 3u, 10u}) {
    const std::vector<double> l(n, 0.4);
    EXPECT_NEAR(disagreement_cross_entropy(l, DisagreementTarget(0, n)).loss, std::log(static_cast<double>(n)), 1e-12);
  }
}

TEST(Dce, BinaryEqualsFlippedCrossEntropy) {
  const std::vector<double> l{2.0, -1.0};
  EXPECT_EQ(disagreement_cross_entropy(l, DisagreementTarget(0, 2)).loss, cross_entropy(l, 1).loss);
  RngStream rng(2, 0);
  for (int t = 0; t < 200; ++t) {
    const auto r = random_logits(rng, 2, 5.0);
    const std::size_t tc = rng.uniform_int(2);
    EXPECT_NEAR(disagreement_cross_entropy(r, DisagreementTarget(tc, 2)).loss, cross_entropy(r, 1 - tc).loss, 1e-14);
  }
}

TEST(Dce, LogitFormMatchesProbabilityForm) {
  RngStream rng(3, 0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.uniform_int(8);
    const auto l = random_logits(rng, n);
    const std::size_t tc = rng.uniform_int(n);
    EXPECT_NEAR(disagreement_cross_entropy(l, DisagreementTarget(tc, n)).loss,
                disagreement_cross_entropy_probs(softmax(l), tc), 1e-10);
  }
}

TEST(Dce, GradientMatchesFiniteDifferences) {
  RngStream rng(4, 0);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = std::vector<std::size_t>{2, 3, 5, 10}[t % 4];
    const auto l = random_logits(rng, n);
    const DisagreementTarget target(rng.uniform_int(n), n);
    const auto fd = numeric_gradient(
        [&](const std::vector<double>& v) { return disagreement_cross_entropy(v, target).loss; }, l);
    const auto g = disagreement_cross_entropy(l, target).grad;
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(g[i], fd[i], 1e-6);
  }
}

TEST(Dce, InvariantToPermutingNonTargetLogits) {
  RngStream rng(5, 0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + rng.uniform_int(6);
    auto l = random_logits(rng, n);
    const std::size_t tc = rng.uniform_int(n);
    const double before = disagreement_cross_entropy(l, DisagreementTarget(tc, n)).loss;
    std::vector<double> others;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != tc) others.push_back(l[i]);
    }
    std::reverse(others.begin(), others.end());
    for (std::size_t i = 0, k = 0; i < n; ++i) {
      if (i != tc) l[i] = others[k++];
    }
    EXPECT_NEAR(disagreement_cross_entropy(l, DisagreementTarget(tc, n)).loss, before, 1e-12);
  }
}

TEST(Dce, FewerThanTwoClassesThrows) {
  EXPECT_THROW(DisagreementTarget(0, 1), std::invalid_argument);
  EXPECT_THROW(disagreement_cross_entropy(std::vector<double>{1.0}, DisagreementTarget{}), std::invalid_argument);
}

TEST(LambdaWeight, ClosedForms) {
  EXPECT_DOUBLE_EQ(lambda_weight(9, 1), 0.1);
  EXPECT_DOUBLE_EQ(lambda_weight(49, 1), 0.02);
  EXPECT_DOUBLE_EQ(lambda_weight(10, 5), 1.0 / 55.0);
  for (std::size_t q : {1u, 10u, 300u}) {
    for (std::size_t b : {1u, 4u, 30u}) EXPECT_LT(lambda_weight(q, b) * static_cast<double>(q * b), 1.0);
  }
  EXPECT_THROW(lambda_weight(0, 1), std::invalid_argument);
}

struct BatchFixture {
  std::vector<std::vector<double>> logits;
  std::vector<WeightedSample> samples;
  std::vector<BatchEntry> entries() const {
    std::vector<BatchEntry> out;
    for (std::size_t i = 0; i < logits.size(); ++i) out.push_back({logits[i], &samples[i]});
    return out;
  }
};

TEST(CdcBatchLoss, AllAgreeIsMeanCrossEntropy) {
  BatchFixture b;
  b.logits = {{0.3, -1.0, 2.0}, {1.0, 1.0, 0.0}, {-2.0, 0.5, 0.1}};
  for (std::size_t y : {2u, 0u, 1u}) b.samples.push_back({{}, y, 1.0, SampleMode::kAgree});
  const double want =
      (cross_entropy(b.logits[0], 2).loss + cross_entropy(b.logits[1], 0).loss + cross_entropy(b.logits[2], 1).loss) /
      3.0;
  EXPECT_NEAR(cdc_batch_loss(b.entries(), 0.37).loss, want, 1e-15);
}

TEST(CdcBatchLoss, AllDisagreeIsMeanDce) {
  BatchFixture b;
  b.logits = {{0.3, -1.0, 2.0}, {1.0, 1.0, 0.0}};
  b.samples = {{{}, 2, 1.0, SampleMode::kDisagree}, {{}, 1, 1.0, SampleMode::kDisagree}};
  const double want = (disagreement_cross_entropy(b.logits[0], DisagreementTarget(2, 3)).loss +
                       disagreement_cross_entropy(b.logits[1], DisagreementTarget(1, 3)).loss) /
                      2.0;
  EXPECT_NEAR(cdc_batch_loss(b.entries(), 1.0).loss, want, 1e-15);
}

TEST(CdcBatchLoss, MixedBatchHandComputed) {
  BatchFixture b;
  b.logits = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}, {0.5, 0.5}};
  b.samples = {{{}, 0, 1.0, SampleMode::kAgree},
               {{}, 1, 2.0, SampleMode::kAgree},
               {{}, 1, 1.0, SampleMode::kDisagree},
               {{}, 0, 3.0, SampleMode::kDisagree}};
  const double lambda = 0.25;
  // Binary logits: CE(l, y) = log(1 + exp(l_other - l_y)).
  const double ce0 = std::log(2.0);
  const double ce1 = std::log1p(std::exp(1.0));
  const double dce2 = std::log1p(std::exp(2.0));  // target 1 -> CE against label 0
  const double dce3 = std::log(2.0);
  const double want = (1.0 * ce0 + 2.0 * ce1 + lambda * 1.0 * dce2 + lambda * 3.0 * dce3) / 4.0;
  const BatchLoss got = cdc_batch_loss(b.entries(), lambda);
  EXPECT_NEAR(got.loss, want, 1e-14);
  ASSERT_EQ(got.grads.size(), 4u);
  const Vector g1 = cross_entropy(b.logits[1], 1).grad;
  EXPECT_NEAR(got.grads[1][0], 2.0 * g1[0] / 4.0, 1e-15);
}

TEST(CdcBatchLoss, Errors) {
  EXPECT_THROW(cdc_batch_loss({}, 1.0), std::invalid_argument);
  BatchFixture b;
  b.logits = {{0.0, 0.0}};
  b.samples = {{{}, 0, 1.0, SampleMode::kAgree}};
  EXPECT_THROW(cdc_batch_loss(b.entries(), 0.0), std::invalid_argument);
}

TEST(Replication, BinaryFlipsLabel) {
  const std::vector<double> x{1.5, -2.0};
  const auto r = replicate_for_disagreement(x, DisagreementTarget(1, 2));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].label, 0u);
  EXPECT_EQ(r[0].weight, 1.0);
  EXPECT_EQ(r[0].mode, SampleMode::kAgree);
  EXPECT_EQ(r[0].features, x);
}

TEST(Replication, FourClasses) {
  const auto r = replicate_for_disagreement(std::vector<double>{0.0}, DisagreementTarget(2, 4));
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].label, 0u);
  EXPECT_EQ(r[1].label, 1u);
  EXPECT_EQ(r[2].label, 3u);
  for (const auto& s : r) EXPECT_DOUBLE_EQ(s.weight, 1.0 / 3.0);
}

TEST(Replication, WeightedCrossEntropyEqualsDce) {
  RngStream rng(6, 0);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 5;
    const auto l = random_logits(rng, n);
    const DisagreementTarget target(rng.uniform_int(n), n);
    double sum = 0.0;
    for (const auto& s : replicate_for_disagreement(std::vector<double>{}, target)) {
      sum += s.weight * cross_entropy(l, s.label).loss;
    }
    ASSERT_NEAR(sum, disagreement_cross_entropy(l, target).loss, 1e-12);
  }
}

}  // namespace
}  // namespace shiftguard
