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


#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "shiftguard/cdc.h"
#include "shiftguard/detectron.h"
#include "shiftguard/losses.h"
#include "tasks.h"

namespace shiftguard {
namespace {

class GaussTask : public ::testing::Test {
 protected:
  static const ExperimentSetup& s() { return testing::gauss_setup(); }
  static Dataset draw(const Dataset& from, std::size_t n, RngStream& rng) { return testing::draw(from, n, rng); }
};

TEST_F(GaussTask, PseudoLabelsArePredictions) {
  RngStream rng(1, 0);
  const Dataset q = draw(s().parts.holdout, 30, rng);
  const Dataset pl = pseudo_label(s().base, q);
  EXPECT_EQ(pl.labels, s().base.predict(q.features));
  EXPECT_EQ(pl.features, q.features);
  EXPECT_EQ(pl.num_classes, 2u);
}

TEST_F(GaussTask, FullToleranceRunsEveryEpoch) {
  CdcTrainSpec spec;
  spec.val_tolerance = 1.0;
  spec.max_epochs_per_cdc = 4;
  RngStream rng(2, 0);
  const Dataset q = pseudo_label(s().base, draw(s().target_pool, 20, rng));
  RngStream a(3, 0);
  const Model g = train_cdc(s().learner, s().parts.train, s().parts.val, q, s().base, spec, a);
  const double lambda = lambda_weight(q.size(), disagreement_batches_per_epoch(s().learner, s().parts.train.size(), q.size()));
  auto manual = start_disagreeing(s().learner, s().base, s().parts.train, q, lambda, RngStream(3, 0).split(0xcdc));
  for (int e = 0; e < 4; ++e) manual->run_epoch();
  EXPECT_EQ(g.gbt()->trees.size(), manual->current().gbt()->trees.size());
  const Matrix x = s().parts.holdout.features;
  EXPECT_EQ(g.predict_proba(x), manual->current().predict_proba(x));
}

TEST_F(GaussTask, NullCdcKeepsValidationMetric) {
  const CdcTrainSpec spec;
  const double m0 = s().base.validation_score();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RngStream rng(seed, 4);
    const Dataset q = pseudo_label(s().base, draw(s().parts.holdout, 20, rng));
    const Model g = train_cdc(s().learner, s().parts.train, s().parts.val, q, s().base, spec, rng);
    EXPECT_GE(accuracy(g, s().parts.val), m0 - spec.val_tolerance);
  }
}

TEST_F(GaussTask, MissingBaseMetricIsAnError) {
  Model f = s().base;
  f.set_validation_score(std::nan(""));
  RngStream rng(5, 0);
  const Dataset q = pseudo_label(f, draw(s().target_pool, 10, rng));
  EXPECT_THROW(train_cdc(s().learner, s().parts.train, s().parts.val, q, f, CdcTrainSpec{}, rng), std::invalid_argument);
}

TEST_F(GaussTask, ShiftedTargetIsDisagreedOnMore) {
  const CdcTrainSpec spec;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed, 6);
    const Dataset q = pseudo_label(s().base, draw(s().target_pool, 20, rng));
    const Dataset p = pseudo_label(s().base, draw(s().parts.holdout, 20, rng));
    RngStream rq = rng.split(1), rp = rng.split(1);
    const Model gq = train_cdc(s().learner, s().parts.train, s().parts.val, q, s().base, spec, rq);
    const Model gp = train_cdc(s().learner, s().parts.train, s().parts.val, p, s().base, spec, rp);
    wins += disagreement_rate(s().base, gq, q.features) > disagreement_rate(s().base, gp, p.features);
  }
  EXPECT_GE(wins, 18);
}

void check_ensemble(const CdcEnsemble& e, const ExperimentSetup& s, std::size_t n) {
  ASSERT_FALSE(e.members.empty());
  ASSERT_EQ(e.per_round_phi.size(), e.members.size());
  EXPECT_LE(e.members.size(), s.cdc.ensemble_max);
  for (std::size_t r = 1; r < e.per_round_phi.size(); ++r) EXPECT_GE(e.per_round_phi[r], e.per_round_phi[r - 1]);
  EXPECT_DOUBLE_EQ(e.phi(), 1.0 - static_cast<double>(e.surviving_indices.size()) / static_cast<double>(n));
  EXPECT_EQ(e.target_size, n);
  if (e.members.size() < s.cdc.ensemble_max) EXPECT_TRUE(e.surviving_indices.empty());
  for (const Model& g : e.members) {
    EXPECT_GE(accuracy(g, s.parts.val), s.base.validation_score() - s.cdc.val_tolerance);
  }
}

TEST_F(GaussTask, EnsembleInvariants) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    RngStream rng(seed, 7);
    const bool shifted = seed % 2 == 0;
    const Dataset t = draw(shifted ? s().target_pool : s().parts.holdout, 50, rng);
    const CdcEnsemble e = build_ensemble(s().learner, s().parts.train, s().parts.val, t, s().base, s().cdc, rng);
    check_ensemble(e, s(), 50);
    // Survivors are exactly the rows every member still agrees on.
    const auto f = s().base.predict(t.features);
    std::vector<std::size_t> agreed;
    for (std::size_t i = 0; i < t.size(); ++i) {
      bool all = true;
      for (const Model& g : e.members) all = all && g.predict(t.row(i)) == f[i];
      if (all) agreed.push_back(i);
    }
    EXPECT_EQ(agreed, e.surviving_indices);
  }
}

TEST_F(GaussTask, EmptyTargetIsAnError) {
  RngStream rng(8, 0);
  Dataset empty;
  empty.features = Matrix(0, s().parts.train.dim());
  EXPECT_THROW(build_ensemble(s().learner, s().parts.train, s().parts.val, empty, s().base, s().cdc, rng),
               std::invalid_argument);
}

TEST_F(GaussTask, NullShiftSeparation) {
  double sum_q = 0.0, sum_p = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed, 9);
    const Dataset q = draw(s().target_pool, 50, rng);
    const Dataset p = draw(s().parts.holdout, 50, rng);
    RngStream rq = rng.split(1), rp = rng.split(1);
    sum_q += build_ensemble(s().learner, s().parts.train, s().parts.val, q, s().base, s().cdc, rq).phi();
    sum_p += build_ensemble(s().learner, s().parts.train, s().parts.val, p, s().base, s().cdc, rp).phi();
  }
  EXPECT_GE((sum_q - sum_p) / 20.0, 0.2);
}

TEST_F(GaussTask, EnsembleRoundTrip) {
  RngStream rng(10, 0);
  const Dataset q = draw(s().target_pool, 20, rng);
  const CdcEnsemble e = build_ensemble(s().learner, s().parts.train, s().parts.val, q, s().base, s().cdc, rng);
  std::stringstream buf;
  write_ensemble(buf, e);
  const CdcEnsemble back = read_ensemble(buf);
  EXPECT_EQ(back.per_round_phi, e.per_round_phi);
  EXPECT_EQ(back.surviving_indices, e.surviving_indices);
  EXPECT_EQ(back.members.size(), e.members.size());
  EXPECT_EQ(cdc_entropies(back, q.features), cdc_entropies(e, q.features));
}

// A two-class network whose output ignores its input.
Model constant_model(double logit0, double logit1) {
  const std::size_t hidden[] = {1};
  MlpModel m = MlpModel::zeros(2, 2, hidden);
  m.biases.back() = {logit0, logit1};
  return Model(std::move(m));
}

TEST(CdcEntropy, HandComputedMixtures) {
  const double x[2] = {0.3, -0.2};
  CdcEnsemble e;
  e.base = constant_model(1000.0, -1000.0);
  e.members.push_back(constant_model(1000.0, -1000.0));
  EXPECT_EQ(cdc_entropy(e, x), 0.0);
  e.members.back() = constant_model(-1000.0, 1000.0);
  EXPECT_NEAR(cdc_entropy(e, x), std::log(2.0), 1e-15);
  e.members.push_back(constant_model(-1000.0, 1000.0));
  const double p = 1.0 / 3.0;
  EXPECT_NEAR(cdc_entropy(e, x), -(p * std::log(p) + (1 - p) * std::log(1 - p)), 1e-15);
}

TEST(CdcEntropy, BoundedByLogClasses) {
  RngStream rng(11, 0);
  const std::size_t hidden[] = {4};
  CdcEnsemble e;
  auto random_model = [&] {
    MlpModel m = MlpModel::zeros(3, 4, hidden);
    for (auto& w : m.weights) {
      for (double& v : w.data()) v = 3.0 * rng.normal();
    }
    return Model(std::move(m));
  };
  e.base = random_model();
  for (int i = 0; i < 3; ++i) e.members.push_back(random_model());
  for (int i = 0; i < 1000; ++i) {
    const double x[3] = {rng.normal(), rng.normal(), rng.normal()};
    const double h = cdc_entropy(e, x);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(4.0) + 1e-12);
  }
}

TEST(CdcSpec, Validation) {
  CdcTrainSpec s;
  EXPECT_NO_THROW(s.validate());
  s.ensemble_max = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.val_tolerance = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.max_epochs_per_cdc = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace shiftguard
