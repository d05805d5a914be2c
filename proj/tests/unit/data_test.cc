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
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "shiftguard/dataset.h"
#include "shiftguard/learners.h"
#include "shiftguard/stats.h"

namespace shiftguard {
namespace {

const std::filesystem::path kFixtures = SHIFTGUARD_FIXTURE_DIR;

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(LoadCsv, SmallFixtureIsExact) {
  const Dataset d = load_csv(kFixtures / "small.csv");
  ASSERT_EQ(d.size(), 3u);
  ASSERT_EQ(d.dim(), 2u);
  const std::vector<double> want{1.5, 2.0, -3.0, 40.0, 0.0, 0.25};
  EXPECT_EQ(d.features.data(), want);
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_EQ(d.num_classes, 2u);
}

TEST(LoadCsv, FingerprintIsStable) {
  const Dataset a = load_csv(kFixtures / "small.csv");
  const Dataset b = load_csv(kFixtures / "small.csv");
  EXPECT_EQ(a.fingerprint, b.fingerprint);
  EXPECT_NE(a.fingerprint, load_csv(kFixtures / "missing.csv", {.missing = MissingPolicy::kMedianImpute}).fingerprint);
}

TEST(LoadCsv, MissingCellIsAnErrorByDefault) {
  const std::string msg = error_of([] { load_csv(kFixtures / "missing.csv"); });
  EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 'b'"), std::string::npos) << msg;
}

TEST(LoadCsv, MedianImputeUsesTrainingRowsOnly) {
  CsvSchema schema;
  schema.missing = MissingPolicy::kMedianImpute;
  schema.impute_fit_rows = {0, 1, 2};
  const Dataset d = load_csv(kFixtures / "missing.csv", schema);
  EXPECT_EQ(d.features(1, 1), 20.0);
  EXPECT_EQ(d.features(3, 1), 20.0);
  schema.impute_fit_rows = {};
  const Dataset all = load_csv(kFixtures / "missing.csv", schema);
  EXPECT_EQ(all.features(1, 1), 20.0);
}

TEST(LoadCsv, UnparseableCellNamesRowAndColumn) {
  const std::string msg = error_of([] { load_csv(kFixtures / "bad_cell.csv"); });
  EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
}

TEST(LoadCsv, LabelRequirement) {
  const Dataset d = load_csv(kFixtures / "unlabeled.csv");
  EXPECT_FALSE(d.has_labels());
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_THROW(load_csv(kFixtures / "unlabeled.csv", {.require_label = true}), std::runtime_error);
  EXPECT_THROW(load_csv(kFixtures / "nope.csv"), std::runtime_error);
}

TEST(SaveCsv, RoundTrip) {
  const Dataset d = load_csv(kFixtures / "small.csv");
  const auto path = std::filesystem::temp_directory_path() / "shiftguard_roundtrip.csv";
  save_csv(d, path, {"a", "b"});
  const Dataset back = load_csv(path);
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  std::filesystem::remove(path);
}

Dataset labeled_rows(const std::vector<std::size_t>& per_class) {
  Dataset d;
  d.features = Matrix(0, 1);
  double id = 0.0;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      const double v = id++;
      d.features.append_row(std::span<const double>(&v, 1));
      d.labels.push_back(c);
    }
  }
  d.num_classes = per_class.size();
  d.refresh_fingerprint();
  return d;
}

TEST(Partition, SizesFollowFractions) {
  const Dataset d = labeled_rows({50, 50});
  RngStream rng(1, 0);
  const Partition p = partition(d, {0.7, 0.1, 0.2}, rng);
  EXPECT_EQ(p.train.size(), 70u);
  EXPECT_EQ(p.val.size(), 10u);
  EXPECT_EQ(p.holdout.size(), 20u);
}

TEST(Partition, DisjointAndExhaustive) {
  const Dataset d = labeled_rows({31, 45, 24});
  RngStream rng(2, 0);
  const Partition p = partition(d, {}, rng);
  std::vector<std::size_t> all;
  for (const auto* rows : {&p.train_rows, &p.val_rows, &p.holdout_rows}) all.insert(all.end(), rows->begin(), rows->end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> want(d.size());
  std::iota(want.begin(), want.end(), 0u);
  EXPECT_EQ(all, want);
  for (std::size_t i = 0; i < p.train.size(); ++i) EXPECT_EQ(p.train.row(i)[0], d.row(p.train_rows[i])[0]);
}

TEST(Partition, StratifiedWithinOneSample) {
  const std::vector<std::size_t> counts{31, 45, 24};
  const Dataset d = labeled_rows(counts);
  const PartitionFractions f{0.6, 0.2, 0.2};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed, 0);
    const Partition p = partition(d, f, rng);
    for (const auto& [part, frac] : {std::pair{&p.train, f.train}, {&p.val, f.val}, {&p.holdout, f.holdout}}) {
      for (std::size_t c = 0; c < counts.size(); ++c) {
        const auto got = std::count(part->labels.begin(), part->labels.end(), c);
        const double want = frac * static_cast<double>(counts[c]);
        EXPECT_LE(std::abs(static_cast<double>(got) - want), 1.0) << "class " << c << " seed " << seed;
      }
    }
  }
}

TEST(Partition, DeterministicGivenSeed) {
  const Dataset d = labeled_rows({40, 40});
  RngStream a(3, 0), b(3, 0), c(4, 0);
  EXPECT_EQ(partition(d, {}, a).train_rows, partition(d, {}, b).train_rows);
  EXPECT_NE(partition(d, {}, a).train_rows, partition(d, {}, c).train_rows);
}

TEST(Partition, Errors) {
  RngStream rng(5, 0);
  EXPECT_THROW(partition(labeled_rows({10, 2}), {}, rng), std::invalid_argument);
  EXPECT_THROW(partition(labeled_rows({10, 10}), {0.5, 0.5, 0.0}, rng), std::invalid_argument);
  EXPECT_THROW(partition(labeled_rows({10, 10}), {0.5, 0.3, 0.3}, rng), std::invalid_argument);
}

ShiftTaskSpec spec_of(ShiftGenerator g, std::map<std::string, double> params, std::uint64_t seed = 1) {
  ShiftTaskSpec s;
  s.generator = g;
  s.params = std::move(params);
  s.seed = seed;
  return s;
}

TEST(Synth, Deterministic) {
  for (auto g : {ShiftGenerator::kNullResample, ShiftGenerator::kGaussMeanShift, ShiftGenerator::kBoundaryRotation}) {
    const auto s = spec_of(g, g == ShiftGenerator::kGaussMeanShift ? std::map<std::string, double>{{"delta", 3.0}}
                              : g == ShiftGenerator::kBoundaryRotation ? std::map<std::string, double>{{"theta", 0.5}}
                                                                       : std::map<std::string, double>{});
    const SynthTask a = synth_generate(s), b = synth_generate(s);
    EXPECT_EQ(a.source.features, b.source.features);
    EXPECT_EQ(a.source.labels, b.source.labels);
    EXPECT_EQ(a.target.features, b.target.features);
    EXPECT_EQ(a.target.fingerprint, b.target.fingerprint);
    EXPECT_FALSE(a.target.has_labels());
    EXPECT_EQ(a.target_labels.size(), a.target.size());
  }
}

std::vector<double> column(const Dataset& d, std::size_t c) {
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d.features(i, c);
  return out;
}

TEST(Synth, NullTargetMatchesFreshSourceDraws) {
  ShiftTaskSpec s = spec_of(ShiftGenerator::kNullResample, {}, 11);
  s.n_source = s.n_target = 10000;
  const SynthTask a = synth_generate(s);
  s.seed = 12;
  const SynthTask fresh = synth_generate(s);
  EXPECT_FALSE(a.target_is_shifted);
  for (std::size_t c = 0; c < a.target.dim(); ++c) {
    EXPECT_GT(ks_two_sample(column(a.target, c), column(fresh.source, c)).p_value, 0.01) << "feature " << c;
  }
}

TEST(Synth, ZeroRotationBehavesLikeNull) {
  ShiftTaskSpec s = spec_of(ShiftGenerator::kBoundaryRotation, {{"theta", 0.0}}, 21);
  s.n_source = s.n_target = 5000;
  const SynthTask a = synth_generate(s);
  EXPECT_FALSE(a.target_is_shifted);
  for (std::size_t c = 0; c < a.target.dim(); ++c) {
    EXPECT_GT(ks_two_sample(column(a.target, c), column(a.source, c)).p_value, 0.01);
  }
}

TEST(Synth, ParameterValidation) {
  EXPECT_THROW(synth_generate(spec_of(ShiftGenerator::kNullResample, {{"delta", 1.0}})), std::invalid_argument);
  EXPECT_THROW(synth_generate(spec_of(ShiftGenerator::kGaussMeanShift, {})), std::invalid_argument);
  EXPECT_THROW(synth_generate(spec_of(ShiftGenerator::kGaussMeanShift, {{"delta", -1.0}})), std::invalid_argument);
  EXPECT_THROW(synth_generate(spec_of(ShiftGenerator::kBoundaryRotation, {})), std::invalid_argument);
  EXPECT_THROW(synth_generate(spec_of(ShiftGenerator::kNullResample, {{"label_noise", 0.5}})), std::invalid_argument);
  EXPECT_THROW(shift_generator_from_string("mnist"), std::invalid_argument);
}

TEST(Synth, GaussShiftMovesOnlyTheOrthogonalAxis) {
  ShiftTaskSpec s = spec_of(ShiftGenerator::kGaussMeanShift, {{"delta", 10.0}}, 31);
  s.n_source = s.n_target = 4000;
  const SynthTask t = synth_generate(s);
  EXPECT_TRUE(t.target_is_shifted);
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  EXPECT_NEAR(mean(column(t.target, 1)) - mean(column(t.source, 1)), 10.0, 0.15);
  EXPECT_NEAR(mean(column(t.target, 0)) - mean(column(t.source, 0)), 0.0, 0.15);
}

double base_accuracy_drop(const ShiftTaskSpec& spec) {
  const SynthTask t = synth_generate(spec);
  RngStream rng(spec.seed, 99);
  const Partition p = partition(t.source, {}, rng);
  RngStream fit_rng = rng.split(1);
  const Model f = fit(LearnerConfig{}, WeightedDataset::from(p.train), p.val, fit_rng);
  Dataset target = t.target;
  target.labels = t.target_labels;
  target.num_classes = 2;
  return accuracy(f, p.holdout) - accuracy(f, target);
}

TEST(Synth, ShippedShiftsAreHarmful) {
  ShiftTaskSpec gauss = spec_of(ShiftGenerator::kGaussMeanShift, {{"delta", 10.0}}, 41);
  gauss.n_source = 2000;
  EXPECT_GE(base_accuracy_drop(gauss), 0.2);
  ShiftTaskSpec moons = spec_of(ShiftGenerator::kBoundaryRotation, {{"theta", 1.0}}, 42);
  moons.n_source = 2000;
  EXPECT_GE(base_accuracy_drop(moons), 0.15);
}

TEST(Uci, PrepareFixture) {
  const UciTask t = uci_prepare(kFixtures / "uci");
  ASSERT_EQ(t.source.size(), 9u);
  ASSERT_EQ(t.target.size(), 5u);
  EXPECT_LE(t.source.size() + t.target.size(), 920u);
  EXPECT_EQ(t.feature_names,
            (std::vector<std::string>{"age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang"}));
  EXPECT_EQ(t.source.dim(), 9u);
  EXPECT_EQ(t.source.labels, (std::vector<std::size_t>{0, 1, 1, 0, 0, 0, 0, 0, 1}));
  EXPECT_EQ(t.target.labels, (std::vector<std::size_t>{1, 1, 1, 1, 0}));
  // Source rows keep their order: Cleveland first, then Hungary.
  EXPECT_EQ(t.source.features(0, 0), 63.0);
  EXPECT_EQ(t.source.features(5, 0), 28.0);
  // Missing cholesterol (and zero placeholders) take the source median (233 + 237) / 2.
  EXPECT_EQ(t.source.features(8, 4), 235.0);
  EXPECT_EQ(t.target.features(0, 4), 235.0);
  EXPECT_EQ(t.target.features(2, 3), 130.0);
  EXPECT_EQ(t.target.features(1, 6), 2.0);
  EXPECT_EQ(t.target.features(0, 5), 0.0);
  for (double v : t.target.features.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Uci, MissingFilesAreListed) {
  const auto dir = std::filesystem::temp_directory_path() / "shiftguard_uci_partial";
  std::filesystem::create_directories(dir);
  std::filesystem::copy_file(kFixtures / "uci" / "processed.va.data", dir / "processed.va.data",
                             std::filesystem::copy_options::overwrite_existing);
  const std::string msg = error_of([&] { uci_prepare(dir); });
  EXPECT_NE(msg.find("processed.cleveland.data"), std::string::npos);
  EXPECT_NE(msg.find("processed.switzerland.data"), std::string::npos);
  EXPECT_EQ(msg.find("processed.va.data"), std::string::npos);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace shiftguard
