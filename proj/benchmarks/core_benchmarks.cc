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


#include <benchmark/benchmark.h>

#include <vector>

#include "shiftguard/cdc.h"
#include "shiftguard/dataset.h"
#include "shiftguard/learners.h"
#include "shiftguard/stats.h"

namespace shiftguard {
namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, double shift = 0.0) {
  RngStream rng(seed, 0);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal() + shift;
  return v;
}

void BM_KsTwoSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  const std::vector<double> a = normals(n, 1), b = normals(m, 2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(ks_two_sample(a, b));
}
// Exact below n*m = 10000, asymptotic above.
BENCHMARK(BM_KsTwoSample)->Args({20, 20})->Args({50, 200})->Args({20, 1980})->Args({1000, 1000});

void BM_BinomialUpperTail(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(binomial_upper_tail(n / 3, n, 0.2));
}
BENCHMARK(BM_BinomialUpperTail)->Arg(30)->Arg(1000)->Arg(100000);

void BM_PosteriorProbShift(benchmark::State& state) {
  const auto M = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(posterior_prob_shift({M / 10, M, M / 2, M}));
}
BENCHMARK(BM_PosteriorProbShift)->Arg(10)->Arg(50)->Arg(200);

struct Task {
  Partition parts;
  Dataset target;
};

const Task& task() {
  static const Task t = [] {
    ShiftTaskSpec spec;
    spec.generator = ShiftGenerator::kGaussMeanShift;
    spec.params = {{"delta", 10.0}};
    spec.n_source = 2000;
    spec.n_target = 500;
    spec.seed = 3;
    SynthTask s = synth_generate(spec);
    RngStream rng(3, 1);
    return Task{partition(s.source, {}, rng), s.target};
  }();
  return t;
}

void BM_FitGbt(benchmark::State& state) {
  LearnerConfig c;
  c.gbt.num_rounds = static_cast<std::size_t>(state.range(0));
  const WeightedDataset train = WeightedDataset::from(task().parts.train);
  for (auto _ : state) {
    RngStream rng(4, 0);
    benchmark::DoNotOptimize(fit(c, train, task().parts.val, rng));
  }
}
BENCHMARK(BM_FitGbt)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_FitMlp(benchmark::State& state) {
  LearnerConfig c;
  c.kind = LearnerKind::kMlp;
  c.mlp.max_epochs = static_cast<std::size_t>(state.range(0));
  const WeightedDataset train = WeightedDataset::from(task().parts.train);
  for (auto _ : state) {
    RngStream rng(4, 0);
    benchmark::DoNotOptimize(fit(c, train, task().parts.val, rng));
  }
}
BENCHMARK(BM_FitMlp)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_BuildEnsemble(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  LearnerConfig c;
  RngStream fit_rng(4, 0);
  const Model base = fit(c, WeightedDataset::from(task().parts.train), task().parts.val, fit_rng);
  RngStream draw(5, 0);
  const Dataset q = task().target.subset(draw.sample_without_replacement(task().target.size(), n));
  for (auto _ : state) {
    RngStream rng(6, 0);
    benchmark::DoNotOptimize(build_ensemble(c, task().parts.train, task().parts.val, q, base, CdcTrainSpec{}, rng));
  }
}
BENCHMARK(BM_BuildEnsemble)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace shiftguard

BENCHMARK_MAIN();
