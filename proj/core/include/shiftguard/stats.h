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

#ifndef SHIFTGUARD_STATS_H_
#define SHIFTGUARD_STATS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "shiftguard/rng.h"

namespace shiftguard {

enum class KsMethod { kExact, kAsymptotic };

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  KsMethod method = KsMethod::kExact;
};

// Sizes at or below this product use the exact lattice-path distribution.
inline constexpr std::size_t kKsExactLimit = 10000;

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

// P(D >= d) for samples of size n and m without ties. `d_scaled` is D * n * m, an integer.
double ks_exact_pvalue(std::size_t n, std::size_t m, std::uint64_t d_scaled);
// Kolmogorov limit distribution at lambda = D * sqrt(nm / (n + m)).
double ks_asymptotic_pvalue(std::size_t n, std::size_t m, double d);

enum class Sided { kGreater, kTwoSided };

std::string to_string(Sided s);

// Tail probabilities of Bin(n, p0) through the regularized incomplete beta.
double binomial_upper_tail(std::uint64_t x, std::uint64_t n, double p0);  // P(X >= x)
double binomial_lower_tail(std::uint64_t x, std::uint64_t n, double p0);  // P(X <= x)
double binomial_pvalue(std::uint64_t x, std::uint64_t n, double p0, Sided sided);

// Smallest element v with at least ceil(q K) of the K values <= v; the minimum when q = 0.
double empirical_quantile(std::span<const double> values, double q);

// Largest P(X > Y) over p for X, Y iid Bin(n, p): (1 - C(2n, n) / 4^n) / 2.
double disagreement_bound_pstar(std::int64_t n);

struct PosteriorInputs {
  std::int64_t n = 0;  // disagreements on the P sample
  std::int64_t N = 1;  // size of the P sample
  std::int64_t m = 0;  // disagreements on the Q sample
  std::int64_t M = 1;  // size of the Q sample

  void validate() const;
};

// P(q > p) for q ~ Beta(m + 1, M - m + 1) and p ~ Beta(n + 1, N - n + 1).
double posterior_prob_shift(const PosteriorInputs& in);

struct McEstimate {
  double value = 0.0;
  double std_err = 0.0;  // sqrt(value (1 - value) / trials)
};

// Simulated P(X > Y) for X, Y iid Bin(n, p).
McEstimate mc_disagreement_oracle(std::int64_t n, double p, std::uint64_t trials, RngStream& rng);

}  // namespace shiftguard

#endif  // SHIFTGUARD_STATS_H_
