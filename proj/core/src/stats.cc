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

#include "shiftguard/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "shiftguard/numerics.h"

namespace shiftguard {

namespace {

std::uint64_t abs_diff(std::uint64_t a, std::uint64_t b) { return a > b ? a - b : b - a; }

}  // namespace

double ks_exact_pvalue(std::size_t n, std::size_t m, std::uint64_t d_scaled) {
  if (n == 0 || m == 0) throw std::invalid_argument("empty input");
  if (d_scaled == 0) return 1.0;
  // Lattice paths from (0,0) to (n,m), one step per pooled observation. A path
  // exits at its first point with |i m - j n| >= d_scaled; the p-value is the
  // share of paths that ever exit.
  const std::size_t w = m + 1;
  std::vector<double> to_end((n + 1) * w, 0.0);
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      if (i == n || j == m) {
        to_end[i * w + j] = 1.0;
      } else {
        to_end[i * w + j] = to_end[(i + 1) * w + j] + to_end[i * w + j + 1];
      }
    }
  }
  const double total = to_end[0];
  std::vector<double> prev(w, 0.0), cur(w, 0.0);
  double exited = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      if (i == 0 && j == 0) {
        cur[0] = 1.0;
        continue;
      }
      const double reach = (j > 0 ? cur[j - 1] : 0.0) + (i > 0 ? prev[j] : 0.0);
      if (abs_diff(static_cast<std::uint64_t>(i) * m, static_cast<std::uint64_t>(j) * n) >= d_scaled) {
        exited += reach * to_end[i * w + j];
        cur[j] = 0.0;
      } else {
        cur[j] = reach;
      }
    }
    std::swap(prev, cur);
  }
  return std::clamp(exited / total, 0.0, 1.0);
}

double ks_asymptotic_pvalue(std::size_t n, std::size_t m, double d) {
  if (n == 0 || m == 0) throw std::invalid_argument("empty input");
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  const double lambda = d * std::sqrt(nn * mm / (nn + mm));
  if (lambda <= 0.0) return 1.0;
  double p;
  if (lambda < 1.18) {
    // Theta-function form of the CDF converges fast for small lambda.
    const double k = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int j = 1; j < 200; j += 2) {
      const double term = std::exp(k * j * j);
      cdf += term;
      if (term < 1e-17) break;
    }
    p = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * cdf;
  } else {
    p = 0.0;
    for (int j = 1; j < 200; ++j) {
      const double term = std::exp(-2.0 * j * j * lambda * lambda);
      p += (j % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-17) break;
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("empty input");
  std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::uint64_t n = a.size(), m = b.size();
  // Walk the pooled sorted values; counts include every element <= the current value.
  std::uint64_t i = 0, j = 0, best = 0;
  while (i < n || j < m) {
    const double v = (j >= m || (i < n && a[i] <= b[j])) ? a[i] : b[j];
    while (i < n && a[i] <= v) ++i;
    while (j < m && b[j] <= v) ++j;
    best = std::max(best, abs_diff(i * m, j * n));
  }
  KsResult r;
  r.statistic = static_cast<double>(best) / (static_cast<double>(n) * static_cast<double>(m));
  if (n * m <= kKsExactLimit) {
    r.method = KsMethod::kExact;
    r.p_value = ks_exact_pvalue(n, m, best);
  } else {
    r.method = KsMethod::kAsymptotic;
    r.p_value = ks_asymptotic_pvalue(n, m, r.statistic);
  }
  return r;
}

std::string to_string(Sided s) { return s == Sided::kGreater ? "greater" : "two_sided"; }

namespace {

void check_binomial(std::uint64_t x, std::uint64_t n, double p0) {
  if (x > n) throw std::invalid_argument("binomial: x exceeds n");
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("binomial: p0 must be in (0,1)");
}

}  // namespace

double binomial_upper_tail(std::uint64_t x, std::uint64_t n, double p0) {
  check_binomial(x, n, p0);
  if (x == 0) return 1.0;
  return regularized_incomplete_beta(p0, static_cast<double>(x), static_cast<double>(n - x + 1));
}

double binomial_lower_tail(std::uint64_t x, std::uint64_t n, double p0) {
  check_binomial(x, n, p0);
  if (x == n) return 1.0;
  return regularized_incomplete_beta(1.0 - p0, static_cast<double>(n - x), static_cast<double>(x + 1));
}

double binomial_pvalue(std::uint64_t x, std::uint64_t n, double p0, Sided sided) {
  const double upper = binomial_upper_tail(x, n, p0);
  if (sided == Sided::kGreater) return upper;
  const double lower = binomial_lower_tail(x, n, p0);
  return std::min(1.0, 2.0 * std::min(upper, lower));
}

double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must be in [0,1]");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double k_real = q * static_cast<double>(s.size());
  // The small slack keeps q K that is integral in exact arithmetic from rounding up.
  const auto k = static_cast<std::size_t>(std::ceil(k_real - 1e-9));
  return s[k == 0 ? 0 : std::min(k, s.size()) - 1];
}

double disagreement_bound_pstar(std::int64_t n) {
  if (n <= 0) throw std::invalid_argument("n must be positive");
  const double nn = static_cast<double>(n);
  const double central = std::exp(log_choose(2.0 * nn, nn) - nn * std::log(4.0));
  return 0.5 * (1.0 - central);
}

void PosteriorInputs::validate() const {
  if (N < 1 || M < 1) throw std::invalid_argument("sample sizes must be at least 1");
  if (n < 0 || n > N) throw std::invalid_argument("n must be in [0, N]");
  if (m < 0 || m > M) throw std::invalid_argument("m must be in [0, M]");
}

namespace {

// 1 - P(p_Q > p_P) as the closed-form prefactor times the terminating series.
double posterior_complement(double n, double N, double m, double M) {
  const double log_prefactor = log_factorial(M + 1) + log_factorial(N + 1) + log_factorial(m + n + 1) -
                               log_factorial(m + 1) - log_factorial(n) - log_factorial(M - m) -
                               log_factorial(m + N + 2);
  return std::exp(log_prefactor) * hypergeometric_3f2_terminating(m + 1, m - M, m + n + 2, m + 2, m + N + 3);
}

}  // namespace

double posterior_prob_shift(const PosteriorInputs& in) {
  in.validate();
  const double n = static_cast<double>(in.n), N = static_cast<double>(in.N);
  const double m = static_cast<double>(in.m), M = static_cast<double>(in.M);
  // Swapping the roles of P and Q gives the complement; evaluating the side whose
  // value is below one half avoids cancellation in 1 - x.
  const double swapped = posterior_complement(m, M, n, N);
  const double value = swapped < 0.5 ? swapped : 1.0 - posterior_complement(n, N, m, M);
  constexpr double kOvershoot = 1e-9;
  if (value < -kOvershoot || value > 1.0 + kOvershoot || !std::isfinite(value)) {
    throw std::runtime_error("posterior evaluation left [0,1] beyond tolerance");
  }
  return std::clamp(value, 0.0, 1.0);
}

McEstimate mc_disagreement_oracle(std::int64_t n, double p, std::uint64_t trials, RngStream& rng) {
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  if (n < 0) throw std::invalid_argument("n must be non-negative");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in [0,1]");
  // Inversion sampling from the binomial CDF table.
  std::vector<double> cdf(static_cast<std::size_t>(n) + 1);
  double acc = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    double pk;
    if (p == 0.0) {
      pk = k == 0 ? 1.0 : 0.0;
    } else if (p == 1.0) {
      pk = k == n ? 1.0 : 0.0;
    } else {
      pk = std::exp(log_choose(static_cast<double>(n), static_cast<double>(k)) + k * std::log(p) +
                    (n - k) * std::log1p(-p));
    }
    acc += pk;
    cdf[static_cast<std::size_t>(k)] = acc;
  }
  cdf.back() = std::numeric_limits<double>::infinity();
  auto draw = [&]() {
    const double u = rng.uniform();
    return std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
  };
  std::uint64_t wins = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto x = draw();
    const auto y = draw();
    wins += x > y;
  }
  McEstimate e;
  e.value = static_cast<double>(wins) / static_cast<double>(trials);
  e.std_err = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(trials));
  return e;
}

}  // namespace shiftguard
