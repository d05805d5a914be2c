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
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "shiftguard/losses.h"
#include "shiftguard/numerics.h"
#include "shiftguard/stats.h"
#include "suites.h"

namespace shiftguard::acceptance {

namespace {

using Clock = std::chrono::steady_clock;
using boost::multiprecision::cpp_rational;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

cpp_rational binomial_coefficient(int n, int k) {
  cpp_rational c = 1;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// P(X > Y) for X, Y iid Bin(n, 1/2), summed exactly.
cpp_rational exact_pxy_half(int n) {
  cpp_rational total = 0;
  for (int x = 0; x <= n; ++x) {
    for (int y = 0; y < x; ++y) total += binomial_coefficient(n, x) * binomial_coefficient(n, y);
  }
  cpp_rational four_n = 1;
  for (int i = 0; i < n; ++i) four_n *= 4;
  return total / four_n;
}

}  // namespace

void bound_dominance(Report& r) {
  const auto t0 = Clock::now();
  constexpr int kTrials = 1'000'000;
  bool dominated = true, tight = true;
  std::string worst;
  for (int n : {1, 2, 5, 10, 20}) {
    const double pstar = disagreement_bound_pstar(n);
    r.record("pstar." + std::to_string(n), pstar);
    for (int step = 1; step <= 9; ++step) {
      const double p = 0.1 * step;
      std::mt19937_64 gen(1000u * static_cast<unsigned>(n) + static_cast<unsigned>(step));
      std::binomial_distribution<int> bin(n, p);
      int wins = 0;
      for (int t = 0; t < kTrials; ++t) wins += bin(gen) > bin(gen);
      const double est = static_cast<double>(wins) / kTrials;
      const double se = std::sqrt(est * (1.0 - est) / kTrials);
      r.record("mc." + std::to_string(n) + "." + std::to_string(step), est);
      if (est > pstar + 3.0 * se) {
        dominated = false;
        worst = fmt("n=%g p=%.1f", n, p) + fmt(" mc=%.6f bound=%.6f", est, pstar);
      }
      if (step == 5 && std::abs(est - pstar) > 3.0 * se) {
        tight = false;
        worst = fmt("n=%g at p=0.5 mc=%.6f bound=%.6f", n, est, pstar);
      }
    }
  }
  r.check("simulated P(X>Y) <= p*(n) + 3 se on the 5 x 9 grid", dominated, worst);
  r.check("simulated P(X>Y) at p = 0.5 equals p*(n) within 3 se", tight, worst);

  bool spot = disagreement_bound_pstar(1) == 0.25 && disagreement_bound_pstar(2) == 0.3125 &&
              exact_pxy_half(1) == cpp_rational(1, 4) && exact_pxy_half(2) == cpp_rational(5, 16);
  r.check("p*(1) = 1/4 and p*(2) = 5/16 by exact enumeration", spot);
  double max_dev = 0.0;
  for (int n = 1; n <= 20; ++n) {
    max_dev = std::max(max_dev, std::abs(disagreement_bound_pstar(n) - static_cast<double>(exact_pxy_half(n))));
  }
  r.check("closed form equals enumeration at p = 0.5 for n <= 20", max_dev < 1e-14, fmt("max |diff| %.2e", max_dev));
  const double secs = seconds_since(t0);
  r.check("runtime under 1 minute", secs < 60.0, fmt("%.1f s", secs));
}

void posterior_closed_form(Report& r) {
  const auto t0 = Clock::now();
  constexpr int kPairs = 1'000'000;
  const int sizes[] = {1, 5, 20, 50};
  const double fractions[] = {0.0, 0.3, 0.7, 1.0};
  double worst = 0.0;
  std::string worst_at;
  std::uint64_t cell = 0;
  for (int N : sizes) {
    for (double fn : fractions) {
      const int n = static_cast<int>(std::lround(fn * N));
      for (int M : sizes) {
        for (double fm : fractions) {
          const int m = static_cast<int>(std::lround(fm * M));
          const double closed = posterior_prob_shift({n, N, m, M});
          std::mt19937_64 gen(0xbe7a0000ull + cell++);
          std::gamma_distribution<double> gq1(m + 1.0), gq2(M - m + 1.0), gp1(n + 1.0), gp2(N - n + 1.0);
          int wins = 0;
          for (int t = 0; t < kPairs; ++t) {
            const double a = gq1(gen), b = gq2(gen), c = gp1(gen), d = gp2(gen);
            // q = a / (a + b) > p = c / (c + d)
            wins += a * (c + d) > c * (a + b);
          }
          const double mc = static_cast<double>(wins) / kPairs;
          r.record("posterior." + std::to_string(n) + "." + std::to_string(N) + "." + std::to_string(m) + "." +
                       std::to_string(M),
                   closed);
          r.record("mc." + std::to_string(cell), mc);
          if (std::abs(closed - mc) > worst) {
            worst = std::abs(closed - mc);
            worst_at = "(" + std::to_string(n) + "," + std::to_string(N) + "," + std::to_string(m) + "," +
                       std::to_string(M) + ")";
          }
        }
      }
    }
  }
  r.check("closed form within 0.005 of the Beta simulation on 256 grid cells", worst <= 0.005,
          fmt("max |diff| %.5f", worst) + " at " + worst_at);

  double sym_dev = 0.0;
  for (int N : sizes) {
    for (double fn : fractions) {
      const int n = static_cast<int>(std::lround(fn * N));
      sym_dev = std::max(sym_dev, std::abs(posterior_prob_shift({n, N, n, N}) - 0.5));
    }
  }
  r.check("symmetric cases return 0.5 +- 1e-9", sym_dev <= 1e-9, fmt("max |diff| %.2e", sym_dev));
  const double v = posterior_prob_shift({0, 1, 1, 1});
  r.record("posterior.0.1.1.1", v);
  r.check("(0,1,1,1) returns 5/6 +- 1e-9", std::abs(v - 5.0 / 6.0) <= 1e-9, fmt("%.15f", v));
  const double secs = seconds_since(t0);
  r.check("runtime under 2 minutes", secs < 120.0, fmt("%.1f s", secs));
}

namespace {

// -(1/(N-1)) sum_{i != t} log softmax(l)_i, evaluated directly.
double dce_oracle(const std::vector<double>& l, std::size_t t) {
  const double mx = *std::max_element(l.begin(), l.end());
  double z = 0.0;
  for (double v : l) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  double sum = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (i != t) sum += l[i] - lse;
  }
  return -sum / static_cast<double>(l.size() - 1);
}

// Gradient descent on the logits; `agree` keeps the target logit at or above every other.
double minimize_dce(std::size_t classes, std::size_t t, bool agree, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> l(classes);
  for (double& v : l) v = normal(gen);
  auto project = [&] {
    if (!agree) return;
    double top = -INFINITY;
    for (std::size_t i = 0; i < classes; ++i) {
      if (i != t) top = std::max(top, l[i]);
    }
    l[t] = std::max(l[t], top);
  };
  project();
  const DisagreementTarget target(t, classes);
  for (int step = 0; step < 20000; ++step) {
    const LossAndGradient g = disagreement_cross_entropy(l, target);
    for (std::size_t i = 0; i < classes; ++i) l[i] -= 1.0 * g.grad[i];
    project();
  }
  return disagreement_cross_entropy(l, target).loss;
}

}  // namespace

void dce_correctness(Report& r) {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> normal(0.0, 3.0);
  const std::size_t class_counts[] = {2, 3, 5, 10};
  constexpr double h = 1e-5;
  double worst_grad = 0.0, worst_loss = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t classes = class_counts[c % 4];
    std::vector<double> l(classes);
    for (double& v : l) v = normal(gen);
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, classes - 1)(gen);
    const LossAndGradient got = disagreement_cross_entropy(l, DisagreementTarget(t, classes));
    worst_loss = std::max(worst_loss, std::abs(got.loss - dce_oracle(l, t)));
    for (std::size_t j = 0; j < classes; ++j) {
      std::vector<double> up = l, down = l;
      up[j] += h;
      down[j] -= h;
      const double numeric = (dce_oracle(up, t) - dce_oracle(down, t)) / (2.0 * h);
      worst_grad = std::max(worst_grad, std::abs(numeric - got.grad[j]));
    }
    r.record("dce." + std::to_string(c), got.loss);
  }
  r.check("loss equals the direct softmax form over 1000 cases", worst_loss <= 1e-12,
          fmt("max |diff| %.2e", worst_loss));
  r.check("gradient within 1e-6 of central differences over 1000 cases", worst_grad <= 1e-6,
          fmt("max |diff| %.2e", worst_grad));

  double worst_dis = 0.0, worst_agree = 0.0;
  for (std::size_t classes : class_counts) {
    for (std::size_t t : {std::size_t{0}, classes - 1}) {
      const double dis = minimize_dce(classes, t, false, gen);
      const double agree = minimize_dce(classes, t, true, gen);
      r.record("min.dis." + std::to_string(classes) + "." + std::to_string(t), dis);
      r.record("min.agree." + std::to_string(classes) + "." + std::to_string(t), agree);
      worst_dis = std::max(worst_dis, std::abs(dis - std::log(static_cast<double>(classes - 1))));
      worst_agree = std::max(worst_agree, std::abs(agree - std::log(static_cast<double>(classes))));
    }
  }
  r.check("unconstrained minimum recovers log(N-1) within 1e-3", worst_dis <= 1e-3, fmt("max |diff| %.2e", worst_dis));
  r.check("minimum with the target still on top recovers log N within 1e-3", worst_agree <= 1e-3,
          fmt("max |diff| %.2e", worst_agree));

  double worst_rep = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t classes = class_counts[c % 4];
    std::vector<double> l(classes);
    for (double& v : l) v = normal(gen);
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, classes - 1)(gen);
    const DisagreementTarget target(t, classes);
    double replicated = 0.0;
    for (const WeightedSample& s : replicate_for_disagreement(l, target)) {
      replicated += s.weight * cross_entropy(l, s.label).loss;
    }
    worst_rep = std::max(worst_rep, std::abs(replicated - disagreement_cross_entropy(l, target).loss));
  }
  r.check("replicated cross-entropy equals DCE within 1e-12", worst_rep <= 1e-12, fmt("max |diff| %.2e", worst_rep));
}

namespace {

// P(D >= d_obs) over every split of the pooled values into groups of n and m.
double ks_enumeration(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> pooled = xs;
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  const std::size_t n = xs.size(), total = pooled.size();
  auto statistic = [&](const std::vector<bool>& in_x) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < total; ++i) (in_x[i] ? a : b).push_back(pooled[i]);
    double d = 0.0;
    for (double v : pooled) {
      const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [&](double u) { return u <= v; })) / a.size();
      const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [&](double u) { return u <= v; })) / b.size();
      d = std::max(d, std::abs(fa - fb));
    }
    return d;
  };
  std::vector<bool> observed(total, false);
  std::fill(observed.begin(), observed.begin() + static_cast<std::ptrdiff_t>(n), true);
  const double d_obs = statistic(observed);
  std::vector<bool> mask(total, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n), true);
  std::size_t hits = 0, count = 0;
  do {
    ++count;
    hits += statistic(mask) >= d_obs - 1e-12;
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return static_cast<double>(hits) / static_cast<double>(count);
}

}  // namespace

void exact_tests(Report& r) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal;
  double worst_ks = 0.0;
  std::size_t cases = 0;
  for (std::size_t n = 1; n <= 7; ++n) {
    for (std::size_t m = 1; n + m <= 8; ++m) {
      for (int rep = 0; rep < 6; ++rep) {
        std::vector<double> xs(n), ys(m);
        // Shifting ys sweeps observed statistics from small to large.
        for (double& v : xs) v = normal(gen);
        for (double& v : ys) v = normal(gen) + 0.5 * rep;
        const KsResult got = ks_two_sample(xs, ys);
        const double want = ks_enumeration(xs, ys);
        worst_ks = std::max(worst_ks, std::abs(got.p_value - want));
        r.record("ks." + std::to_string(n) + "." + std::to_string(m) + "." + std::to_string(rep), got.p_value);
        ++cases;
      }
    }
  }
  r.check("exact KS p-values equal full enumeration for all n + m <= 8", worst_ks <= 1e-12,
          std::to_string(cases) + " cases" + fmt(", max |diff| %.2e", worst_ks));

  double worst_bin = 0.0;
  const double probs[] = {0.01, 0.1, 0.25, 0.3, 0.5, 0.62, 0.75, 0.9, 0.99};
  for (int n = 1; n <= 30; ++n) {
    for (double p : probs) {
      for (int x = 0; x <= n; ++x) {
        long double upper = 0.0L, lower = 0.0L;
        for (int k = 0; k <= n; ++k) {
          long double c = 1.0L;
          for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
          const long double pk = c * std::pow(static_cast<long double>(p), k) *
                                 std::pow(1.0L - static_cast<long double>(p), n - k);
          if (k >= x) upper += pk;
          if (k <= x) lower += pk;
        }
        const double two_sided = std::min(1.0, 2.0 * static_cast<double>(std::min(upper, lower)));
        worst_bin = std::max({worst_bin,
                              std::abs(binomial_pvalue(x, n, p, Sided::kGreater) - static_cast<double>(upper)),
                              std::abs(binomial_lower_tail(x, n, p) - static_cast<double>(lower)),
                              std::abs(binomial_pvalue(x, n, p, Sided::kTwoSided) - two_sided)});
        r.record("bin." + std::to_string(n) + "." + std::to_string(x) + "." + fmt("%g", p),
                 binomial_pvalue(x, n, p, Sided::kGreater));
      }
    }
  }
  r.check("binomial p-values equal direct summation within 1e-12 for n <= 30", worst_bin <= 1e-12,
          fmt("max |diff| %.2e", worst_bin));
}

}  // namespace shiftguard::acceptance
