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

#include "shiftguard/numerics.h"

#include <mpfr.h>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shiftguard {

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw std::invalid_argument("row width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void affine(const Matrix& w, std::span<const double> b, std::span<const double> x,
            std::span<double> y) {
  assert(x.size() == w.cols() && y.size() == w.rows() && b.size() == w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* wr = w.data().data() + r * w.cols();
    double acc = b[r];
    for (std::size_t c = 0; c < w.cols(); ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void transposed_multiply(const Matrix& w, std::span<const double> x, std::span<double> y) {
  assert(x.size() == w.rows() && y.size() == w.cols());
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* wr = w.data().data() + r * w.cols();
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < w.cols(); ++c) y[c] += wr[c] * xr;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double log_sum_exp(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("empty input");
  if (logits.size() == 1) return logits[0];
  const double m = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double l : logits) acc += std::exp(l - m);
  return m + std::log(acc);
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  if (logits.empty()) throw std::invalid_argument("empty input");
  assert(out.size() == logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    acc += out[i];
  }
  for (double& v : out) v /= acc;
}

Vector softmax(std::span<const double> logits) {
  Vector out(logits.size());
  softmax_into(logits, out);
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

bool is_probability_vector(std::span<const double> probs, double tol) {
  if (probs.empty()) return false;
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

double log_factorial(double n) { return std::lgamma(n + 1.0); }

double log_choose(double n, double k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

namespace {

constexpr double kBetaEps = 1e-14;
constexpr int kBetaMaxIter = 500;
constexpr double kTiny = 1e-300;

double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kBetaEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

double incomplete_beta_direct(double x, double a, double b) {
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  return std::exp(log_front) * beta_continued_fraction(x, a, b) / a;
}

// Minimal RAII holder over an MPFR value.
class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t bits) { mpfr_init2(v_, bits); }
  ~BigFloat() { mpfr_clear(v_); }
  BigFloat(const BigFloat&) = delete;
  BigFloat& operator=(const BigFloat&) = delete;
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

struct SeriesSums {
  double value;
  double log2_abs_sum;
  double log2_abs_value;
};

SeriesSums evaluate_series(double a1, double a2, double a3, double b1, double b2,
                           std::size_t terms, mpfr_prec_t bits) {
  BigFloat term(bits), sum(bits), abs_sum(bits), num(bits), den(bits), tmp(bits);
  mpfr_set_d(term.get(), 1.0, MPFR_RNDN);
  mpfr_set_d(sum.get(), 1.0, MPFR_RNDN);
  mpfr_set_d(abs_sum.get(), 1.0, MPFR_RNDN);
  for (std::size_t k = 0; k + 1 < terms; ++k) {
    const double kd = static_cast<double>(k);
    mpfr_set_d(num.get(), a1, MPFR_RNDN);
    mpfr_add_d(num.get(), num.get(), kd, MPFR_RNDN);
    mpfr_set_d(tmp.get(), a2, MPFR_RNDN);
    mpfr_add_d(tmp.get(), tmp.get(), kd, MPFR_RNDN);
    mpfr_mul(num.get(), num.get(), tmp.get(), MPFR_RNDN);
    mpfr_set_d(tmp.get(), a3, MPFR_RNDN);
    mpfr_add_d(tmp.get(), tmp.get(), kd, MPFR_RNDN);
    mpfr_mul(num.get(), num.get(), tmp.get(), MPFR_RNDN);

    mpfr_set_d(den.get(), b1, MPFR_RNDN);
    mpfr_add_d(den.get(), den.get(), kd, MPFR_RNDN);
    mpfr_set_d(tmp.get(), b2, MPFR_RNDN);
    mpfr_add_d(tmp.get(), tmp.get(), kd, MPFR_RNDN);
    mpfr_mul(den.get(), den.get(), tmp.get(), MPFR_RNDN);
    mpfr_mul_d(den.get(), den.get(), kd + 1.0, MPFR_RNDN);

    mpfr_mul(term.get(), term.get(), num.get(), MPFR_RNDN);
    mpfr_div(term.get(), term.get(), den.get(), MPFR_RNDN);
    mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
    mpfr_abs(tmp.get(), term.get(), MPFR_RNDN);
    mpfr_add(abs_sum.get(), abs_sum.get(), tmp.get(), MPFR_RNDN);
  }
  SeriesSums out{};
  out.value = mpfr_get_d(sum.get(), MPFR_RNDN);
  long exp_abs = 0;
  const double mant_abs = mpfr_get_d_2exp(&exp_abs, abs_sum.get(), MPFR_RNDN);
  out.log2_abs_sum = std::log2(std::abs(mant_abs)) + static_cast<double>(exp_abs);
  if (mpfr_zero_p(sum.get())) {
    out.log2_abs_value = -std::numeric_limits<double>::infinity();
  } else {
    long exp_v = 0;
    const double mant_v = mpfr_get_d_2exp(&exp_v, sum.get(), MPFR_RNDN);
    out.log2_abs_value = std::log2(std::abs(mant_v)) + static_cast<double>(exp_v);
  }
  return out;
}

bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::floor(v); }

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0) || !std::isfinite(a) ||
      !std::isfinite(b)) {
    throw std::invalid_argument("regularized_incomplete_beta: parameters out of domain");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (x > a / (a + b)) return 1.0 - incomplete_beta_direct(1.0 - x, b, a);
  return incomplete_beta_direct(x, a, b);
}

SeriesResult hypergeometric_3f2_series(double a1, double a2, double a3, double b1, double b2) {
  if (!is_nonpositive_integer(a2) || !std::isfinite(a2)) {
    throw std::invalid_argument("series does not terminate");
  }
  const auto terms = static_cast<std::size_t>(-a2) + 1;
  for (std::size_t k = 0; k + 1 < terms; ++k) {
    const double kd = static_cast<double>(k);
    if (b1 + kd == 0.0 || b2 + kd == 0.0) {
      throw std::invalid_argument("3F2 denominator parameter hits a pole inside the series");
    }
  }
  mpfr_prec_t bits = 128;
  constexpr mpfr_prec_t kMaxBits = 1 << 18;
  for (;;) {
    const SeriesSums s = evaluate_series(a1, a2, a3, b1, b2, terms, bits);
    // Lost bits from cancellation, plus a margin for the 53-bit result.
    const double needed = (s.log2_abs_sum - s.log2_abs_value) + 80.0;
    if (s.value == 0.0 || !std::isfinite(needed) || needed <= static_cast<double>(bits) ||
        bits >= kMaxBits) {
      return {s.value, terms};
    }
    bits = std::min<mpfr_prec_t>(kMaxBits, static_cast<mpfr_prec_t>(needed) + 64);
  }
}

double hypergeometric_3f2_terminating(double a1, double a2, double a3, double b1, double b2) {
  return hypergeometric_3f2_series(a1, a2, a3, b1, b2).value;
}

}  // namespace shiftguard
