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

#ifndef SHIFTGUARD_NUMERICS_H_
#define SHIFTGUARD_NUMERICS_H_

#include <cstddef>
#include <span>
#include <vector>

namespace shiftguard {

using Vector = std::vector<double>;

// Dense row-major matrix. Only what the learners need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v);
  void append_row(std::span<const double> values);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// y = W x + b, with W of shape (out, in).
void affine(const Matrix& w, std::span<const double> b, std::span<const double> x,
            std::span<double> y);

// y = W^T x, with W of shape (out, in) and x of length out.
void transposed_multiply(const Matrix& w, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);

// Stable log(sum(exp(l))). Throws std::invalid_argument("empty input") when l is empty.
double log_sum_exp(std::span<const double> logits);

// Stable softmax; the result satisfies the probability-vector invariants.
Vector softmax(std::span<const double> logits);
void softmax_into(std::span<const double> logits, std::span<double> out);

// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

// Natural-log Shannon entropy, with 0 log 0 = 0.
double entropy(std::span<const double> probs);

// True when every entry is in [0,1] and the entries sum to 1 within tol.
bool is_probability_vector(std::span<const double> probs, double tol = 1e-9);

double log_factorial(double n);
double log_choose(double n, double k);

// Regularized incomplete beta I_x(a, b), a > 0, b > 0, x in [0, 1].
// Lentz continued fraction, switching to 1 - I_{1-x}(b, a) when x > a / (a + b).
double regularized_incomplete_beta(double x, double a, double b);

struct SeriesResult {
  double value = 0.0;
  std::size_t terms = 0;
};

// Terminating 3F2(a1, a2, a3; b1, b2; 1) where a2 is a non-positive integer.
// Terms follow the exact ratio recurrence in a binary float whose precision grows
// until the cancellation of the alternating series is covered.
SeriesResult hypergeometric_3f2_series(double a1, double a2, double a3, double b1, double b2);
double hypergeometric_3f2_terminating(double a1, double a2, double a3, double b1, double b2);

}  // namespace shiftguard

#endif  // SHIFTGUARD_NUMERICS_H_
