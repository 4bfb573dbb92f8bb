/* Copyright 2026 The Freecat Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "freecat/rng.hpp"

namespace freecat::numerics {

/// Dense row-major matrix. Sized for desk-scale graphs (a few hundred rows).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Matrix exponential. Nilpotent inputs (e.g. adjacency matrices of acyclic
/// graphs) are summed exactly since the series terminates; everything else
/// goes through scaling-and-squaring over a truncated Taylor series.
Matrix mat_exp(const Matrix& a, double tol = 1e-12);

/// Row-wise softmax of m / beta with max subtraction.
Matrix softmax_rows(const Matrix& m, double beta);

double log_sum_exp(std::span<const double> xs);

double softplus(double x);
double inverse_softplus(double y);
double sigmoid(double x);

enum class DistKind { gamma, gaussian, lognormal, continuous_bernoulli };

constexpr double kMinScale = 1e-6;
constexpr double kLambdaClamp = 1e-6;

/// Parameters of a factorized distribution over a real vector.
///   gamma:                first = shape, second = rate
///   gaussian:             first = mean, second = scale
///   lognormal:            first = log-mean, second = log-scale
///   continuous_bernoulli: first = lambda, second unused
struct DistParams {
  DistKind kind = DistKind::gaussian;
  std::vector<double> first;
  std::vector<double> second;

  static DistParams gamma(std::vector<double> shape, std::vector<double> rate);
  static DistParams gaussian(std::vector<double> mean, std::vector<double> scale);
  static DistParams lognormal(std::vector<double> log_mean, std::vector<double> log_scale);
  static DistParams continuous_bernoulli(std::vector<double> lambda);

  std::size_t dim() const noexcept { return first.size(); }
};

/// Joint log-density of independent coordinates. Throws NumericalError
/// outside the support.
double log_density(const DistParams& d, std::span<const double> x);

struct Draw {
  std::vector<double> value;
  double log_q = 0.0;
};

/// Gaussian and lognormal draws are location + scale * noise.
Draw sample(const DistParams& d, Rng& rng);

// Continuous-Bernoulli pieces shared with the autodiff tape.
double clamp_lambda(double lambda);
double clamp_unit(double x);
double cb_log_normalizer(double lambda);
double cb_log_normalizer_grad(double lambda);
double cb_log_density(double x, double lambda);

double gaussian_log_density(double x, double mean, double scale);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h);

}  // namespace freecat::numerics
