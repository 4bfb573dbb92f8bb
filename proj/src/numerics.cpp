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

#include "freecat/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "freecat/error.hpp"

namespace freecat::numerics {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix product shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("matrix sum shape mismatch");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("matrix shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

namespace {

// Nilpotency index bound from the sparsity pattern: if the pattern graph is
// acyclic, A^k = 0 for k > longest path. Returns 0 when the pattern has a cycle.
std::size_t structural_nilpotency(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0) ++indegree[j];
  std::vector<std::size_t> depth(n, 0);
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::size_t seen = 0;
  std::size_t longest = 0;
  while (!ready.empty()) {
    const std::size_t i = ready.back();
    ready.pop_back();
    ++seen;
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) == 0.0) continue;
      depth[j] = std::max(depth[j], depth[i] + 1);
      longest = std::max(longest, depth[j]);
      if (--indegree[j] == 0) ready.push_back(j);
    }
  }
  return seen == n ? longest + 1 : 0;
}

}  // namespace

Matrix mat_exp(const Matrix& a, double tol) {
  if (!a.square()) throw std::invalid_argument("mat_exp requires a square matrix");
  for (double v : a.data())
    if (!std::isfinite(v)) throw std::invalid_argument("mat_exp requires finite entries");
  const std::size_t n = a.rows();
  Matrix result = Matrix::identity(n);
  if (n == 0) return result;

  if (const std::size_t index = structural_nilpotency(a); index > 0) {
    Matrix power = a;
    double factorial = 1.0;
    for (std::size_t k = 1; k < index; ++k) {
      factorial *= static_cast<double>(k);
      for (std::size_t i = 0; i < n * n; ++i)
        result.data()[i] += power.data()[i] / factorial;
      power = power * a;
    }
    return result;
  }

  // Scale so the infinity norm is at most 1/2.
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : a.row(i)) s += std::abs(v);
    norm = std::max(norm, s);
  }
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = std::ldexp(1.0, -squarings) * a;

  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 40; ++k) {
    term = (1.0 / k) * (term * scaled);
    result = result + term;
    if (max_abs(term) < tol * 1e-4) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

Matrix softmax_rows(const Matrix& m, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("softmax_rows requires beta > 0");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    auto o = out.row(i);
    double top = -std::numeric_limits<double>::infinity();
    for (double v : in) top = std::max(top, v / beta);
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] / beta - top);
      total += o[j];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

double log_sum_exp(std::span<const double> xs) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : xs) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double total = 0.0;
  for (double x : xs) total += std::exp(x - top);
  return top + std::log(total);
}

double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  return y > 30.0 ? y : std::log(std::expm1(y));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

DistParams DistParams::gamma(std::vector<double> shape, std::vector<double> rate) {
  return {DistKind::gamma, std::move(shape), std::move(rate)};
}

DistParams DistParams::gaussian(std::vector<double> mean, std::vector<double> scale) {
  return {DistKind::gaussian, std::move(mean), std::move(scale)};
}

DistParams DistParams::lognormal(std::vector<double> log_mean, std::vector<double> log_scale) {
  return {DistKind::lognormal, std::move(log_mean), std::move(log_scale)};
}

DistParams DistParams::continuous_bernoulli(std::vector<double> lambda) {
  return {DistKind::continuous_bernoulli, std::move(lambda), {}};
}

double clamp_lambda(double lambda) {
  return std::clamp(lambda, kLambdaClamp, 1.0 - kLambdaClamp);
}

double clamp_unit(double x) {
  return std::clamp(x, kLambdaClamp, 1.0 - kLambdaClamp);
}

// C(lambda) = 2 artanh(1 - 2 lambda) / (1 - 2 lambda), with C(1/2) = 2.
double cb_log_normalizer(double lambda) {
  const double u = 1.0 - 2.0 * clamp_lambda(lambda);
  if (std::abs(u) < 2e-3) {
    const double u2 = u * u;
    return std::numbers::ln2 + u2 / 3.0 + 13.0 * u2 * u2 / 90.0;
  }
  return std::log(2.0 * std::atanh(u) / u);
}

double cb_log_normalizer_grad(double lambda) {
  const double u = 1.0 - 2.0 * clamp_lambda(lambda);
  double d_du;
  if (std::abs(u) < 2e-3) {
    d_du = 2.0 * u / 3.0 + 52.0 * u * u * u / 90.0;
  } else {
    d_du = 1.0 / ((1.0 - u * u) * std::atanh(u)) - 1.0 / u;
  }
  return -2.0 * d_du;
}

double cb_log_density(double x, double lambda) {
  const double l = clamp_lambda(lambda);
  const double xc = clamp_unit(x);
  return xc * std::log(l) + (1.0 - xc) * std::log1p(-l) + cb_log_normalizer(l);
}

double gaussian_log_density(double x, double mean, double scale) {
  const double s = std::max(scale, kMinScale);
  const double z = (x - mean) / s;
  return -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
}

namespace {

void require_dims(const DistParams& d, std::span<const double> x) {
  if (d.first.size() != x.size())
    throw std::invalid_argument("distribution dimension " + std::to_string(d.first.size()) +
                                " does not match value dimension " + std::to_string(x.size()));
  if (d.kind != DistKind::continuous_bernoulli && d.second.size() != d.first.size())
    throw std::invalid_argument("distribution parameter vectors differ in length");
}

void support_violation(const char* kind, double x) {
  throw NumericalError(std::string(kind) + " support violation at x = " + std::to_string(x));
}

}  // namespace

double log_density(const DistParams& d, std::span<const double> x) {
  require_dims(d, x);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = d.first[i];
    switch (d.kind) {
      case DistKind::gamma: {
        const double b = d.second[i];
        if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("gamma shape and rate must be positive");
        // shape 1 is the exponential, whose support includes 0
        if (a == 1.0 ? !(x[i] >= 0.0) : !(x[i] > 0.0)) support_violation("gamma", x[i]);
        const double log_x_term = a == 1.0 ? 0.0 : (a - 1.0) * std::log(x[i]);
        total += log_x_term - b * x[i] + a * std::log(b) - std::lgamma(a);
        break;
      }
      case DistKind::gaussian:
        total += gaussian_log_density(x[i], a, d.second[i]);
        break;
      case DistKind::lognormal: {
        if (!(x[i] > 0.0)) support_violation("lognormal", x[i]);
        const double lx = std::log(x[i]);
        total += gaussian_log_density(lx, a, d.second[i]) - lx;
        break;
      }
      case DistKind::continuous_bernoulli:
        if (x[i] < 0.0 || x[i] > 1.0) support_violation("continuous-bernoulli", x[i]);
        total += cb_log_density(x[i], a);
        break;
    }
  }
  return total;
}

Draw sample(const DistParams& d, Rng& rng) {
  Draw out;
  out.value.resize(d.dim());
  for (std::size_t i = 0; i < d.dim(); ++i) {
    const double a = d.first[i];
    switch (d.kind) {
      case DistKind::gamma:
        out.value[i] = rng.gamma(a) / d.second[i];
        break;
      case DistKind::gaussian:
        out.value[i] = a + std::max(d.second[i], kMinScale) * rng.normal();
        break;
      case DistKind::lognormal:
        out.value[i] = std::exp(a + std::max(d.second[i], kMinScale) * rng.normal());
        break;
      case DistKind::continuous_bernoulli: {
        const double l = clamp_lambda(a);
        const double u = rng.uniform();
        double x = u;
        if (l != 0.5) x = std::log1p(u * (2.0 * l - 1.0) / (1.0 - l)) / std::log(l / (1.0 - l));
        out.value[i] = std::clamp(x, 0.0, 1.0);
        break;
      }
    }
  }
  out.log_q = log_density(d, out.value);
  return out;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = f(point);
    point[i] = saved - h;
    const double down = f(point);
    point[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace freecat::numerics
