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

// Shared fixtures and reference implementations for the tests.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "freecat/category.hpp"
#include "freecat/model.hpp"
#include "freecat/numerics.hpp"
#include "freecat/rng.hpp"

namespace fixtures {

inline const char* kChain = R"({
  "objects": [{"name": "X2", "kind": "space", "dim": 2}, {"name": "X4", "kind": "space", "dim": 4}],
  "generators": [
    {"name": "p", "dom": "unit", "cod": "X2", "primitive": {"kind": "gaussian-prior"}},
    {"name": "f", "dom": "X2", "cod": "X4", "primitive": {"kind": "affine-cbernoulli", "hidden": 8}}
  ],
  "data_object": "X4"
})";

inline const char* kDiamond = R"({
  "objects": [{"name": "X2", "kind": "space", "dim": 2}, {"name": "X4", "kind": "space", "dim": 4}],
  "generators": [
    {"name": "p", "dom": "unit", "cod": "X2", "primitive": {"kind": "gaussian-prior"}},
    {"name": "f", "dom": "X2", "cod": "X4", "primitive": {"kind": "affine-gaussian", "hidden": 8}},
    {"name": "g", "dom": "X2", "cod": "X4", "primitive": {"kind": "affine-gaussian", "hidden": 8}}
  ],
  "data_object": "X4"
})";

inline freecat::category::CategorySpec chain() { return freecat::category::parse_spec(kChain); }
inline freecat::category::CategorySpec diamond() { return freecat::category::parse_spec(kDiamond); }

using freecat::numerics::Matrix;

// sum_{k <= terms} A^k / k!, plain and unscaled.
inline Matrix series_exp(const Matrix& a, int terms = 30) {
  const std::size_t n = a.rows();
  Matrix out = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= terms; ++k) {
    term = (1.0 / k) * (term * a);
    out = out + term;
  }
  return out;
}

// Reference row softmax, written independently of the library.
inline Matrix reference_softmax(const Matrix& m, double beta) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double hi = -INFINITY;
    for (std::size_t j = 0; j < m.cols(); ++j) hi = std::max(hi, m(i, j) / beta);
    double z = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) z += std::exp(m(i, j) / beta - hi);
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = std::exp(m(i, j) / beta - hi) / z;
  }
  return out;
}

// Random layered DAG specs: every object reachable from the unit, the last
// object is the data object, optionally with a back edge (cyclic) and
// product objects.
struct RandomSpecOptions {
  std::size_t max_objects = 5;
  bool allow_cycles = true;
  bool allow_products = true;
  std::size_t max_extra_edges = 4;
};

inline std::string random_spec(freecat::Rng& rng, const RandomSpecOptions& opt = {}) {
  const std::size_t n = 2 + rng.below(opt.max_objects - 1);
  std::string objects, gens;
  auto obj = [](std::size_t i) { return "O" + std::to_string(i); };
  std::size_t gid = 0;
  auto add_gen = [&](const std::string& dom, const std::string& cod) {
    if (!gens.empty()) gens += ",\n";
    gens += R"({"name": "g)" + std::to_string(gid++) + R"(", "dom": ")" + dom + R"(", "cod": ")" + cod + "\"}";
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!objects.empty()) objects += ",\n";
    objects += R"({"name": ")" + obj(i) + R"(", "kind": "space", "dim": )" + std::to_string(1 + rng.below(3)) + "}";
  }
  // spine unit -> O0 -> O1 -> ... guarantees reachability
  add_gen("unit", obj(0));
  for (std::size_t i = 1; i < n; ++i) add_gen(obj(rng.below(i)), obj(i));
  const std::size_t extra = rng.below(opt.max_extra_edges + 1);
  for (std::size_t k = 0; k < extra; ++k) {
    const std::size_t a = rng.below(n), b = rng.below(n);
    if (a < b) add_gen(obj(a), obj(b));
    else if (opt.allow_cycles && a > b) add_gen(obj(a), obj(b));
    else add_gen("unit", obj(b));
  }
  if (opt.allow_products && rng.below(2) == 0) {
    const std::size_t a = rng.below(n), b = rng.below(n);
    objects += R"(,
{"name": "P", "kind": "product", "factors": [")" + obj(a) + "\", \"" + obj(b) + "\"]}";
    add_gen("P", obj(n - 1));
  }
  return "{\"objects\": [" + objects + "],\n\"generators\": [" + gens + "],\n\"data_object\": \"" + obj(n - 1) +
         "\"}";
}

// Linear-Gaussian model z ~ N(0, I_2), x | z ~ N(M z + c, s^2 I_3) with
// orthogonal columns in M, so the posterior covariance is diagonal.
inline const char* kConjugate = R"({
  "objects": [{"name": "Z", "kind": "space", "dim": 2}, {"name": "X", "kind": "space", "dim": 3}],
  "generators": [
    {"name": "p", "dom": "unit", "cod": "Z", "primitive": {"kind": "gaussian-prior", "trainable": false}},
    {"name": "f", "dom": "Z", "cod": "X",
     "primitive": {"kind": "affine-gaussian", "hidden": 2, "activation": "identity", "trainable": false}}
  ],
  "data_object": "X"})";

struct Conjugate {
  freecat::category::CategorySpec spec = freecat::category::parse_spec(kConjugate);
  Matrix m{{1.0, 0.5}, {2.0, -1.0}, {-1.0, -1.5}};  // columns are orthogonal
  std::vector<double> c{0.5, -1.0, 0.25};
  double sigma = 0.7;

  // theta: W1 = I, b1 = 0, W2 = M, b2 = c; prior N(0, I).
  void set_theta(freecat::model::ParamStore& ps) const {
    auto& f = ps.theta.at("f");
    f["w1"].values = {1, 0, 0, 1};
    f["b1"].values = {0, 0};
    f["w2"].values.assign(m.data().begin(), m.data().end());
    f["b2"].values = c;
    f["scale"].values.assign(3, freecat::numerics::inverse_softplus(sigma));
    auto& p = ps.theta.at("p");
    p["mean"].values = {0, 0};
    p["scale"].values.assign(2, freecat::numerics::inverse_softplus(1.0));
  }

  // Posterior mean K (x - c) with K = S M^T / s^2, S = (I + M^T M / s^2)^-1.
  void set_exact_dagger(freecat::model::ParamStore& ps) const {
    const double s2 = sigma * sigma;
    std::vector<double> post(2);
    for (int j = 0; j < 2; ++j) {
      double mtm = 0.0;
      for (int i = 0; i < 3; ++i) mtm += m(i, j) * m(i, j);
      post[j] = 1.0 / (1.0 + mtm / s2);
    }
    auto& d = ps.dagger.at("f");
    d["w1"].values.assign(6, 0.0);
    d["b1"].values.assign(2, 0.0);
    for (int j = 0; j < 2; ++j) {
      double off = 0.0;
      for (int i = 0; i < 3; ++i) {
        d["w1"].values[j * 3 + i] = post[j] * m(i, j) / s2;
        off += post[j] * m(i, j) / s2 * c[i];
      }
      d["b1"].values[j] = -off;
    }
    d["w2"].values = {1, 0, 0, 1};
    d["b2"].values = {0, 0};
    d["scale"].values = {freecat::numerics::inverse_softplus(std::sqrt(post[0])),
                         freecat::numerics::inverse_softplus(std::sqrt(post[1]))};
  }

  // log N(x; c, M M^T + s^2 I) through a Cholesky factor.
  double log_evidence(std::span<const double> x) const {
    double a[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        a[i][j] = (i == j ? sigma * sigma : 0.0);
        for (int k = 0; k < 2; ++k) a[i][j] += m(i, k) * m(j, k);
      }
    double l[3][3] = {};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j) {
        double s = a[i][j];
        for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
        l[i][j] = i == j ? std::sqrt(s) : s / l[j][j];
      }
    double y[3];
    double logdet = 0.0, quad = 0.0;
    for (int i = 0; i < 3; ++i) {
      double s = x[i] - c[i];
      for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
      y[i] = s / l[i][i];
      quad += y[i] * y[i];
      logdet += 2.0 * std::log(l[i][i]);
    }
    return -0.5 * (3.0 * std::log(2.0 * M_PI) + logdet + quad);
  }

  std::vector<std::vector<double>> draw(std::size_t n, freecat::Rng& rng) const {
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < n; ++r) {
      const double z[2] = {rng.normal(), rng.normal()};
      std::vector<double> x(3);
      for (int i = 0; i < 3; ++i) x[i] = m(i, 0) * z[0] + m(i, 1) * z[1] + c[i] + sigma * rng.normal();
      out.push_back(std::move(x));
    }
    return out;
  }
};

}  // namespace fixtures
