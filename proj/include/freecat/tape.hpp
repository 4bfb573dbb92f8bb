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

// Vector-granular reverse-mode differentiation. Each node holds a value
// vector; backward closures push the node's adjoint into its parents.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace freecat::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  std::span<const double> value() const;
  double scalar() const;
  std::size_t size() const;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  Var constant(std::vector<double> value);
  Var constant(double value) { return constant(std::vector<double>{value}); }
  // Leaf whose adjoint is accumulated into `grad_sink` on backward().
  Var parameter(std::span<const double> value, std::span<double> grad_sink);
  Var push(std::vector<double> value, Backward backward);

  const std::vector<double>& value(std::size_t id) const { return nodes_[id].value; }
  // Adjoint of node `id`, zero-initialized on first access.
  std::vector<double>& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  // Seeds d(root)/d(root) = 1 and sweeps the tape once.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    Backward backward;
    std::span<double> sink;
  };
  std::vector<Node> nodes_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double s);
Var add_const(Var a, std::span<const double> c);
// Broadcast a size-1 node against a vector.
Var mul_scalar(Var v, Var s);
Var div_scalar(Var v, Var s);

// w is rows x cols (row-major), b has `rows` entries, x has `cols`.
Var affine(Var w, Var b, Var x, std::size_t rows, std::size_t cols);

Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
Var sigmoid(Var a);
// Zero gradient outside [lo, hi].
Var clamp(Var a, double lo, double hi);

Var sum(Var a);
Var index(Var a, std::size_t i);
Var slice(Var a, std::size_t offset, std::size_t length);
Var concat(std::span<const Var> parts);
Var log_sum_exp(Var a);

// Factorized log-densities; both return size-1 nodes.
Var gaussian_log_density(Var x, Var mean, Var scale);
// x is clamped into the open unit interval, lambda into the clamp range.
Var cbernoulli_log_density(Var x, Var lambda);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace freecat::ad
