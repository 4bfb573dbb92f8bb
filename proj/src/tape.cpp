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

#include "freecat/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "freecat/numerics.hpp"

namespace freecat::ad {

std::span<const double> Var::value() const { return tape->value(id); }

double Var::scalar() const {
  const auto& v = tape->value(id);
  if (v.size() != 1) throw std::logic_error("scalar() on a non-scalar node");
  return v[0];
}

std::size_t Var::size() const { return tape->value(id).size(); }

Var Tape::constant(std::vector<double> value) {
  nodes_.push_back({std::move(value), {}, {}, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(std::span<const double> value, std::span<double> grad_sink) {
  nodes_.push_back({std::vector<double>(value.begin(), value.end()), {}, {}, grad_sink});
  return {this, nodes_.size() - 1};
}

Var Tape::push(std::vector<double> value, Backward backward) {
  nodes_.push_back({std::move(value), {}, std::move(backward), {}});
  return {this, nodes_.size() - 1};
}

std::vector<double>& Tape::grad(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Tape::backward(Var root) {
  if (root.tape != this || value(root.id).size() != 1)
    throw std::logic_error("backward() needs a scalar root on this tape");
  grad(root.id)[0] += 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (nodes_[i].grad.empty()) continue;
    if (nodes_[i].backward) {
      nodes_[i].backward(*this, i);
    } else if (!nodes_[i].sink.empty()) {
      auto& g = nodes_[i].grad;
      for (std::size_t k = 0; k < g.size(); ++k) nodes_[i].sink[k] += g[k];
    }
  }
}

namespace {

void same_size(Var a, Var b) {
  if (a.size() != b.size()) throw std::invalid_argument("tape operands differ in size");
}

template <typename F, typename D>
Var unary(Var a, F f, D dfdx) {
  Tape& t = *a.tape;
  std::vector<double> out(a.size());
  const auto& in = t.value(a.id);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  const std::size_t aid = a.id;
  return t.push(std::move(out), [aid, dfdx](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    const auto& x = tp.value(aid);
    const auto& y = tp.value(self);
    auto& ga = tp.grad(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  same_size(a, b);
  Tape& t = *a.tape;
  std::vector<double> out(t.value(a.id));
  const auto& bv = t.value(b.id);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t.push(std::move(out), [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    auto& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gb = tp.grad(b);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

Var sub(Var a, Var b) { return add(a, neg(b)); }

Var mul(Var a, Var b) {
  same_size(a, b);
  Tape& t = *a.tape;
  std::vector<double> out(t.value(a.id));
  const auto& bv = t.value(b.id);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.push(std::move(out), [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    const auto av = tp.value(a);
    const auto bv = tp.value(b);
    auto& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    auto& gb = tp.grad(b);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_const(Var a, std::span<const double> c) {
  Tape& t = *a.tape;
  if (c.size() != a.size()) throw std::invalid_argument("add_const size mismatch");
  std::vector<double> out(t.value(a.id));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return t.push(std::move(out), [a = a.id](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    auto& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var mul_scalar(Var v, Var s) {
  Tape& t = *v.tape;
  const double sv = s.scalar();
  std::vector<double> out(t.value(v.id));
  for (double& x : out) x *= sv;
  return t.push(std::move(out), [v = v.id, s = s.id](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    const auto vv = tp.value(v);
    const double sv = tp.value(s)[0];
    double gs = 0.0;
    auto& gv = tp.grad(v);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gv[i] += g[i] * sv;
      gs += g[i] * vv[i];
    }
    tp.grad(s)[0] += gs;
  });
}

Var div_scalar(Var v, Var s) {
  Tape& t = *v.tape;
  const double sv = s.scalar();
  std::vector<double> out(t.value(v.id));
  for (double& x : out) x /= sv;
  return t.push(std::move(out), [v = v.id, s = s.id](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    const auto y = tp.value(self);
    const double sv = tp.value(s)[0];
    double gs = 0.0;
    auto& gv = tp.grad(v);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gv[i] += g[i] / sv;
      gs -= g[i] * y[i] / sv;
    }
    tp.grad(s)[0] += gs;
  });
}

Var affine(Var w, Var b, Var x, std::size_t rows, std::size_t cols) {
  Tape& t = *w.tape;
  const auto& wv = t.value(w.id);
  const auto& bv = t.value(b.id);
  const auto& xv = t.value(x.id);
  if (wv.size() != rows * cols || bv.size() != rows || xv.size() != cols)
    throw std::invalid_argument("affine shape mismatch");
  std::vector<double> out(bv);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wv[r * cols + c] * xv[c];
    out[r] += acc;
  }
  return t.push(std::move(out), [w = w.id, b = b.id, x = x.id, rows, cols](Tape& tp,
                                                                           std::size_t self) {
    const auto g = tp.grad(self);
    const auto wv = tp.value(w);
    const auto xv = tp.value(x);
    auto& gw = tp.grad(w);
    auto& gb = tp.grad(b);
    auto& gx = tp.grad(x);
    for (std::size_t r = 0; r < rows; ++r) {
      gb[r] += g[r];
      for (std::size_t c = 0; c < cols; ++c) {
        gw[r * cols + c] += g[r] * xv[c];
        gx[c] += g[r] * wv[r * cols + c];
      }
    }
  });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var softplus(Var a) {
  return unary(a, [](double x) { return numerics::softplus(x); },
               [](double x, double) { return numerics::sigmoid(x); });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return numerics::sigmoid(x); },
               [](double, double y) { return y * (1.0 - y); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  double s = 0.0;
  for (double x : t.value(a.id)) s += x;
  return t.push({s}, [a = a.id](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    for (double& x : tp.grad(a)) x += g;
  });
}

Var index(Var a, std::size_t i) {
  Tape& t = *a.tape;
  if (i >= a.size()) throw std::out_of_range("tape index out of range");
  return t.push({t.value(a.id)[i]}, [a = a.id, i](Tape& tp, std::size_t self) {
    tp.grad(a)[i] += tp.grad(self)[0];
  });
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  Tape& t = *a.tape;
  const auto& v = t.value(a.id);
  if (offset + length > v.size()) throw std::out_of_range("tape slice out of range");
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(offset),
                          v.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return t.push(std::move(out), [a = a.id, offset](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    auto& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat of nothing");
  Tape& t = *parts.front().tape;
  if (parts.size() == 1) return parts.front();
  std::vector<double> out;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    const auto& v = t.value(p.id);
    out.insert(out.end(), v.begin(), v.end());
    ids.push_back(p.id);
  }
  return t.push(std::move(out), [ids = std::move(ids)](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self);
    std::size_t offset = 0;
    for (std::size_t id : ids) {
      auto& gp = tp.grad(id);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
      offset += gp.size();
    }
  });
}

Var log_sum_exp(Var a) {
  Tape& t = *a.tape;
  const double v = numerics::log_sum_exp(t.value(a.id));
  return t.push({v}, [a = a.id](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    const double lse = tp.value(self)[0];
    const auto x = tp.value(a);
    auto& ga = tp.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * std::exp(x[i] - lse);
  });
}

Var gaussian_log_density(Var x, Var mean, Var scale) {
  same_size(x, mean);
  same_size(x, scale);
  Tape& t = *x.tape;
  const auto& xv = t.value(x.id);
  const auto& mv = t.value(mean.id);
  const auto& sv = t.value(scale.id);
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i)
    total += numerics::gaussian_log_density(xv[i], mv[i], sv[i]);
  return t.push({total}, [x = x.id, m = mean.id, s = scale.id](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    const auto xv = tp.value(x);
    const auto mv = tp.value(m);
    const auto sv = tp.value(s);
    auto& gx = tp.grad(x);
    auto& gm = tp.grad(m);
    auto& gs = tp.grad(s);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const bool clamped = sv[i] < numerics::kMinScale;
      const double sc = clamped ? numerics::kMinScale : sv[i];
      const double z = (xv[i] - mv[i]) / sc;
      gx[i] -= g * z / sc;
      gm[i] += g * z / sc;
      if (!clamped) gs[i] += g * (z * z - 1.0) / sc;
    }
  });
}

Var cbernoulli_log_density(Var x, Var lambda) {
  same_size(x, lambda);
  Tape& t = *x.tape;
  const auto& xv = t.value(x.id);
  const auto& lv = t.value(lambda.id);
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) total += numerics::cb_log_density(xv[i], lv[i]);
  return t.push({total}, [x = x.id, l = lambda.id](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    const auto xv = tp.value(x);
    const auto lv = tp.value(l);
    auto& gx = tp.grad(x);
    auto& gl = tp.grad(l);
    constexpr double lo = numerics::kLambdaClamp;
    constexpr double hi = 1.0 - numerics::kLambdaClamp;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double lam = numerics::clamp_lambda(lv[i]);
      const double xc = numerics::clamp_unit(xv[i]);
      if (xv[i] >= lo && xv[i] <= hi) gx[i] += g * (std::log(lam) - std::log1p(-lam));
      if (lv[i] >= lo && lv[i] <= hi)
        gl[i] += g * (xc / lam - (1.0 - xc) / (1.0 - lam) + numerics::cb_log_normalizer_grad(lam));
    }
  });
}

}  // namespace freecat::ad
