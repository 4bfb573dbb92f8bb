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

#include "freecat/transition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "freecat/error.hpp"

namespace freecat::transition {

ArrowGraph::ArrowGraph(const category::CategorySpec& spec) {
  objects_.assign(spec.objects().begin(), spec.objects().end());
  generators_.assign(spec.generators().begin(), spec.generators().end());
  data_ = spec.data_index();
  for (const auto& o : objects_) names_.push_back(o->name);
  for (const auto& g : generators_) names_.push_back(g->name);

  const std::size_t n = size();
  out_.resize(n);
  adjacency_ = Matrix(n, n);
  for (std::size_t gi = 0; gi < generators_.size(); ++gi) {
    const VertexId v = generator_vertex(gi);
    const VertexId a = *spec.object_index(generators_[gi]->dom);
    const VertexId b = *spec.object_index(generators_[gi]->cod);
    dom_.push_back(a);
    cod_.push_back(b);
    out_[a].push_back(v);
    adjacency_(a, v) = 1.0;
    adjacency_(v, b) = 1.0;
  }

  reach_.assign(n * n, 0);
  for (VertexId s = 0; s < n; ++s) {
    std::vector<VertexId> stack{s};
    reach_[s * n + s] = 1;
    while (!stack.empty()) {
      const VertexId u = stack.back();
      stack.pop_back();
      for (VertexId w = 0; w < n; ++w) {
        if (adjacency_(u, w) == 0.0) continue;
        if (w == s) acyclic_ = false;
        if (!reach_[s * n + w]) {
          reach_[s * n + w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  exp_adjacency_ = std::make_shared<const Matrix>(numerics::mat_exp(adjacency_));
}

std::optional<VertexId> ArrowGraph::find(std::string_view name) const {
  for (VertexId v = 0; v < names_.size(); ++v)
    if (names_[v] == name) return v;
  return std::nullopt;
}

std::optional<VertexId> ArrowGraph::vertex_of(const category::Type& t) const {
  for (VertexId v = 0; v < objects_.size(); ++v)
    if (category::same_type(objects_[v], t)) return v;
  return std::nullopt;
}

std::shared_ptr<const ArrowGraph> arrow_graph(const category::CategorySpec& spec) {
  return std::make_shared<const ArrowGraph>(spec);
}

std::vector<double> row_logits(const ArrowGraph& g, const Matrix& w, double beta, VertexId row) {
  const std::size_t n = g.size();
  const auto e = g.exp_adjacency().row(row);
  std::vector<double> out(e.begin(), e.end());
  // (A·W)_{row,k} = sum over successors m of row of W_{m,k}.
  auto add_row = [&](VertexId m) {
    const auto wr = w.row(m);
    for (std::size_t k = 0; k < n; ++k) out[k] += wr[k];
  };
  if (g.is_generator(row)) {
    add_row(g.cod(row));
  } else {
    for (VertexId m : g.out_arrows(row)) add_row(m);
  }
  for (double& x : out) x = std::clamp(x / beta, -kLogitClamp, kLogitClamp);
  return out;
}

TransitionModel::TransitionModel(std::shared_ptr<const ArrowGraph> graph, Matrix w, double beta)
    : graph_(std::move(graph)), w_(std::move(w)), beta_(beta) {
  const std::size_t n = graph_->size();
  if (w_.rows() != n || w_.cols() != n)
    throw SpecError("weight matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  if (!(beta_ > 0.0) || !std::isfinite(beta_))
    throw SpecError("inverse temperature must be positive and finite");
  for (double x : w_.data())
    if (!(x >= 0.0) || !std::isfinite(x)) throw SpecError("weights must be finite and nonnegative");

  Matrix logits(n, n);
  for (VertexId i = 0; i < n; ++i) {
    const auto row = row_logits(*graph_, w_, beta_, i);
    std::copy(row.begin(), row.end(), logits.row(i).begin());
  }
  p_ = numerics::softmax_rows(logits, 1.0);
  log_p_ = Matrix(n, n);
  for (VertexId i = 0; i < n; ++i) {
    const double lse = numerics::log_sum_exp(logits.row(i));
    for (VertexId j = 0; j < n; ++j) log_p_(i, j) = logits(i, j) - lse;
  }
}

TransitionModel transition_matrix(std::shared_ptr<const ArrowGraph> graph, Matrix w, double beta) {
  return TransitionModel(std::move(graph), std::move(w), beta);
}

std::vector<double> intuitive_distance(const TransitionModel& tm, VertexId dst) {
  if (dst >= tm.graph().size()) throw std::out_of_range("destination vertex out of range");
  if (!tm.graph().is_object(dst)) throw SpecError("destination must be an object vertex");
  std::vector<double> d(tm.graph().size());
  for (VertexId i = 0; i < d.size(); ++i) {
    d[i] = tm.probability(i, dst) > 0.0 ? -tm.log_probability(i, dst)
                                        : std::numeric_limits<double>::infinity();
  }
  return d;
}

}  // namespace freecat::transition
