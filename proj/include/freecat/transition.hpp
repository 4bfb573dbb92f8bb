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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freecat/category.hpp"
#include "freecat/numerics.hpp"

namespace freecat::transition {

using numerics::Matrix;
using VertexId = std::size_t;

/// Logits are clamped to this range before the row softmax.
inline constexpr double kLogitClamp = 80.0;

/// The directed graph G' in which every generator f : A → B becomes a vertex
/// with a single in-edge from A and a single out-edge to B. Vertices are the
/// objects in declaration order followed by the generators in declaration
/// order (macros last). e^A is computed once here and never changes.
class ArrowGraph {
 public:
  explicit ArrowGraph(const category::CategorySpec& spec);

  std::size_t size() const noexcept { return names_.size(); }
  std::size_t object_count() const noexcept { return objects_.size(); }

  bool is_object(VertexId v) const { return v < objects_.size(); }
  bool is_generator(VertexId v) const { return v >= objects_.size() && v < size(); }
  const std::string& name(VertexId v) const { return names_.at(v); }
  std::optional<VertexId> find(std::string_view name) const;

  VertexId object_vertex(std::size_t object_index) const { return object_index; }
  VertexId generator_vertex(std::size_t generator_index) const {
    return objects_.size() + generator_index;
  }
  VertexId unit_vertex() const { return 0; }
  VertexId data_vertex() const { return data_; }

  const category::Type& object(VertexId v) const { return objects_.at(v); }
  const category::GeneratorRef& generator(VertexId v) const {
    return generators_.at(v - objects_.size());
  }
  /// Object vertices at either end of a generator vertex.
  VertexId dom(VertexId gen) const { return dom_.at(gen - objects_.size()); }
  VertexId cod(VertexId gen) const { return cod_.at(gen - objects_.size()); }
  /// Generator vertices leaving an object vertex, in declaration order.
  std::span<const VertexId> out_arrows(VertexId object) const { return out_.at(object); }
  std::optional<VertexId> vertex_of(const category::Type& t) const;

  /// True if there is a directed path (possibly empty) from u to v.
  bool reaches(VertexId u, VertexId v) const { return reach_[u * size() + v] != 0; }
  bool acyclic() const noexcept { return acyclic_; }

  const Matrix& adjacency() const noexcept { return adjacency_; }
  const Matrix& exp_adjacency() const noexcept { return *exp_adjacency_; }
  std::shared_ptr<const Matrix> shared_exp_adjacency() const noexcept { return exp_adjacency_; }

 private:
  std::vector<category::Type> objects_;
  std::vector<category::GeneratorRef> generators_;
  std::vector<std::string> names_;
  std::vector<VertexId> dom_;
  std::vector<VertexId> cod_;
  std::vector<std::vector<VertexId>> out_;
  std::vector<char> reach_;
  bool acyclic_ = true;
  VertexId data_ = 0;
  Matrix adjacency_;
  std::shared_ptr<const Matrix> exp_adjacency_;
};

std::shared_ptr<const ArrowGraph> arrow_graph(const category::CategorySpec& spec);

/// Logits (1/β)(e^A + A·W) for one row, clamped to ±kLogitClamp. Only the
/// W row of the vertex's successor(s) enters, since A is 0/1 with the
/// arrow-graph sparsity.
std::vector<double> row_logits(const ArrowGraph& g, const Matrix& w, double beta, VertexId row);

/// Row-stochastic biased-walk matrix P = softmax_rows((e^A + A·W)/β).
class TransitionModel {
 public:
  TransitionModel(std::shared_ptr<const ArrowGraph> graph, Matrix w, double beta);

  const ArrowGraph& graph() const noexcept { return *graph_; }
  std::shared_ptr<const ArrowGraph> shared_graph() const noexcept { return graph_; }
  const Matrix& exp_adjacency() const noexcept { return graph_->exp_adjacency(); }
  const Matrix& weights() const noexcept { return w_; }
  double beta() const noexcept { return beta_; }
  const Matrix& probabilities() const noexcept { return p_; }
  double probability(VertexId i, VertexId j) const { return p_(i, j); }
  /// log P_{i,j} computed directly from the logits (no underflow to -inf).
  double log_probability(VertexId i, VertexId j) const { return log_p_(i, j); }

 private:
  std::shared_ptr<const ArrowGraph> graph_;
  Matrix w_;
  double beta_;
  Matrix p_;
  Matrix log_p_;
};

TransitionModel transition_matrix(std::shared_ptr<const ArrowGraph> graph, Matrix w, double beta);

/// d_i = -log P_{i,dst}; +inf where the probability is exactly zero.
std::vector<double> intuitive_distance(const TransitionModel& tm, VertexId dst);

}  // namespace freecat::transition
