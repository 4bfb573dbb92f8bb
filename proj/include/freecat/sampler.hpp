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
#include <string>
#include <utility>
#include <vector>

#include "freecat/category.hpp"
#include "freecat/rng.hpp"
#include "freecat/transition.hpp"

namespace freecat::sampler {

using category::Morphism;
using transition::TransitionModel;
using transition::VertexId;

struct WalkConfig {
  // Generators required on the top-level walk before the destination may be
  // entered. Macro sub-walks use 0.
  std::size_t min_generators = 2;
  std::size_t max_steps = 64;
  std::size_t max_macro_depth = 3;

  void validate() const;
};

/// One Categorical draw of the walk.
struct ChoiceRecord {
  VertexId location = 0;
  VertexId destination = 0;
  std::vector<VertexId> candidates;  // after filtering
  VertexId chosen = 0;
  double logprob = 0.0;
};

struct LatentRecord {
  std::string generator;
  std::vector<double> value;
  double log_density = 0.0;
};

struct Trace {
  std::vector<ChoiceRecord> choices;
  std::vector<LatentRecord> latents;
  double total_path_logprob = 0.0;

  void append(const Trace& other);
};

struct Walk {
  Morphism morphism;
  Trace trace;
};

/// Arrows a walk may take next. An arrow is admissible when the walk can
/// still finish from its codomain: reach the destination without passing
/// through it, with between min_generators and max_steps generators in
/// total, and, for a macro, with every sub-walk finishable one nesting level
/// deeper. Branches that cannot finish are pruned before scoring, so a walk
/// that has any candidates at its start never gets stuck or overruns.
class CandidateFilter {
 public:
  CandidateFilter(const transition::ArrowGraph& g, const WalkConfig& cfg);

  /// `depth` counts enclosing macro expansions (0 for the top-level walk).
  std::vector<VertexId> operator()(VertexId location, VertexId destination, std::size_t taken,
                                   std::size_t min_generators, std::size_t depth) const;
  /// Whether any walk src -> dst exists at this depth.
  bool feasible(VertexId src, VertexId dst, std::size_t min_generators, std::size_t depth) const;

 private:
  bool reaches(std::size_t depth, VertexId dst, VertexId v, std::size_t lo, std::size_t hi) const;

  const transition::ArrowGraph& g_;
  std::size_t max_steps_;
  std::size_t max_depth_;
  std::vector<std::vector<char>> usable_;  // [depth][generator index]
  // [depth][dst][v * (max_steps + 1) + k]: a k-arrow walk v -> dst that
  // meets dst only at its end
  std::vector<std::vector<std::vector<char>>> reach_;
};

/// Log-probability of picking `chosen` among `cands`: P_{a,dst} renormalized
/// over the candidate set.
double choice_logprob(const TransitionModel& tm, std::span<const VertexId> cands, VertexId chosen,
                      VertexId destination);

/// Biased random walk from src to dst (object vertices). Never rejects:
/// exceeding max_steps or running out of candidates throws SamplingError.
Walk path_between(const TransitionModel& tm, VertexId src, VertexId dst, const WalkConfig& cfg,
                  Rng& rng);

/// Expands a product macro ⊤ → (A,B) into independent walks ⊤ → A and ⊤ → B,
/// or an exponential macro B^A into a walk A → B. `depth` counts enclosing
/// expansions including this one.
Walk expand_macro(const TransitionModel& tm, VertexId macro, const WalkConfig& cfg, Rng& rng,
                  std::size_t depth = 1);

/// Replays m's generator chain through the same candidate rule and returns
/// the choices the walk would have made. Throws SamplingError if m is not a
/// walk under cfg.
Trace replay(const TransitionModel& tm, const Morphism& m, VertexId src, VertexId dst,
             const WalkConfig& cfg);

double path_logprob(const TransitionModel& tm, const Morphism& m, VertexId src, VertexId dst,
                    const WalkConfig& cfg);

/// Every walk from src to dst with its probability. Acyclic graphs only.
std::vector<std::pair<Morphism, double>> enumerate_paths(const TransitionModel& tm, VertexId src,
                                                         VertexId dst, const WalkConfig& cfg,
                                                         std::size_t limit = 100000);

/// Objects at which a ⊤ → data walk can run out of candidates under cfg.
std::vector<std::string> feasibility_warnings(const transition::ArrowGraph& g,
                                              const WalkConfig& cfg);

}  // namespace freecat::sampler
