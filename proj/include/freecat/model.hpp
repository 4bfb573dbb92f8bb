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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "freecat/category.hpp"
#include "freecat/numerics.hpp"
#include "freecat/rng.hpp"
#include "freecat/sampler.hpp"
#include "freecat/tape.hpp"
#include "freecat/transition.hpp"

namespace freecat::model {

using category::GeneratorRef;
using category::Morphism;

struct Block {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  bool operator==(const Block&) const = default;
};

using BlockMap = std::map<std::string, Block>;
using Section = std::map<std::string, BlockMap>;

/// θ (forward generators), φ (daggers and hyper-proposal heads), each keyed
/// by owner then block name, e.g. theta["f"]["w1"].
struct ParamStore {
  Section theta;
  Section dagger;
  Section hyper;

  ParamStore zeros_like() const;
  std::size_t scalar_count() const;
  bool operator==(const ParamStore&) const = default;
};

enum class SectionId { theta, dagger, hyper };
std::string_view to_string(SectionId s);

void for_each_block(ParamStore& p,
                    const std::function<void(SectionId, const std::string&, const std::string&, Block&)>& fn);
void for_each_block(const ParamStore& p,
                    const std::function<void(SectionId, const std::string&, const std::string&,
                                             const Block&)>& fn);

/// Forward and dagger parameters for every executable generator. Affine
/// weights ~ Normal(0, 1/sqrt(fan-in)), biases 0, pre-softplus scales set so
/// softplus gives the configured initial scale.
ParamStore initialize(const category::CategorySpec& spec, Rng& rng);

/// Exposes parameter blocks as tape leaves, once per block per tape. When a
/// gradient store is given, backward() accumulates into its matching blocks.
class Binder {
 public:
  Binder(ad::Tape& tape, const ParamStore& params, ParamStore* grads = nullptr);

  ad::Tape& tape() noexcept { return tape_; }
  ad::Var get(SectionId section, const std::string& owner, const std::string& block);

 private:
  ad::Tape& tape_;
  const ParamStore& params_;
  ParamStore* grads_;
  std::map<std::tuple<int, std::string, std::string>, ad::Var> bound_;
};

/// A distribution whose parameters live on a tape.
struct DistNode {
  numerics::DistKind kind = numerics::DistKind::gaussian;
  ad::Var first;   // gaussian mean or continuous-Bernoulli lambda
  ad::Var second;  // gaussian scale

  numerics::DistParams params() const;
  ad::Var log_density(ad::Var x) const;
};

/// p_θ(output | input) of a generator; input is absent for ⊤-domain priors.
DistNode forward_dist(const category::Generator& gen, Binder& binder, std::optional<ad::Var> input);
/// q_φ(input | output) of a generator's stochastic inverse (always Gaussian).
DistNode dagger_dist(const category::Generator& gen, Binder& binder, ad::Var output);

/// Dataflow form of a ⊤ → X morphism: one site per generator application.
/// Sites consuming no input are priors; sites listed in `outputs` produce the
/// observation, everything else emits a latent consumed by exactly one site.
struct Site {
  GeneratorRef gen;
  std::vector<std::size_t> inputs;
  std::size_t dim = 0;
  bool observed = false;
  std::size_t obs_offset = 0;
};

struct Plan {
  std::vector<Site> sites;
  std::vector<std::size_t> outputs;
  std::size_t obs_dim = 0;

  std::size_t latent_count() const;
};

/// Throws SpecError for generators without an executable primitive and for
/// exponential (morphism-valued) macros.
Plan compile(const Morphism& m);

struct Execution {
  sampler::Trace trace;  // latents only
  std::vector<numerics::DistParams> observation;  // one block per output site
};

/// Forward-samples every latent of m and returns the unevaluated observation
/// distribution.
Execution execute(const Morphism& m, const ParamStore& params, Rng& rng);

struct JointLogProb {
  double likelihood = 0.0;    // log p(X | Z, f)
  double latent_prior = 0.0;  // log p(Z | f)
  double path = 0.0;          // log p_G(f | β, W)
  double hyper_prior = 0.0;   // log p(β) + log p(W)

  double total() const { return likelihood + latent_prior + path + hyper_prior; }
};

/// log Gamma(1,1) of β and of every entry of W.
double hyper_prior_logprob(double beta, const numerics::Matrix& w);

JointLogProb joint_logprob(std::span<const double> x, const sampler::Trace& trace, const Morphism& m,
                           const transition::TransitionModel& tm, const ParamStore& params,
                           const sampler::WalkConfig& cfg);

/// Morphism-shaped inverse plan: (f;g)† = g†;f†, Gen(f)† is f's stochastic
/// inverse, identities are fixed and products split.
using category::dagger;

/// Observation values are clamped into the continuous-Bernoulli support.
std::vector<double> clamp_observation(const Plan& plan, std::span<const double> x);

struct Checkpoint {
  std::uint64_t spec_hash = 0;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  double baseline = 0.0;
  bool baseline_ready = false;
  ParamStore params;

  bool operator==(const Checkpoint&) const = default;
};

/// JSON document; doubles are written with 17 significant digits so values
/// round-trip exactly.
std::string write_checkpoint(const Checkpoint& c);
Checkpoint read_checkpoint(std::string_view text);

}  // namespace freecat::model
