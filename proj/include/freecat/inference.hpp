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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "freecat/category.hpp"
#include "freecat/model.hpp"
#include "freecat/rng.hpp"
#include "freecat/sampler.hpp"
#include "freecat/tape.hpp"
#include "freecat/transition.hpp"

namespace freecat::inference {

using category::Morphism;
using model::ParamStore;
using numerics::Matrix;
using transition::VertexId;

/// Hyper-variables that can change the probability of some walk. β counts
/// when any reachable choice point has two or more candidates; a W row counts
/// when it is the codomain row of such a candidate. Everything else is drawn
/// from its Gamma(1,1) prior, so its proposal and prior terms cancel.
struct HyperLayout {
  bool beta = false;
  std::vector<VertexId> w_rows;
};

HyperLayout hyper_layout(const transition::ArrowGraph& g, const sampler::WalkConfig& cfg);

/// Owner key of a hyper-proposal head: "beta" or "W.<vertex name>".
std::string hyper_owner(const transition::ArrowGraph& g, VertexId row);

struct Context {
  std::shared_ptr<const transition::ArrowGraph> graph;
  sampler::WalkConfig walk;
  HyperLayout layout;
  std::size_t data_dim = 0;
  std::set<std::string> frozen;  // generators whose theta is not trained
};

Context make_context(const category::CategorySpec& spec, const sampler::WalkConfig& walk);

/// Heads start at weight 0, log-mean bias -0.5 and log-scale bias 0, so each
/// proposed entry has mean 1 like its prior.
void init_hyper(ParamStore& params, const Context& ctx);
ParamStore init_params(const category::CategorySpec& spec, const Context& ctx, Rng& rng);

/// Random numbers consumed by one proposal. Recording them lets a sample be
/// rebuilt exactly under different parameters.
struct Noise {
  std::vector<double> hyper;      // standard normals, layout order
  double beta_prior = 1.0;        // used when β is not proposed
  std::vector<double> w_prior;    // |V'|^2 Gamma(1,1) draws
  std::optional<Morphism> morphism;
  std::vector<std::vector<double>> latent;  // one standard-normal block per dagger draw
};

struct ElboParts {
  double likelihood = 0.0;
  double latent_prior = 0.0;
  double latent_proposal = 0.0;
  double hyper_prior = 0.0;
  double hyper_proposal = 0.0;
  double path_prior = 0.0;
  double path_proposal = 0.0;

  double value() const {
    return likelihood + latent_prior - latent_proposal + hyper_prior - hyper_proposal + path_prior -
           path_proposal;
  }
  ElboParts& operator+=(const ElboParts& o);
  ElboParts scaled(double s) const;
};

/// One draw from q and everything needed to differentiate it. `ell` is
/// log p - log q without the path terms (they cancel); `logq_discrete` is the
/// differentiable log-probability of the walk's choices.
struct Sample {
  std::unique_ptr<ad::Tape> tape;
  ad::Var ell;
  ad::Var logq_discrete;
  ElboParts parts;
  Morphism morphism;
  sampler::Trace trace;
  double beta = 1.0;
  Matrix w;
  Noise noise;
};

/// Draws a fresh proposal from `rng`, or rebuilds the one recorded in
/// `replay`. When `grads` is given, backward() on the sample's tape
/// accumulates into it.
Sample build_sample(const Context& ctx, std::span<const double> x, std::span<const double> summary,
                    const ParamStore& params, ParamStore* grads, Rng* rng,
                    const Noise* replay = nullptr);

/// Per-sample surrogate ell + (ell_value - baseline) * logq_discrete, with
/// the bracket held constant.
ad::Var surrogate_term(const Sample& s, double baseline);

struct Proposal {
  Morphism morphism;
  sampler::Trace trace;
  double beta = 1.0;
  Matrix w;
  double logq_total = 0.0;
};

Proposal propose(const Context& ctx, std::span<const double> x, const ParamStore& params, Rng& rng,
                 std::optional<std::span<const double>> summary = std::nullopt);

struct ElboEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double surrogate = 0.0;
  double baseline = 0.0;
  ElboParts parts;  // means
  std::size_t samples = 0;
};

/// Monte-Carlo ELBO of one datapoint. The summary defaults to x itself.
ElboEstimate elbo(const Context& ctx, std::span<const double> x, const ParamStore& params,
                  std::size_t n_samples, Rng& rng,
                  std::optional<std::span<const double>> summary = std::nullopt,
                  double baseline = 0.0);

/// Per-sample record for surrogate_loss.
struct SurrogateRecord {
  ad::Var ell;
  ad::Var logq_discrete;
  double baseline = 0.0;
};

/// mean[ell + stopgrad(ell - b) * logq_discrete]. All records share a tape.
ad::Var surrogate_loss(std::span<const SurrogateRecord> records);

using Dataset = std::vector<std::vector<double>>;

std::vector<double> batch_mean(const Dataset& data, std::span<const std::size_t> rows);

struct DatasetElbo {
  double value = 0.0;
  double std_error = 0.0;
  ElboParts parts;
};

/// Mean ELBO over every row, summary = whole-dataset mean. Row i draws from
/// a stream keyed by its values, so the result does not depend on row order.
DatasetElbo evaluate(const Context& ctx, const Dataset& data, const ParamStore& params,
                     std::size_t n_samples, const Rng& rng);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double step_size = 1e-3;
  double momentum = 0.9;
  double clip_norm = 10.0;
  std::size_t elbo_samples = 1;
  double baseline_decay = 0.95;
  // Stop after this many optimizer steps (0 = no limit).
  std::size_t max_updates = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double elbo = 0.0;
  double path_logprob = 0.0;
  double baseline = 0.0;
};

struct TrainState {
  ParamStore params;
  std::size_t steps = 0;
  double baseline = 0.0;
  bool baseline_ready = false;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochMetrics> metrics;
};

/// Minibatch SGD with momentum, ascending the surrogate. Throws
/// NumericalError naming the block on a non-finite gradient.
TrainResult train(const Context& ctx, const Dataset& data, TrainState init, const TrainConfig& cfg,
                  const Rng& rng);

/// Walk proposals under q(β, W | summary): signature -> frequency.
std::map<std::string, double> structure_posterior(const Context& ctx, const Dataset& data,
                                                  const ParamStore& params, std::size_t n_samples,
                                                  Rng& rng);

}  // namespace freecat::inference
