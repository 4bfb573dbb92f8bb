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

#include "freecat/model.hpp"

#include <cmath>
#include <stdexcept>

#include "freecat/error.hpp"

namespace freecat::model {

using category::Activation;
using category::Generator;
using category::PrimitiveKind;
using category::Term;
using category::value_dim;

std::string_view to_string(SectionId s) {
  switch (s) {
    case SectionId::theta: return "theta";
    case SectionId::dagger: return "dagger";
    case SectionId::hyper: return "hyper";
  }
  return "theta";
}

namespace {

template <typename Store, typename Fn>
void visit_blocks(Store& p, Fn&& fn) {
  auto walk = [&](SectionId id, auto& section) {
    for (auto& [owner, blocks] : section)
      for (auto& [name, block] : blocks) fn(id, owner, name, block);
  };
  walk(SectionId::theta, p.theta);
  walk(SectionId::dagger, p.dagger);
  walk(SectionId::hyper, p.hyper);
}

}  // namespace

void for_each_block(ParamStore& p,
                    const std::function<void(SectionId, const std::string&, const std::string&, Block&)>& fn) {
  visit_blocks(p, fn);
}

void for_each_block(const ParamStore& p,
                    const std::function<void(SectionId, const std::string&, const std::string&,
                                             const Block&)>& fn) {
  visit_blocks(p, fn);
}

ParamStore ParamStore::zeros_like() const {
  ParamStore z = *this;
  for_each_block(z, [](SectionId, const std::string&, const std::string&, Block& b) {
    std::fill(b.values.begin(), b.values.end(), 0.0);
  });
  return z;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for_each_block(*this, [&n](SectionId, const std::string&, const std::string&, const Block& b) {
    n += b.values.size();
  });
  return n;
}

namespace {

Block weights(std::size_t rows, std::size_t cols, Rng& rng) {
  Block b{rows, cols, std::vector<double>(rows * cols)};
  const double sd = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : b.values) v = sd * rng.normal();
  return b;
}

Block filled(std::size_t n, double v) { return {n, 1, std::vector<double>(n, v)}; }

BlockMap mlp_blocks(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  BlockMap m;
  m["w1"] = weights(hidden, in, rng);
  m["b1"] = filled(hidden, 0.0);
  m["w2"] = weights(out, hidden, rng);
  m["b2"] = filled(out, 0.0);
  return m;
}

bool has_dagger(const Generator& g) {
  switch (g.primitive.kind) {
    case PrimitiveKind::affine_gaussian:
    case PrimitiveKind::affine_cbernoulli:
      return true;
    default:
      return false;
  }
}

}  // namespace

ParamStore initialize(const category::CategorySpec& spec, Rng& rng) {
  ParamStore p;
  for (const auto& g : spec.generators()) {
    const auto& prim = g->primitive;
    const std::size_t m = value_dim(g->dom);
    const std::size_t n = value_dim(g->cod);
    switch (prim.kind) {
      case PrimitiveKind::gaussian_prior:
        p.theta[g->name]["mean"] = filled(n, 0.0);
        p.theta[g->name]["scale"] = filled(n, numerics::inverse_softplus(prim.init_scale));
        break;
      case PrimitiveKind::affine_gaussian:
        p.theta[g->name] = mlp_blocks(m, prim.hidden, n, rng);
        p.theta[g->name]["scale"] = filled(n, numerics::inverse_softplus(prim.init_scale));
        break;
      case PrimitiveKind::affine_cbernoulli:
        p.theta[g->name] = mlp_blocks(m, prim.hidden, n, rng);
        break;
      default:
        break;
    }
  }
  for (const auto& g : spec.generators()) {
    if (!has_dagger(*g)) continue;
    const std::size_t m = value_dim(g->dom);
    const std::size_t n = value_dim(g->cod);
    p.dagger[g->name] = mlp_blocks(n, g->primitive.hidden, m, rng);
    p.dagger[g->name]["scale"] = filled(m, numerics::inverse_softplus(1.0));
  }
  return p;
}

Binder::Binder(ad::Tape& tape, const ParamStore& params, ParamStore* grads)
    : tape_(tape), params_(params), grads_(grads) {}

ad::Var Binder::get(SectionId section, const std::string& owner, const std::string& block) {
  const auto key = std::make_tuple(static_cast<int>(section), owner, block);
  if (auto it = bound_.find(key); it != bound_.end()) return it->second;
  auto pick = [section](auto& store) -> auto& {
    switch (section) {
      case SectionId::theta: return store.theta;
      case SectionId::dagger: return store.dagger;
      case SectionId::hyper: return store.hyper;
    }
    return store.theta;
  };
  const Section& src = pick(params_);
  auto owner_it = src.find(owner);
  if (owner_it == src.end() || !owner_it->second.contains(block))
    throw SpecError("missing parameter block " + std::string(to_string(section)) + "." + owner + "." +
                    block);
  const Block& b = owner_it->second.at(block);
  std::span<double> sink;
  if (grads_ != nullptr) {
    Block& g = pick(*grads_)[owner][block];
    if (g.values.size() != b.values.size()) g = Block{b.rows, b.cols, std::vector<double>(b.values.size())};
    sink = g.values;
  }
  ad::Var v = tape_.parameter(b.values, sink);
  bound_.emplace(key, v);
  return v;
}

numerics::DistParams DistNode::params() const {
  const auto a = first.value();
  if (kind == numerics::DistKind::continuous_bernoulli)
    return numerics::DistParams::continuous_bernoulli({a.begin(), a.end()});
  const auto b = second.value();
  return {kind, {a.begin(), a.end()}, {b.begin(), b.end()}};
}

ad::Var DistNode::log_density(ad::Var x) const {
  if (kind == numerics::DistKind::continuous_bernoulli) return ad::cbernoulli_log_density(x, first);
  return ad::gaussian_log_density(x, first, second);
}

namespace {

ad::Var mlp(Binder& b, SectionId section, const std::string& owner, Activation act, ad::Var x,
            std::size_t in, std::size_t hidden, std::size_t out) {
  ad::Var h = ad::affine(b.get(section, owner, "w1"), b.get(section, owner, "b1"), x, hidden, in);
  if (act == Activation::tanh) h = ad::tanh(h);
  return ad::affine(b.get(section, owner, "w2"), b.get(section, owner, "b2"), h, out, hidden);
}

[[noreturn]] void not_executable(const Generator& g) {
  throw SpecError("generator '" + g.name + "' has no executable primitive (" +
                  std::string(category::to_string(g.primitive.kind)) + ")");
}

}  // namespace

DistNode forward_dist(const Generator& gen, Binder& binder, std::optional<ad::Var> input) {
  const auto& prim = gen.primitive;
  const std::size_t m = value_dim(gen.dom);
  const std::size_t n = value_dim(gen.cod);
  switch (prim.kind) {
    case PrimitiveKind::gaussian_prior:
      return {numerics::DistKind::gaussian, binder.get(SectionId::theta, gen.name, "mean"),
              ad::softplus(binder.get(SectionId::theta, gen.name, "scale"))};
    case PrimitiveKind::affine_gaussian: {
      if (!input) throw std::logic_error("affine generator without input");
      ad::Var mean = mlp(binder, SectionId::theta, gen.name, prim.activation, *input, m, prim.hidden, n);
      return {numerics::DistKind::gaussian, mean,
              ad::softplus(binder.get(SectionId::theta, gen.name, "scale"))};
    }
    case PrimitiveKind::affine_cbernoulli: {
      if (!input) throw std::logic_error("affine generator without input");
      ad::Var logits = mlp(binder, SectionId::theta, gen.name, prim.activation, *input, m, prim.hidden, n);
      return {numerics::DistKind::continuous_bernoulli, ad::sigmoid(logits), {}};
    }
    default:
      not_executable(gen);
  }
}

DistNode dagger_dist(const Generator& gen, Binder& binder, ad::Var output) {
  if (!has_dagger(gen)) not_executable(gen);
  const std::size_t m = value_dim(gen.dom);
  const std::size_t n = value_dim(gen.cod);
  ad::Var mean = mlp(binder, SectionId::dagger, gen.name, gen.primitive.activation, output, n,
                     gen.primitive.hidden, m);
  return {numerics::DistKind::gaussian, mean,
          ad::softplus(binder.get(SectionId::dagger, gen.name, "scale"))};
}

std::size_t Plan::latent_count() const {
  std::size_t n = 0;
  for (const auto& s : sites) n += s.observed ? 0 : 1;
  return n;
}

namespace {

std::vector<std::size_t> compile_into(const Morphism& m, std::vector<std::size_t> inputs, Plan& plan) {
  if (m.daggered()) throw SpecError("cannot execute a daggered morphism forward");
  switch (m.term()) {
    case Term::identity:
      return inputs;
    case Term::generator: {
      const auto& g = m.gen();
      if (g->primitive.kind == PrimitiveKind::none || g->is_macro) not_executable(*g);
      plan.sites.push_back({g, std::move(inputs), value_dim(g->cod), false, 0});
      return {plan.sites.size() - 1};
    }
    case Term::compose:
      return compile_into(m.right(), compile_into(m.left(), std::move(inputs), plan), plan);
    case Term::product: {
      auto a = compile_into(m.left(), {}, plan);
      auto b = compile_into(m.right(), {}, plan);
      a.insert(a.end(), b.begin(), b.end());
      return a;
    }
    case Term::macro:
      if (m.gen()->primitive.kind == PrimitiveKind::exponential_macro)
        throw SpecError("macro '" + m.gen()->name +
                        "' yields a morphism-valued latent, which is not executable");
      return compile_into(m.left(), std::move(inputs), plan);
  }
  return inputs;
}

}  // namespace

Plan compile(const Morphism& m) {
  if (m.dom()->kind != category::ObjectKind::unit)
    throw SpecError("only morphisms out of the unit object can be executed");
  Plan plan;
  plan.outputs = compile_into(m, {}, plan);
  std::size_t offset = 0;
  for (std::size_t s : plan.outputs) {
    plan.sites[s].observed = true;
    plan.sites[s].obs_offset = offset;
    offset += plan.sites[s].dim;
  }
  plan.obs_dim = offset;
  return plan;
}

namespace {

ad::Var site_input(ad::Tape& tape, const Site& site, const std::vector<ad::Var>& values) {
  std::vector<ad::Var> parts;
  for (std::size_t i : site.inputs) parts.push_back(values.at(i));
  (void)tape;
  return ad::concat(parts);
}

}  // namespace

Execution execute(const Morphism& m, const ParamStore& params, Rng& rng) {
  const Plan plan = compile(m);
  ad::Tape tape;
  Binder binder(tape, params);
  Execution out;
  std::vector<ad::Var> values(plan.sites.size());
  for (std::size_t s = 0; s < plan.sites.size(); ++s) {
    const Site& site = plan.sites[s];
    std::optional<ad::Var> input;
    if (!site.inputs.empty()) input = site_input(tape, site, values);
    const DistNode dist = forward_dist(*site.gen, binder, input);
    if (site.observed) {
      out.observation.push_back(dist.params());
      continue;
    }
    auto draw = numerics::sample(dist.params(), rng);
    values[s] = tape.constant(draw.value);
    out.trace.latents.push_back({site.gen->name, std::move(draw.value), draw.log_q});
  }
  return out;
}

std::vector<double> clamp_observation(const Plan& plan, std::span<const double> x) {
  if (x.size() != plan.obs_dim)
    throw SpecError("data vector has dimension " + std::to_string(x.size()) + ", expected " +
                    std::to_string(plan.obs_dim));
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t s : plan.outputs) {
    const Site& site = plan.sites[s];
    if (site.gen->primitive.kind != PrimitiveKind::affine_cbernoulli) continue;
    for (std::size_t i = 0; i < site.dim; ++i)
      out[site.obs_offset + i] = numerics::clamp_unit(out[site.obs_offset + i]);
  }
  return out;
}

double hyper_prior_logprob(double beta, const numerics::Matrix& w) {
  // Gamma(1, 1) is Exp(1): log density -x on x >= 0.
  if (!(beta > 0.0)) throw NumericalError("inverse temperature outside the Gamma support");
  double total = -beta;
  for (double x : w.data()) {
    if (!(x >= 0.0)) throw NumericalError("edge weight outside the Gamma support");
    total -= x;
  }
  return total;
}

JointLogProb joint_logprob(std::span<const double> x, const sampler::Trace& trace, const Morphism& m,
                           const transition::TransitionModel& tm, const ParamStore& params,
                           const sampler::WalkConfig& cfg) {
  const Plan plan = compile(m);
  const auto obs = clamp_observation(plan, x);
  if (trace.latents.size() != plan.latent_count())
    throw SpecError("trace holds " + std::to_string(trace.latents.size()) + " latents, morphism needs " +
                    std::to_string(plan.latent_count()));
  ad::Tape tape;
  Binder binder(tape, params);
  JointLogProb out;
  std::vector<ad::Var> values(plan.sites.size());
  std::size_t next_latent = 0;
  for (std::size_t s = 0; s < plan.sites.size(); ++s) {
    const Site& site = plan.sites[s];
    std::optional<ad::Var> input;
    if (!site.inputs.empty()) input = site_input(tape, site, values);
    const DistNode dist = forward_dist(*site.gen, binder, input);
    if (site.observed) {
      const auto begin = obs.begin() + static_cast<std::ptrdiff_t>(site.obs_offset);
      out.likelihood += dist.log_density(tape.constant(std::vector<double>(begin, begin + site.dim))).scalar();
      continue;
    }
    const auto& latent = trace.latents[next_latent++];
    if (latent.value.size() != site.dim) throw SpecError("latent '" + latent.generator + "' has wrong size");
    values[s] = tape.constant(latent.value);
    out.latent_prior += dist.log_density(values[s]).scalar();
  }
  const auto& g = tm.graph();
  out.path = sampler::path_logprob(tm, m, g.unit_vertex(), g.data_vertex(), cfg);
  out.hyper_prior = hyper_prior_logprob(tm.beta(), tm.weights());
  return out;
}

}  // namespace freecat::model
