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

#include "freecat/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <tuple>

#include "freecat/error.hpp"

namespace freecat::inference {

using category::PrimitiveKind;
using model::SectionId;
using transition::ArrowGraph;

namespace {

constexpr double kPathTolerance = 1e-12;

struct WalkState {
  VertexId loc, dst;
  std::size_t taken, min, depth;
  bool operator<(const WalkState& o) const {
    return std::tie(loc, dst, taken, min, depth) < std::tie(o.loc, o.dst, o.taken, o.min, o.depth);
  }
};

}  // namespace

HyperLayout hyper_layout(const ArrowGraph& g, const sampler::WalkConfig& cfg) {
  HyperLayout out;
  std::set<VertexId> rows;
  std::set<WalkState> seen;
  const sampler::CandidateFilter filter(g, cfg);
  std::vector<WalkState> todo{{g.unit_vertex(), g.data_vertex(), 0, cfg.min_generators, 0}};
  auto push = [&](WalkState s) {
    if (seen.insert(s).second) todo.push_back(s);
  };
  seen.insert(todo.front());
  while (!todo.empty()) {
    const WalkState s = todo.back();
    todo.pop_back();
    if (s.loc == s.dst && s.taken >= s.min) continue;
    const auto cands = filter(s.loc, s.dst, s.taken, s.min, s.depth);
    if (cands.size() >= 2) {
      out.beta = true;
      for (VertexId c : cands) rows.insert(g.cod(c));
    }
    for (VertexId c : cands) {
      const auto& gen = g.generator(c);
      if (gen->is_macro) {
        const VertexId a = *g.vertex_of(gen->cod->left);
        const VertexId b = *g.vertex_of(gen->cod->right);
        if (gen->primitive.kind == PrimitiveKind::product_macro) {
          push({g.unit_vertex(), a, 0, 0, s.depth + 1});
          push({g.unit_vertex(), b, 0, 0, s.depth + 1});
        } else {
          push({a, b, 0, 0, s.depth + 1});
        }
      }
      push({g.cod(c), s.dst, s.taken + 1, s.min, s.depth});
    }
  }
  out.w_rows.assign(rows.begin(), rows.end());
  return out;
}

std::string hyper_owner(const ArrowGraph& g, VertexId row) { return "W." + g.name(row); }

Context make_context(const category::CategorySpec& spec, const sampler::WalkConfig& walk) {
  walk.validate();
  Context ctx;
  ctx.graph = transition::arrow_graph(spec);
  ctx.walk = walk;
  ctx.layout = hyper_layout(*ctx.graph, walk);
  ctx.data_dim = category::value_dim(spec.data_object());
  for (const auto& g : spec.generators())
    if (!g->primitive.trainable) ctx.frozen.insert(g->name);
  return ctx;
}

namespace {

void add_head(ParamStore& p, const std::string& owner, std::size_t k, std::size_t d) {
  auto& blocks = p.hyper[owner];
  blocks["mean_w"] = {k, d, std::vector<double>(k * d, 0.0)};
  blocks["mean_b"] = {k, 1, std::vector<double>(k, -0.5)};
  blocks["logscale_w"] = {k, d, std::vector<double>(k * d, 0.0)};
  blocks["logscale_b"] = {k, 1, std::vector<double>(k, 0.0)};
}

}  // namespace

void init_hyper(ParamStore& params, const Context& ctx) {
  params.hyper.clear();
  if (ctx.layout.beta) add_head(params, "beta", 1, ctx.data_dim);
  for (VertexId r : ctx.layout.w_rows)
    add_head(params, hyper_owner(*ctx.graph, r), ctx.graph->size(), ctx.data_dim);
}

ParamStore init_params(const category::CategorySpec& spec, const Context& ctx, Rng& rng) {
  ParamStore p = model::initialize(spec, rng);
  init_hyper(p, ctx);
  return p;
}

ElboParts& ElboParts::operator+=(const ElboParts& o) {
  likelihood += o.likelihood;
  latent_prior += o.latent_prior;
  latent_proposal += o.latent_proposal;
  hyper_prior += o.hyper_prior;
  hyper_proposal += o.hyper_proposal;
  path_prior += o.path_prior;
  path_proposal += o.path_proposal;
  return *this;
}

ElboParts ElboParts::scaled(double s) const {
  ElboParts out = *this;
  out.likelihood *= s;
  out.latent_prior *= s;
  out.latent_proposal *= s;
  out.hyper_prior *= s;
  out.hyper_proposal *= s;
  out.path_prior *= s;
  out.path_proposal *= s;
  return out;
}

namespace {

std::vector<double> normals(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (double& v : out) v = rng.normal();
  return out;
}

struct HyperDraw {
  std::optional<ad::Var> beta;            // proposed β
  std::map<VertexId, ad::Var> rows;       // proposed W rows
  ad::Var log_q;
  ad::Var log_prior;
  double beta_value = 1.0;
  Matrix w;
};

// Log-normal draw exp(mu + sigma * eps) for one head.
std::pair<ad::Var, ad::Var> lognormal_head(model::Binder& b, const std::string& owner, ad::Var summary,
                                          std::size_t k, std::size_t d, std::span<const double> eps) {
  ad::Tape& t = b.tape();
  ad::Var mu = ad::affine(b.get(SectionId::hyper, owner, "mean_w"), b.get(SectionId::hyper, owner, "mean_b"),
                          summary, k, d);
  ad::Var sigma = ad::exp(ad::affine(b.get(SectionId::hyper, owner, "logscale_w"),
                                     b.get(SectionId::hyper, owner, "logscale_b"), summary, k, d));
  ad::Var u = mu + sigma * t.constant(std::vector<double>(eps.begin(), eps.end()));
  ad::Var log_q = ad::gaussian_log_density(u, mu, sigma) - ad::sum(u);
  return {ad::exp(u), log_q};
}

HyperDraw draw_hyper(const Context& ctx, model::Binder& b, std::span<const double> summary, Noise& noise,
                     Rng* rng, bool replaying) {
  const ArrowGraph& g = *ctx.graph;
  const std::size_t n = g.size();
  const std::size_t d = ctx.data_dim;
  ad::Tape& t = b.tape();
  std::size_t needed = (ctx.layout.beta ? 1 : 0) + n * ctx.layout.w_rows.size();
  if (!replaying) {
    noise.hyper = normals(needed, *rng);
    noise.beta_prior = rng->gamma(1.0);
    noise.w_prior.resize(n * n);
    for (double& v : noise.w_prior) v = rng->gamma(1.0);
  } else if (noise.hyper.size() != needed || noise.w_prior.size() != n * n) {
    throw std::invalid_argument("replayed noise does not match the hyper layout");
  }
  HyperDraw out;
  out.w = Matrix(n, n);
  std::copy(noise.w_prior.begin(), noise.w_prior.end(), out.w.data().begin());
  out.beta_value = noise.beta_prior;

  ad::Var s = t.constant(std::vector<double>(summary.begin(), summary.end()));
  std::vector<ad::Var> log_q{t.constant(0.0)};
  // Prior terms of entries drawn from the prior are constants.
  double fixed_prior = 0.0;
  std::vector<ad::Var> log_prior;
  std::size_t offset = 0;
  if (ctx.layout.beta) {
    auto [v, lq] = lognormal_head(b, "beta", s, 1, d, std::span(noise.hyper).subspan(offset, 1));
    offset += 1;
    out.beta = v;
    out.beta_value = v.scalar();
    log_q.push_back(lq);
    log_prior.push_back(ad::neg(v));
  } else {
    fixed_prior -= out.beta_value;
  }
  std::vector<char> proposed(n, 0);
  for (VertexId r : ctx.layout.w_rows) {
    auto [v, lq] = lognormal_head(b, hyper_owner(g, r), s, n, d, std::span(noise.hyper).subspan(offset, n));
    offset += n;
    proposed[r] = 1;
    out.rows.emplace(r, v);
    const auto vals = v.value();
    for (std::size_t j = 0; j < n; ++j) out.w(r, j) = vals[j];
    log_q.push_back(lq);
    log_prior.push_back(ad::neg(ad::sum(v)));
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (proposed[r]) continue;
    for (std::size_t j = 0; j < n; ++j) fixed_prior -= out.w(r, j);
  }
  // q equals the prior on these entries
  log_prior.push_back(t.constant(fixed_prior));
  log_q.push_back(t.constant(fixed_prior));
  out.log_q = ad::sum(ad::concat(log_q));
  out.log_prior = ad::sum(ad::concat(log_prior));
  return out;
}

// log q of the walk's choices as a function of the proposed β and W rows.
ad::Var path_logprob_var(const Context& ctx, const HyperDraw& h, const sampler::Trace& trace, ad::Tape& t) {
  const ArrowGraph& g = *ctx.graph;
  const Matrix& e = g.exp_adjacency();
  const std::size_t n = g.size();
  std::vector<ad::Var> terms{t.constant(0.0)};
  for (const auto& c : trace.choices) {
    if (c.candidates.size() < 2) continue;
    if (!h.beta) throw std::logic_error("multi-candidate choice without a proposed beta");
    std::vector<ad::Var> scores;
    std::size_t chosen = 0;
    for (std::size_t i = 0; i < c.candidates.size(); ++i) {
      const VertexId a = c.candidates[i];
      auto row = h.rows.find(g.cod(a));
      if (row == h.rows.end()) throw std::logic_error("candidate row missing from the hyper layout");
      std::vector<double> e_row(n);
      for (std::size_t j = 0; j < n; ++j) e_row[j] = e(a, j);
      ad::Var logits = ad::clamp(ad::div_scalar(ad::add_const(row->second, e_row), *h.beta),
                                 -transition::kLogitClamp, transition::kLogitClamp);
      scores.push_back(ad::index(logits, c.destination) - ad::log_sum_exp(logits));
      if (a == c.chosen) chosen = i;
    }
    terms.push_back(scores[chosen] - ad::log_sum_exp(ad::concat(scores)));
  }
  return ad::sum(ad::concat(terms));
}

ad::Var total(ad::Tape& t, const std::vector<ad::Var>& parts) {
  if (parts.empty()) return t.constant(0.0);
  return ad::sum(ad::concat(parts));
}

}  // namespace

Sample build_sample(const Context& ctx, std::span<const double> x, std::span<const double> summary,
                    const ParamStore& params, ParamStore* grads, Rng* rng, const Noise* replay) {
  if (x.size() != ctx.data_dim || summary.size() != ctx.data_dim)
    throw SpecError("data vector has dimension " + std::to_string(x.size()) + ", expected " +
                    std::to_string(ctx.data_dim));
  if (!replay && !rng) throw std::invalid_argument("build_sample needs an rng or recorded noise");
  auto tape = std::make_unique<ad::Tape>();
  ad::Tape& t = *tape;
  model::Binder b(t, params, grads);
  Noise noise = replay ? *replay : Noise{};
  const bool replaying = replay != nullptr;

  HyperDraw h = draw_hyper(ctx, b, summary, noise, rng, replaying);
  const transition::TransitionModel tm(ctx.graph, h.w, h.beta_value);
  const ArrowGraph& g = *ctx.graph;

  sampler::Trace trace;
  std::optional<Morphism> m;
  if (replaying) {
    if (!noise.morphism) throw std::invalid_argument("replayed noise has no morphism");
    m = *noise.morphism;
    trace = sampler::replay(tm, *m, g.unit_vertex(), g.data_vertex(), ctx.walk);
  } else {
    auto walk = sampler::path_between(tm, g.unit_vertex(), g.data_vertex(), ctx.walk, *rng);
    m = walk.morphism;
    trace = std::move(walk.trace);
    noise.morphism = m;
  }

  ElboParts parts;
  parts.path_proposal = trace.total_path_logprob;
  parts.path_prior = sampler::path_logprob(tm, *m, g.unit_vertex(), g.data_vertex(), ctx.walk);
  if (!(std::abs(parts.path_prior - parts.path_proposal) < kPathTolerance))
    throw NumericalError("path terms of joint and proposal differ by " +
                         std::to_string(parts.path_prior - parts.path_proposal));
  ad::Var logq_discrete = path_logprob_var(ctx, h, trace, t);

  // Latents: daggers in reverse site order, then the forward densities.
  const model::Plan plan = model::compile(*m);
  const auto obs = model::clamp_observation(plan, x);
  std::vector<std::optional<ad::Var>> value(plan.sites.size());
  for (std::size_t s : plan.outputs) {
    const auto& site = plan.sites[s];
    const auto begin = obs.begin() + static_cast<std::ptrdiff_t>(site.obs_offset);
    value[s] = t.constant(std::vector<double>(begin, begin + site.dim));
  }
  std::vector<ad::Var> latent_q;
  std::size_t draw = 0;
  if (!replaying) noise.latent.clear();
  std::vector<sampler::LatentRecord> latents(plan.sites.size());
  for (std::size_t s = plan.sites.size(); s-- > 0;) {
    const auto& site = plan.sites[s];
    if (site.inputs.empty()) continue;
    if (!value[s]) throw std::logic_error("site output missing during dagger pass");
    const model::DistNode q = model::dagger_dist(*site.gen, b, *value[s]);
    const std::size_t in_dim = q.first.size();
    if (!replaying) noise.latent.push_back(normals(in_dim, *rng));
    if (draw >= noise.latent.size() || noise.latent[draw].size() != in_dim)
      throw std::invalid_argument("replayed latent noise does not match the plan");
    ad::Var z = q.first + q.second * t.constant(noise.latent[draw++]);
    ad::Var lq = q.log_density(z);
    latent_q.push_back(lq);
    std::size_t off = 0;
    for (std::size_t in : site.inputs) {
      const auto& src = plan.sites[in];
      value[in] = ad::slice(z, off, src.dim);
      const auto v = value[in]->value();
      latents[in] = {src.gen->name, {v.begin(), v.end()}, 0.0};
      off += src.dim;
    }
    // joint density of all inputs, kept on the first one
    latents[site.inputs.front()].log_density = lq.scalar();
  }
  std::vector<ad::Var> lik, prior;
  for (std::size_t s = 0; s < plan.sites.size(); ++s) {
    const auto& site = plan.sites[s];
    std::optional<ad::Var> input;
    if (!site.inputs.empty()) {
      std::vector<ad::Var> parts_in;
      for (std::size_t in : site.inputs) parts_in.push_back(*value[in]);
      input = ad::concat(parts_in);
    }
    const model::DistNode p = model::forward_dist(*site.gen, b, input);
    if (site.observed) {
      lik.push_back(p.log_density(*value[s]));
    } else {
      prior.push_back(p.log_density(*value[s]));
      trace.latents.push_back(std::move(latents[s]));
    }
  }
  ad::Var lik_v = total(t, lik);
  ad::Var prior_v = total(t, prior);
  ad::Var q_v = total(t, latent_q);
  parts.likelihood = lik_v.scalar();
  parts.latent_prior = prior_v.scalar();
  parts.latent_proposal = q_v.scalar();
  parts.hyper_prior = h.log_prior.scalar();
  parts.hyper_proposal = h.log_q.scalar();
  ad::Var ell = lik_v + prior_v - q_v + h.log_prior - h.log_q;

  return Sample{std::move(tape), ell, logq_discrete, parts, std::move(*m), std::move(trace),
                h.beta_value, std::move(h.w), std::move(noise)};
}

ad::Var surrogate_term(const Sample& s, double baseline) {
  return s.ell + ad::scale(s.logq_discrete, s.ell.scalar() - baseline);
}

ad::Var surrogate_loss(std::span<const SurrogateRecord> records) {
  if (records.empty()) throw std::invalid_argument("surrogate_loss needs at least one record");
  std::vector<ad::Var> terms;
  for (const auto& r : records)
    terms.push_back(r.ell + ad::scale(r.logq_discrete, r.ell.scalar() - r.baseline));
  return ad::scale(ad::sum(ad::concat(terms)), 1.0 / static_cast<double>(records.size()));
}

Proposal propose(const Context& ctx, std::span<const double> x, const ParamStore& params, Rng& rng,
                 std::optional<std::span<const double>> summary) {
  Sample s = build_sample(ctx, x, summary.value_or(x), params, nullptr, &rng);
  return {s.morphism, s.trace, s.beta, s.w,
          s.parts.hyper_proposal + s.parts.path_proposal + s.parts.latent_proposal};
}

namespace {

struct Moments {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double std_error() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

}  // namespace

ElboEstimate elbo(const Context& ctx, std::span<const double> x, const ParamStore& params,
                  std::size_t n_samples, Rng& rng, std::optional<std::span<const double>> summary,
                  double baseline) {
  if (n_samples == 0) throw std::invalid_argument("elbo needs at least one sample");
  ElboEstimate out;
  Moments m;
  double surrogate = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Sample s = build_sample(ctx, x, summary.value_or(x), params, nullptr, &rng);
    if (!std::isfinite(s.ell.scalar())) throw NumericalError("non-finite ELBO sample");
    m.add(s.ell.scalar());
    out.parts += s.parts;
    surrogate += surrogate_term(s, baseline).scalar();
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  out.value = m.mean();
  out.std_error = m.std_error();
  out.surrogate = surrogate * inv;
  out.baseline = baseline;
  out.parts = out.parts.scaled(inv);
  out.samples = n_samples;
  return out;
}

std::vector<double> batch_mean(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("empty batch");
  std::vector<double> out(data.at(rows.front()).size(), 0.0);
  for (std::size_t r : rows) {
    const auto& v = data.at(r);
    if (v.size() != out.size()) throw SpecError("dataset rows differ in length");
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

namespace {

void check_rows(const Context& ctx, const Dataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i].size() != ctx.data_dim)
      throw SpecError("dataset row " + std::to_string(i + 1) + " has " + std::to_string(data[i].size()) +
                      " values, expected " + std::to_string(ctx.data_dim));
}

// Stream key from a row's contents, so a row keeps its draws wherever it sits.
std::uint64_t row_key(std::span<const double> row) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (double v : row) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

DatasetElbo evaluate(const Context& ctx, const Dataset& data, const ParamStore& params, std::size_t n_samples,
                     const Rng& rng) {
  check_rows(ctx, data);
  if (data.empty()) throw SpecError("empty dataset");
  const auto rows = all_rows(data.size());
  const auto summary = batch_mean(data, rows);
  Moments m;
  DatasetElbo out;
  for (std::size_t i : rows) {
    Rng row_rng = rng.split(row_key(data[i]));
    for (std::size_t k = 0; k < n_samples; ++k) {
      Sample s = build_sample(ctx, data[i], summary, params, nullptr, &row_rng);
      if (!std::isfinite(s.ell.scalar()))
        throw NumericalError("non-finite ELBO sample at row " + std::to_string(i + 1));
      m.add(s.ell.scalar());
      out.parts += s.parts;
    }
  }
  out.value = m.mean();
  out.std_error = m.std_error();
  out.parts = out.parts.scaled(1.0 / static_cast<double>(m.n));
  return out;
}

namespace {

bool updated(const Context& ctx, SectionId section, const std::string& owner) {
  return section != SectionId::theta || !ctx.frozen.contains(owner);
}

}  // namespace

TrainResult train(const Context& ctx, const Dataset& data, TrainState init, const TrainConfig& cfg,
                  const Rng& rng) {
  check_rows(ctx, data);
  if (cfg.batch_size == 0 || cfg.elbo_samples == 0) throw SpecError("batch size and ELBO samples must be positive");
  if (!(cfg.step_size > 0.0)) throw SpecError("step size must be positive");
  TrainResult out{std::move(init), {}};
  TrainState& st = out.state;
  if (cfg.epochs == 0) return out;
  if (data.empty()) throw SpecError("empty training set");

  ParamStore velocity = st.params.zeros_like();
  const Rng shuffle_root = rng.split(1);
  const Rng step_root = rng.split(2);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.max_updates && st.steps >= cfg.max_updates) break;
    auto order = all_rows(data.size());
    Rng shuffle = shuffle_root.split(epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    Moments epoch_elbo, epoch_path;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (cfg.max_updates && st.steps >= cfg.max_updates) break;
      const std::span<const std::size_t> batch(order.data() + start,
                                               std::min(cfg.batch_size, order.size() - start));
      const auto summary = batch_mean(data, batch);
      ParamStore grads = st.params.zeros_like();
      const Rng step_rng = step_root.split(st.steps);
      std::vector<Sample> samples;
      double mean_ell = 0.0;
      for (std::size_t row : batch) {
        Rng row_rng = step_rng.split(row);
        for (std::size_t k = 0; k < cfg.elbo_samples; ++k) {
          samples.push_back(build_sample(ctx, data[row], summary, st.params, &grads, &row_rng));
          const double ell = samples.back().ell.scalar();
          mean_ell += ell;
          epoch_elbo.add(ell);
          epoch_path.add(samples.back().parts.path_proposal);
        }
      }
      mean_ell /= static_cast<double>(samples.size());
      if (!st.baseline_ready) {
        st.baseline = mean_ell;
        st.baseline_ready = true;
      }
      const double inv = 1.0 / static_cast<double>(samples.size());
      for (auto& s : samples) s.tape->backward(ad::scale(surrogate_term(s, st.baseline), inv));
      samples.clear();

      double norm_sq = 0.0;
      model::for_each_block(grads, [&](SectionId sec, const std::string& owner, const std::string& name,
                                       model::Block& g) {
        if (!updated(ctx, sec, owner)) return;
        for (double v : g.values) {
          if (!std::isfinite(v))
            throw NumericalError("non-finite gradient in block " + std::string(model::to_string(sec)) + "." +
                                 owner + "." + name + " at step " + std::to_string(st.steps));
          norm_sq += v * v;
        }
      });
      if (!std::isfinite(mean_ell)) throw NumericalError("non-finite ELBO at step " + std::to_string(st.steps));
      const double norm = std::sqrt(norm_sq);
      const double clip = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      model::for_each_block(st.params, [&](SectionId sec, const std::string& owner, const std::string& name,
                                           model::Block& p) {
        if (!updated(ctx, sec, owner)) return;
        auto pick = [sec](ParamStore& s) -> model::Section& {
          return sec == SectionId::theta ? s.theta : sec == SectionId::dagger ? s.dagger : s.hyper;
        };
        const auto& g = pick(grads).at(owner).at(name).values;
        auto& v = pick(velocity).at(owner).at(name).values;
        for (std::size_t i = 0; i < p.values.size(); ++i) {
          v[i] = cfg.momentum * v[i] + clip * g[i];
          p.values[i] += cfg.step_size * v[i];
        }
      });
      st.baseline = cfg.baseline_decay * st.baseline + (1.0 - cfg.baseline_decay) * mean_ell;
      ++st.steps;
    }
    if (epoch_elbo.n > 0) out.metrics.push_back({epoch, epoch_elbo.mean(), epoch_path.mean(), st.baseline});
  }
  return out;
}

std::map<std::string, double> structure_posterior(const Context& ctx, const Dataset& data,
                                                  const ParamStore& params, std::size_t n_samples, Rng& rng) {
  check_rows(ctx, data);
  if (data.empty()) throw SpecError("empty dataset");
  if (n_samples == 0) throw std::invalid_argument("structure_posterior needs at least one sample");
  const auto summary = batch_mean(data, all_rows(data.size()));
  const ArrowGraph& g = *ctx.graph;
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < n_samples; ++i) {
    ad::Tape t;
    model::Binder b(t, params);
    Noise noise;
    HyperDraw h = draw_hyper(ctx, b, summary, noise, &rng, false);
    const transition::TransitionModel tm(ctx.graph, std::move(h.w), h.beta_value);
    auto walk = sampler::path_between(tm, g.unit_vertex(), g.data_vertex(), ctx.walk, rng);
    ++counts[category::signature(walk.morphism)];
  }
  std::map<std::string, double> freq;
  for (const auto& [sig, c] : counts) freq[sig] = static_cast<double>(c) / static_cast<double>(n_samples);
  return freq;
}

}  // namespace freecat::inference
