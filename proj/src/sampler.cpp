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

#include "freecat/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <tuple>

#include "freecat/error.hpp"

namespace freecat::sampler {

using category::ChainItem;
using category::PrimitiveKind;
using transition::ArrowGraph;

void WalkConfig::validate() const {
  if (max_steps < 1) throw SpecError("max_steps must be positive");
  if (max_macro_depth < 1) throw SpecError("max_macro_depth must be positive");
  if (max_steps < min_generators) throw SpecError("max_steps must be >= min_generators");
}

void Trace::append(const Trace& other) {
  choices.insert(choices.end(), other.choices.begin(), other.choices.end());
  latents.insert(latents.end(), other.latents.begin(), other.latents.end());
}

namespace {

void recompute_total(Trace& t) {
  double total = 0.0;
  for (const auto& c : t.choices) total += c.logprob;
  t.total_path_logprob = total;
}

// Tables depend only on the graph and the walk limits; keep a few per thread.
// Entries hold the graph alive so a key can never be reused.
std::shared_ptr<const CandidateFilter> cached_filter(const TransitionModel& tm, const WalkConfig& cfg) {
  struct Entry {
    std::shared_ptr<const ArrowGraph> graph;
    std::size_t max_steps, max_depth;
    std::shared_ptr<const CandidateFilter> filter;
  };
  thread_local std::vector<Entry> cache;
  const auto graph = tm.shared_graph();
  for (std::size_t i = 0; i < cache.size(); ++i) {
    const Entry& e = cache[i];
    if (e.graph == graph && e.max_steps == cfg.max_steps && e.max_depth == cfg.max_macro_depth) {
      if (i > 0) std::rotate(cache.begin(), cache.begin() + static_cast<std::ptrdiff_t>(i),
                             cache.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      return cache.front().filter;
    }
  }
  auto filter = std::make_shared<const CandidateFilter>(*graph, cfg);
  cache.insert(cache.begin(), {graph, cfg.max_steps, cfg.max_macro_depth, filter});
  if (cache.size() > 8) cache.pop_back();
  return filter;
}

WalkConfig sub_config(const WalkConfig& cfg) {
  WalkConfig sub = cfg;
  sub.min_generators = 0;
  return sub;
}

struct Walker {
  const TransitionModel& tm;
  const ArrowGraph& g;
  const CandidateFilter& filter;
  Rng& rng;

  Walk walk(VertexId src, VertexId dst, const WalkConfig& cfg, std::size_t depth) {
    Walk out{Morphism::identity(g.object(src)), {}};
    VertexId loc = src;
    std::size_t taken = 0;
    std::size_t steps = 0;
    while (loc != dst || taken < cfg.min_generators) {
      if (steps++ >= cfg.max_steps)
        throw SamplingError("walk from '" + g.name(src) + "' to '" + g.name(dst) +
                            "' exceeded max_steps = " + std::to_string(cfg.max_steps));
      const auto cands = filter(loc, dst, taken, cfg.min_generators, depth);
      if (cands.empty())
        throw SamplingError("no admissible arrow out of '" + g.name(loc) + "' toward '" +
                            g.name(dst) + "' after " + std::to_string(taken) + " generator(s)");
      std::vector<double> lp(cands.size());
      for (std::size_t i = 0; i < cands.size(); ++i) lp[i] = tm.log_probability(cands[i], dst);
      const double lse = numerics::log_sum_exp(lp);
      std::size_t pick = 0;
      if (cands.size() > 1) {
        const double u = rng.uniform();
        double cum = 0.0;
        pick = cands.size() - 1;
        for (std::size_t i = 0; i < cands.size(); ++i) {
          cum += std::exp(lp[i] - lse);
          if (u < cum) {
            pick = i;
            break;
          }
        }
      }
      const VertexId arrow = cands[pick];
      out.trace.choices.push_back({loc, dst, cands, arrow, lp[pick] - lse});
      Morphism step = Morphism::generator(g.generator(arrow));
      if (g.generator(arrow)->is_macro) {
        Walk sub = expand(arrow, cfg, depth + 1);
        step = sub.morphism;
        out.trace.append(sub.trace);
      }
      out.morphism = category::compose(out.morphism, step);
      loc = g.cod(arrow);
      ++taken;
    }
    return out;
  }

  Walk expand(VertexId macro, const WalkConfig& cfg, std::size_t depth) {
    const auto& gen = g.generator(macro);
    if (!gen->is_macro) throw SamplingError("'" + gen->name + "' is not a macro generator");
    if (depth > cfg.max_macro_depth)
      throw SamplingError("macro expansion of '" + gen->name + "' exceeds max_macro_depth = " +
                          std::to_string(cfg.max_macro_depth));
    const WalkConfig sub = sub_config(cfg);
    const VertexId a = *g.vertex_of(gen->cod->left);
    const VertexId b = *g.vertex_of(gen->cod->right);
    Walk out{Morphism::identity(g.object(0)), {}};
    if (gen->primitive.kind == PrimitiveKind::product_macro) {
      Walk left = walk(g.unit_vertex(), a, sub, depth);
      Walk right = walk(g.unit_vertex(), b, sub, depth);
      out.morphism = Morphism::macro(gen, category::product(left.morphism, right.morphism));
      out.trace.append(left.trace);
      out.trace.append(right.trace);
    } else {
      Walk inner = walk(a, b, sub, depth);
      out.morphism = Morphism::macro(gen, inner.morphism);
      out.trace.append(inner.trace);
    }
    return out;
  }
};

}  // namespace

CandidateFilter::CandidateFilter(const ArrowGraph& g, const WalkConfig& cfg)
    : g_(g), max_steps_(cfg.max_steps), max_depth_(cfg.max_macro_depth) {
  const std::size_t objects = g.object_count();
  const std::size_t gens = g.size() - objects;
  const std::size_t k_max = max_steps_;
  usable_.assign(max_depth_ + 1, std::vector<char>(gens, 1));
  reach_.assign(max_depth_ + 1, {});
  // deepest level first: a macro's usability at depth d needs level d + 1
  for (std::size_t d = max_depth_ + 1; d-- > 0;) {
    for (std::size_t i = 0; i < gens; ++i) {
      const auto& gen = g.generator(g.generator_vertex(i));
      if (!gen->is_macro) continue;
      bool ok = d + 1 <= max_depth_;
      if (ok) {
        const VertexId a = *g.vertex_of(gen->cod->left);
        const VertexId b = *g.vertex_of(gen->cod->right);
        if (gen->primitive.kind == PrimitiveKind::product_macro)
          ok = feasible(g.unit_vertex(), a, 0, d + 1) && feasible(g.unit_vertex(), b, 0, d + 1);
        else
          ok = feasible(a, b, 0, d + 1);
      }
      usable_[d][i] = ok;
    }
    auto& level = reach_[d];
    level.assign(objects, std::vector<char>(objects * (k_max + 1), 0));
    for (VertexId dst = 0; dst < objects; ++dst) {
      auto& r = level[dst];
      r[dst * (k_max + 1)] = 1;
      for (std::size_t k = 1; k <= k_max; ++k)
        for (VertexId v = 0; v < objects; ++v)
          for (VertexId a : g.out_arrows(v)) {
            if (!usable_[d][a - objects]) continue;
            const VertexId w = g.cod(a);
            if (w == dst ? k == 1 : r[w * (k_max + 1) + k - 1] != 0) {
              r[v * (k_max + 1) + k] = 1;
              break;
            }
          }
    }
  }
}

bool CandidateFilter::reaches(std::size_t depth, VertexId dst, VertexId v, std::size_t lo,
                              std::size_t hi) const {
  const auto& r = reach_.at(depth).at(dst);
  for (std::size_t k = lo; k <= std::min(hi, max_steps_); ++k)
    if (r[v * (max_steps_ + 1) + k]) return true;
  return false;
}

bool CandidateFilter::feasible(VertexId src, VertexId dst, std::size_t min_generators,
                               std::size_t depth) const {
  if (src == dst && min_generators == 0) return true;
  return reaches(depth, dst, src, std::max<std::size_t>(1, min_generators), max_steps_);
}

std::vector<VertexId> CandidateFilter::operator()(VertexId location, VertexId destination,
                                                  std::size_t taken, std::size_t min_generators,
                                                  std::size_t depth) const {
  std::vector<VertexId> out;
  if (depth > max_depth_ || taken >= max_steps_) return out;
  const std::size_t after = taken + 1;
  for (VertexId a : g_.out_arrows(location)) {
    if (!usable_[depth][a - g_.object_count()]) continue;
    const VertexId to = g_.cod(a);
    const bool ok = to == destination
                        ? after >= min_generators
                        : reaches(depth, destination, to,
                                  std::max<std::size_t>(1, min_generators > after ? min_generators - after : 0),
                                  max_steps_ - after);
    if (ok) out.push_back(a);
  }
  return out;
}

double choice_logprob(const TransitionModel& tm, std::span<const VertexId> cands, VertexId chosen,
                      VertexId destination) {
  std::vector<double> lp(cands.size());
  double mine = 0.0;
  bool found = false;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    lp[i] = tm.log_probability(cands[i], destination);
    if (cands[i] == chosen) {
      mine = lp[i];
      found = true;
    }
  }
  if (!found) throw SamplingError("chosen arrow is not among the candidates");
  return mine - numerics::log_sum_exp(lp);
}

Walk path_between(const TransitionModel& tm, VertexId src, VertexId dst, const WalkConfig& cfg,
                  Rng& rng) {
  cfg.validate();
  const ArrowGraph& g = tm.graph();
  if (!g.is_object(src) || !g.is_object(dst))
    throw SamplingError("walk endpoints must be object vertices");
  const auto filter = cached_filter(tm, cfg);
  Walker w{tm, g, *filter, rng};
  Walk out = w.walk(src, dst, cfg, 0);
  recompute_total(out.trace);
  return out;
}

Walk expand_macro(const TransitionModel& tm, VertexId macro, const WalkConfig& cfg, Rng& rng,
                  std::size_t depth) {
  cfg.validate();
  const ArrowGraph& g = tm.graph();
  if (!g.is_generator(macro)) throw SamplingError("macro vertex out of range");
  const auto filter = cached_filter(tm, cfg);
  Walker w{tm, g, *filter, rng};
  Walk out = w.expand(macro, cfg, depth);
  recompute_total(out.trace);
  return out;
}

namespace {

struct Replayer {
  const TransitionModel& tm;
  const ArrowGraph& g;
  const WalkConfig& cfg;
  const CandidateFilter& filter;
  Trace trace;

  void chain(const std::vector<ChainItem>& items, VertexId src, VertexId dst,
             std::size_t min_generators, std::size_t depth) {
    VertexId loc = src;
    std::size_t taken = 0;
    for (const auto& item : items) {
      if (!item.gen || item.daggered)
        throw SamplingError("morphism contains a term the walk cannot produce");
      if (loc == dst && taken >= min_generators)
        throw SamplingError("walk would have stopped at '" + g.name(dst) + "'");
      if (taken >= cfg.max_steps) throw SamplingError("morphism is longer than max_steps");
      const auto v = g.find(item.gen->name);
      if (!v || !g.is_generator(*v)) throw SamplingError("unknown generator '" + item.gen->name + "'");
      const VertexId arrow = *v;
      const auto cands = filter(loc, dst, taken, min_generators, depth);
      if (std::find(cands.begin(), cands.end(), arrow) == cands.end())
        throw SamplingError("'" + item.gen->name + "' is not an admissible arrow at '" +
                            g.name(loc) + "' toward '" + g.name(dst) + "'");
      trace.choices.push_back({loc, dst, cands, arrow, choice_logprob(tm, cands, arrow, dst)});
      if (item.gen->is_macro) {
        if (depth + 1 > cfg.max_macro_depth)
          throw SamplingError("macro nesting exceeds max_macro_depth");
        const VertexId a = *g.vertex_of(item.gen->cod->left);
        const VertexId b = *g.vertex_of(item.gen->cod->right);
        if (item.gen->primitive.kind == PrimitiveKind::product_macro) {
          chain(item.branches.at(0), g.unit_vertex(), a, 0, depth + 1);
          chain(item.branches.at(1), g.unit_vertex(), b, 0, depth + 1);
        } else {
          chain(item.branches.at(0), a, b, 0, depth + 1);
        }
      }
      loc = g.cod(arrow);
      ++taken;
    }
    if (loc != dst || taken < min_generators)
      throw SamplingError("morphism is not a complete walk to '" + g.name(dst) + "' with at least " +
                          std::to_string(min_generators) + " generator(s)");
  }
};

}  // namespace

Trace replay(const TransitionModel& tm, const Morphism& m, VertexId src, VertexId dst,
             const WalkConfig& cfg) {
  cfg.validate();
  const ArrowGraph& g = tm.graph();
  if (!category::same_type(m.dom(), g.object(src)) || !category::same_type(m.cod(), g.object(dst)))
    throw SamplingError("morphism type does not match the walk endpoints");
  const auto filter = cached_filter(tm, cfg);
  Replayer r{tm, g, cfg, *filter, {}};
  r.chain(category::generator_chain(m), src, dst, cfg.min_generators, 0);
  recompute_total(r.trace);
  return std::move(r.trace);
}

double path_logprob(const TransitionModel& tm, const Morphism& m, VertexId src, VertexId dst,
                    const WalkConfig& cfg) {
  return replay(tm, m, src, dst, cfg).total_path_logprob;
}

namespace {

struct Enumerator {
  const TransitionModel& tm;
  const ArrowGraph& g;
  const WalkConfig& cfg;
  const CandidateFilter& filter;
  std::size_t limit;

  using Paths = std::vector<std::pair<Morphism, double>>;

  Paths walks(VertexId src, VertexId dst, std::size_t min_generators, std::size_t depth) {
    Paths out;
    dfs(src, dst, min_generators, depth, src, 0, Morphism::identity(g.object(src)), 0.0, out);
    return out;
  }

  void dfs(VertexId src, VertexId dst, std::size_t min_generators, std::size_t depth, VertexId loc,
           std::size_t taken, const Morphism& so_far, double logp, Paths& out) {
    if (loc == dst && taken >= min_generators) {
      out.emplace_back(so_far, logp);
      if (out.size() > limit) throw SamplingError("path enumeration exceeded its limit");
      return;
    }
    if (taken >= cfg.max_steps) throw SamplingError("enumerated walk exceeded max_steps");
    const auto cands = filter(loc, dst, taken, min_generators, depth);
    if (cands.empty())
      throw SamplingError("no admissible arrow out of '" + g.name(loc) + "' during enumeration");
    for (VertexId a : cands) {
      const double lp = logp + choice_logprob(tm, cands, a, dst);
      const auto& gen = g.generator(a);
      if (!gen->is_macro) {
        dfs(src, dst, min_generators, depth, g.cod(a), taken + 1,
            category::compose(so_far, Morphism::generator(gen)), lp, out);
        continue;
      }
      if (depth + 1 > cfg.max_macro_depth)
        throw SamplingError("macro nesting exceeds max_macro_depth");
      const VertexId va = *g.vertex_of(gen->cod->left);
      const VertexId vb = *g.vertex_of(gen->cod->right);
      Paths expansions;
      if (gen->primitive.kind == PrimitiveKind::product_macro) {
        const Paths left = walks(g.unit_vertex(), va, 0, depth + 1);
        const Paths right = walks(g.unit_vertex(), vb, 0, depth + 1);
        for (const auto& [lm, llp] : left)
          for (const auto& [rm, rlp] : right)
            expansions.emplace_back(Morphism::macro(gen, category::product(lm, rm)), llp + rlp);
      } else {
        for (const auto& [im, ilp] : walks(va, vb, 0, depth + 1))
          expansions.emplace_back(Morphism::macro(gen, im), ilp);
      }
      for (const auto& [em, elp] : expansions)
        dfs(src, dst, min_generators, depth, g.cod(a), taken + 1, category::compose(so_far, em),
            lp + elp, out);
    }
  }
};

}  // namespace

std::vector<std::pair<Morphism, double>> enumerate_paths(const TransitionModel& tm, VertexId src,
                                                         VertexId dst, const WalkConfig& cfg,
                                                         std::size_t limit) {
  cfg.validate();
  if (!tm.graph().acyclic()) throw SamplingError("path enumeration needs an acyclic arrow graph");
  const auto filter = cached_filter(tm, cfg);
  Enumerator e{tm, tm.graph(), cfg, *filter, limit};
  auto paths = e.walks(src, dst, cfg.min_generators, 0);
  for (auto& p : paths) p.second = std::exp(p.second);
  return paths;
}

std::vector<std::string> feasibility_warnings(const ArrowGraph& g, const WalkConfig& cfg) {
  std::vector<std::string> warnings;
  const CandidateFilter filter(g, cfg);
  if (!filter.feasible(g.unit_vertex(), g.data_vertex(), cfg.min_generators, 0))
    warnings.push_back("no walk from '" + g.name(g.unit_vertex()) + "' to '" + g.name(g.data_vertex()) +
                       "' has between " + std::to_string(cfg.min_generators) + " and " +
                       std::to_string(cfg.max_steps) + " generators");
  // Objects where a walk without lookahead would run dry; the sampler steers
  // around them, which skews the walk toward the remaining arrows.
  std::set<std::string> seen_warnings;
  using State = std::tuple<VertexId, VertexId, VertexId, std::size_t, std::size_t>;
  std::set<State> seen;
  std::vector<State> stack{{g.unit_vertex(), g.data_vertex(), g.unit_vertex(), 0, cfg.min_generators}};
  while (!stack.empty()) {
    const auto [src, dst, loc, taken, min_gen] = stack.back();
    stack.pop_back();
    if (!seen.insert({src, dst, loc, taken, min_gen}).second) continue;
    if (loc == dst && taken >= min_gen) continue;
    std::vector<VertexId> cands;
    for (VertexId a : g.out_arrows(loc)) {
      const VertexId to = g.cod(a);
      if (g.reaches(to, dst) && !(taken + 1 < min_gen && to == dst)) cands.push_back(a);
    }
    if (cands.empty()) {
      std::string w = "'" + g.name(loc) + "' is a dead end toward '" + g.name(dst) + "' after " +
                      std::to_string(taken) + " generator(s) with min_generators " + std::to_string(min_gen);
      if (seen_warnings.insert(w).second) warnings.push_back(std::move(w));
      continue;
    }
    for (VertexId a : cands) {
      stack.emplace_back(src, dst, g.cod(a), std::min(taken + 1, min_gen), min_gen);
      const auto& gen = g.generator(a);
      if (!gen->is_macro) continue;
      const VertexId va = *g.vertex_of(gen->cod->left);
      const VertexId vb = *g.vertex_of(gen->cod->right);
      if (gen->primitive.kind == PrimitiveKind::product_macro) {
        stack.emplace_back(g.unit_vertex(), va, g.unit_vertex(), 0, 0);
        stack.emplace_back(g.unit_vertex(), vb, g.unit_vertex(), 0, 0);
      } else {
        stack.emplace_back(va, vb, va, 0, 0);
      }
    }
  }
  return warnings;
}

}  // namespace freecat::sampler
