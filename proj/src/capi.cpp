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

#include "freecat/freecat.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "freecat/category.hpp"
#include "freecat/error.hpp"
#include "freecat/inference.hpp"
#include "freecat/model.hpp"
#include "freecat/sampler.hpp"
#include "freecat/transition.hpp"

struct fcat_spec {
  freecat::category::CategorySpec spec;
};

namespace {

namespace fc = freecat;
namespace inf = freecat::inference;

thread_local std::string last_error;

fcat_status fail(fcat_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <typename F>
fcat_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return FCAT_OK;
  } catch (const fc::Error& e) {
    return fail(static_cast<fcat_status>(e.code()), e.what());
  } catch (const std::invalid_argument& e) {
    return fail(FCAT_ERR_INVALID, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FCAT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FCAT_ERR_INTERNAL, std::string("internal error: ") + e.what());
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_file(const char* path, const char* what) {
  if (!path) throw fc::SpecError(std::string("no ") + what + " path given");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fc::SpecError(std::string("cannot read ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw fc::SpecError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw fc::SpecError("write failed for '" + p.string() + "'");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fc::sampler::WalkConfig walk_config(const fcat_walk_config* cfg) {
  fc::sampler::WalkConfig w;
  if (cfg) {
    w.min_generators = cfg->min_generators;
    w.max_steps = cfg->max_steps;
    w.max_macro_depth = cfg->max_macro_depth;
  }
  w.validate();
  return w;
}

// Header-free CSV, one row per line; blank lines are skipped.
inf::Dataset read_dataset(const char* path) {
  const std::string text = read_file(path, "dataset");
  inf::Dataset rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      std::size_t a = pos, b = end;
      while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
      while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t')) --b;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b, v);
      if (a == b || ec != std::errc() || ptr != line.data() + b || !std::isfinite(v))
        throw fc::SpecError(std::string(path) + ":" + std::to_string(lineno) + ": bad number '" +
                            line.substr(a, b - a) + "'");
      row.push_back(v);
      if (end == line.size()) break;
      pos = end + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw fc::SpecError(std::string("dataset '") + path + "' has no rows");
  return rows;
}

void require(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " is null");
}

fc::transition::TransitionModel hyper_model(const fcat_hyper* hyper,
                                            std::shared_ptr<const fc::transition::ArrowGraph> graph,
                                            fc::Rng& rng) {
  const fcat_hyper h = hyper ? *hyper : fcat_hyper_default();
  const std::size_t n = graph->size();
  fc::numerics::Matrix w(n, n);
  double beta = h.beta;
  if (h.hyperprior) {
    beta = rng.gamma(1.0);
    for (double& v : w.data()) v = rng.gamma(1.0);
  } else {
    for (double& v : w.data()) v = h.w_const;
  }
  return fc::transition::TransitionModel(std::move(graph), std::move(w), beta);
}

}  // namespace

extern "C" {

const char* fcat_last_error(void) { return last_error.c_str(); }

void fcat_string_free(char* s) { std::free(s); }

fcat_status fcat_spec_parse(const char* text, size_t len, fcat_spec** out) {
  return guarded([&] {
    require(text, "spec text");
    require(out, "output handle");
    *out = nullptr;
    *out = new fcat_spec{fc::category::parse_spec(std::string_view(text, len))};
  });
}

fcat_status fcat_spec_load(const char* path, fcat_spec** out) {
  return guarded([&] {
    require(out, "output handle");
    *out = nullptr;
    const std::string text = read_file(path, "spec");
    try {
      *out = new fcat_spec{fc::category::parse_spec(text)};
    } catch (const fc::Error& e) {
      throw fc::SpecError(std::string(path) + ": " + e.what());
    }
  });
}

void fcat_spec_free(fcat_spec* spec) { delete spec; }

fcat_status fcat_spec_counts(const fcat_spec* spec, fcat_counts* out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "output");
    const auto& s = spec->spec;
    out->objects = s.objects().size();
    out->generators = s.generators().size();
    out->macros = s.macro_count();
    out->vertices = s.objects().size() + s.generators().size();
    out->data_dim = fc::category::value_dim(s.data_object());
  });
}

fcat_walk_config fcat_walk_config_default(void) {
  const fc::sampler::WalkConfig w;
  return {w.min_generators, w.max_steps, w.max_macro_depth};
}

fcat_hyper fcat_hyper_default(void) { return {1.0, 0.0, 0}; }

fcat_train_config fcat_train_config_default(void) {
  const inf::TrainConfig t;
  return {t.epochs, t.batch_size, t.elbo_samples, t.step_size};
}

fcat_status fcat_spec_check(const fcat_spec* spec, const fcat_walk_config* cfg, char** warnings) {
  return guarded([&] {
    require(spec, "spec");
    require(warnings, "output");
    const auto graph = fc::transition::arrow_graph(spec->spec);
    std::string text;
    for (const auto& w : fc::sampler::feasibility_warnings(*graph, walk_config(cfg))) text += w + "\n";
    *warnings = dup(text);
  });
}

fcat_status fcat_sample(const fcat_spec* spec, const fcat_walk_config* cfg, const fcat_hyper* hyper,
                        uint64_t seed, size_t count, int want_dot, fcat_sample_fn fn, void* user) {
  return guarded([&] {
    require(spec, "spec");
    require(reinterpret_cast<const void*>(fn), "callback");
    const auto walk = walk_config(cfg);
    const auto graph = fc::transition::arrow_graph(spec->spec);
    const fc::Rng root(seed);
    std::optional<fc::transition::TransitionModel> fixed;
    if (!hyper || !hyper->hyperprior) {
      fc::Rng unused(seed);
      fixed.emplace(hyper_model(hyper, graph, unused));
    }
    for (std::size_t i = 0; i < count; ++i) {
      fc::Rng rng = root.split(i);
      std::optional<fc::transition::TransitionModel> drawn;
      if (!fixed) drawn.emplace(hyper_model(hyper, graph, rng));
      const auto& tm = fixed ? *fixed : *drawn;
      const auto w = fc::sampler::path_between(tm, graph->unit_vertex(), graph->data_vertex(), walk, rng);
      const std::string sig = fc::category::signature(w.morphism);
      const std::string dot = want_dot ? fc::category::to_dot(w.morphism, "diagram") : std::string();
      if (fn(user, sig.c_str(), w.trace.total_path_logprob, want_dot ? dot.c_str() : nullptr)) break;
    }
  });
}

fcat_status fcat_distances(const fcat_spec* spec, const fcat_hyper* hyper, uint64_t seed, char** table) {
  return guarded([&] {
    require(spec, "spec");
    require(table, "output");
    const auto graph = fc::transition::arrow_graph(spec->spec);
    fc::Rng rng(seed);
    const auto tm = hyper_model(hyper, graph, rng);
    const auto d = fc::transition::intuitive_distance(tm, graph->data_vertex());
    std::string out = "# vertex\tdistance_to_" + graph->name(graph->data_vertex()) + "\n";
    for (std::size_t v = 0; v < d.size(); ++v)
      out += graph->name(v) + "\t" + (std::isinf(d[v]) ? std::string("inf") : fmt("%.6f", d[v])) + "\n";
    *table = dup(out);
  });
}

fcat_status fcat_train(const fcat_spec* spec, const fcat_walk_config* cfg, const fcat_train_config* train,
                       const char* dataset_path, uint64_t seed, const char* out_dir, char** summary) {
  return guarded([&] {
    require(spec, "spec");
    require(out_dir, "output directory");
    const fcat_train_config tc = train ? *train : fcat_train_config_default();
    inf::TrainConfig conf;
    conf.epochs = tc.epochs;
    conf.batch_size = tc.batch_size;
    conf.elbo_samples = tc.elbo_samples;
    conf.step_size = tc.step_size;

    const auto ctx = inf::make_context(spec->spec, walk_config(cfg));
    const auto data = read_dataset(dataset_path);
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].size() != ctx.data_dim)
        throw fc::SpecError("dataset row " + std::to_string(i + 1) + " has " + std::to_string(data[i].size()) +
                            " values, the data object has dimension " + std::to_string(ctx.data_dim));

    const fc::Rng root(seed);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    fc::Rng split_rng = root.split(2);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[split_rng.below(i)]);
    const std::size_t n_val = data.size() >= 2 ? std::max<std::size_t>(1, data.size() / 10) : 0;
    inf::Dataset train_rows, val_rows;
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < order.size() - n_val ? train_rows : val_rows).push_back(data[order[i]]);

    fc::Rng init_rng = root.split(0);
    inf::TrainState st{inf::init_params(spec->spec, ctx, init_rng), 0, 0.0, false};
    auto result = inf::train(ctx, train_rows, std::move(st), conf, root.split(1));

    fc::model::Checkpoint ck{fc::category::spec_hash(spec->spec), seed, result.state.steps,
                             result.state.baseline, result.state.baseline_ready, result.state.params};
    std::string metrics = "# epoch\telbo\tpath_logprob\tbaseline\n";
    for (const auto& m : result.metrics)
      metrics += std::to_string(m.epoch + 1) + "\t" + fmt("%.6f", m.elbo) + "\t" + fmt("%.6f", m.path_logprob) +
                 "\t" + fmt("%.6f", m.baseline) + "\n";
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw fc::SpecError("cannot create '" + dir.string() + "': " + ec.message());
    write_file(dir / "checkpoint.json", fc::model::write_checkpoint(ck));
    write_file(dir / "metrics.tsv", metrics);

    std::string text = "trained " + std::to_string(result.state.steps) + " steps on " +
                       std::to_string(train_rows.size()) + " rows\n";
    if (!result.metrics.empty()) text += "final epoch ELBO " + fmt("%.6f", result.metrics.back().elbo) + "\n";
    if (!val_rows.empty()) {
      const auto v = inf::evaluate(ctx, val_rows, ck.params, conf.elbo_samples, root.split(3));
      text += "validation ELBO " + fmt("%.6f", v.value) + " (" + std::to_string(val_rows.size()) + " rows)\n";
    }
    if (summary) *summary = dup(text);
  });
}

fcat_status fcat_eval(const fcat_spec* spec, const fcat_walk_config* cfg, const char* checkpoint_path,
                      const char* dataset_path, uint64_t seed, size_t posterior_samples, size_t elbo_samples,
                      char** report) {
  return guarded([&] {
    require(spec, "spec");
    require(report, "output");
    if (posterior_samples == 0 || elbo_samples == 0) throw fc::SpecError("sample counts must be positive");
    const auto ck = fc::model::read_checkpoint(read_file(checkpoint_path, "checkpoint"));
    if (ck.spec_hash != fc::category::spec_hash(spec->spec))
      throw fc::SpecError("checkpoint was trained on a different spec (hash mismatch)");
    const auto ctx = inf::make_context(spec->spec, walk_config(cfg));
    const auto data = read_dataset(dataset_path);
    const fc::Rng root(seed);
    const auto v = inf::evaluate(ctx, data, ck.params, elbo_samples, root.split(3));
    fc::Rng post_rng = root.split(4);
    const auto freq = inf::structure_posterior(ctx, data, ck.params, posterior_samples, post_rng);
    std::string out = "held-out ELBO " + fmt("%.6f", v.value) + " (se " + fmt("%.6f", v.std_error) + ", " +
                      std::to_string(data.size()) + " rows)\n";
    out += "# signature\tfrequency\n";
    double total = 0.0;
    for (const auto& [sig, f] : freq) {
      out += sig + "\t" + fmt("%.6f", f) + "\n";
      total += f;
    }
    out += "total\t" + fmt("%.6f", total) + "\n";
    *report = dup(out);
  });
}

}  // extern "C"
