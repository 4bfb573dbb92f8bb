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

// fcat: command-line front end over the C interface.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "freecat/freecat.h"

namespace {

struct SpecDeleter {
  void operator()(fcat_spec* s) const { fcat_spec_free(s); }
};
using SpecPtr = std::unique_ptr<fcat_spec, SpecDeleter>;

struct Options {
  std::string spec;
  std::uint64_t seed = 0;
  std::string out;
  fcat_walk_config walk = fcat_walk_config_default();
  fcat_hyper hyper = fcat_hyper_default();
  fcat_train_config train = fcat_train_config_default();
  std::size_t count = 10;
  std::string dot;
  std::string data;
  std::string checkpoint;
  std::size_t posterior_samples = 1000;
};

int exit_code(fcat_status s) {
  switch (s) {
    case FCAT_OK: return 0;
    case FCAT_ERR_SAMPLING: return 2;
    case FCAT_ERR_NUMERICAL: return 3;
    default: return 1;
  }
}

int report(fcat_status s) {
  if (s != FCAT_OK) std::cerr << "fcat: error: " << fcat_last_error() << "\n";
  return exit_code(s);
}

// Owns a string handed out by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  fcat_string_free(s);
  return out;
}

fcat_status load(const Options& o, SpecPtr& out) {
  fcat_spec* raw = nullptr;
  const fcat_status s = fcat_spec_load(o.spec.c_str(), &raw);
  out.reset(raw);
  return s;
}

bool emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return true;
  }
  std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) std::cerr << "fcat: error: cannot write '" << o.out << "'\n";
  return static_cast<bool>(f);
}

int cmd_validate(const Options& o) {
  SpecPtr spec;
  if (auto s = load(o, spec); s != FCAT_OK) return report(s);
  fcat_counts c{};
  if (auto s = fcat_spec_counts(spec.get(), &c); s != FCAT_OK) return report(s);
  char* raw = nullptr;
  if (auto s = fcat_spec_check(spec.get(), &o.walk, &raw); s != FCAT_OK) return report(s);
  const std::string warnings = take(raw);
  std::cout << c.objects << " objects, " << c.generators - c.macros << " generators, " << c.macros
            << " macros; OK\n";
  std::cout << "reachable from the unit: all " << c.objects << " objects; arrow graph has " << c.vertices
            << " vertices; data dimension " << c.data_dim << "\n";
  std::size_t start = 0;
  while (start < warnings.size()) {
    const std::size_t end = warnings.find('\n', start);
    std::cout << "warning: " << warnings.substr(start, end - start) << "\n";
    start = end == std::string::npos ? warnings.size() : end + 1;
  }
  return 0;
}

struct SampleSink {
  std::string listing;
  std::string dot_dir;
  std::map<std::string, std::size_t> seen;
  std::string error;
};

int on_sample(void* user, const char* sig, double logp, const char* dot) {
  auto& sink = *static_cast<SampleSink*>(user);
  char buf[64];
  std::snprintf(buf, sizeof buf, "  logp=%.6f\n", logp);
  sink.listing += std::string(sig) + buf;
  if (dot && !sink.seen.contains(sig)) {
    const std::size_t id = sink.seen.size() + 1;
    sink.seen.emplace(sig, id);
    char name[32];
    std::snprintf(name, sizeof name, "diagram_%03zu.dot", id);
    std::ofstream f(std::filesystem::path(sink.dot_dir) / name, std::ios::binary | std::ios::trunc);
    f << dot;
    if (!f) {
      sink.error = "cannot write DOT file into '" + sink.dot_dir + "'";
      return 1;
    }
  }
  return 0;
}

int cmd_sample(const Options& o) {
  SpecPtr spec;
  if (auto s = load(o, spec); s != FCAT_OK) return report(s);
  SampleSink sink;
  sink.dot_dir = o.dot;
  if (!o.dot.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(o.dot, ec);
    if (ec) {
      std::cerr << "fcat: error: cannot create '" << o.dot << "': " << ec.message() << "\n";
      return 1;
    }
  }
  const fcat_status s =
      fcat_sample(spec.get(), &o.walk, &o.hyper, o.seed, o.count, o.dot.empty() ? 0 : 1, on_sample, &sink);
  if (!sink.error.empty()) {
    std::cerr << "fcat: error: " << sink.error << "\n";
    return 1;
  }
  if (s != FCAT_OK) return report(s);
  return emit(o, sink.listing) ? 0 : 1;
}

int cmd_distances(const Options& o) {
  SpecPtr spec;
  if (auto s = load(o, spec); s != FCAT_OK) return report(s);
  char* raw = nullptr;
  if (auto s = fcat_distances(spec.get(), &o.hyper, o.seed, &raw); s != FCAT_OK) return report(s);
  return emit(o, take(raw)) ? 0 : 1;
}

int cmd_train(const Options& o) {
  SpecPtr spec;
  if (auto s = load(o, spec); s != FCAT_OK) return report(s);
  char* raw = nullptr;
  const fcat_status s =
      fcat_train(spec.get(), &o.walk, &o.train, o.data.c_str(), o.seed, o.out.c_str(), &raw);
  if (s != FCAT_OK) return report(s);
  std::cout << take(raw);
  return 0;
}

int cmd_eval(const Options& o) {
  SpecPtr spec;
  if (auto s = load(o, spec); s != FCAT_OK) return report(s);
  char* raw = nullptr;
  const fcat_status s = fcat_eval(spec.get(), &o.walk, o.checkpoint.c_str(), o.data.c_str(), o.seed,
                                  o.posterior_samples, o.train.elbo_samples, &raw);
  if (s != FCAT_OK) return report(s);
  return emit(o, take(raw)) ? 0 : 1;
}

void walk_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--min-generators", o.walk.min_generators, "generators required before the data object");
  cmd->add_option("--max-steps", o.walk.max_steps, "walk length limit")->check(CLI::PositiveNumber);
  cmd->add_option("--max-macro-depth", o.walk.max_macro_depth, "macro nesting limit")->check(CLI::PositiveNumber);
}

// Returns the --hyperprior flag; several subcommands share o.hyper, so the
// flag is read back after parsing instead of being bound directly.
CLI::Option* hyper_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--beta", o.hyper.beta, "inverse temperature")->check(CLI::PositiveNumber);
  cmd->add_option("--w", o.hyper.w_const, "value of every W entry")->check(CLI::NonNegativeNumber);
  return cmd->add_flag("--hyperprior", "draw beta and W from their Gamma(1,1) priors");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fcat: sample, train and evaluate programs from a free-category prior"};
  app.require_subcommand(1);
  Options o;

  auto spec_flag = [&o](CLI::App* cmd) {
    cmd->add_option("--spec", o.spec, "category spec (JSON)")->required()->check(CLI::ExistingFile);
  };
  auto seed_flag = [&o](CLI::App* cmd) { cmd->add_option("--seed", o.seed, "random seed"); };

  auto* validate = app.add_subcommand("validate", "check a spec and report counts");
  spec_flag(validate);
  walk_flags(validate, o);

  auto* sample = app.add_subcommand("sample", "draw morphisms from the prior");
  spec_flag(sample);
  seed_flag(sample);
  walk_flags(sample, o);
  auto* sample_prior = hyper_flags(sample, o);
  sample->add_option("--count", o.count, "number of samples")->check(CLI::PositiveNumber);
  sample->add_option("--dot", o.dot, "directory for one DOT file per distinct morphism");
  sample->add_option("--out", o.out, "write the listing here instead of stdout");

  auto* distances = app.add_subcommand("distances", "print -log P(v, data) for every vertex");
  spec_flag(distances);
  seed_flag(distances);
  auto* distances_prior = hyper_flags(distances, o);
  distances->add_option("--out", o.out, "write the table here instead of stdout");

  auto* train = app.add_subcommand("train", "fit parameters by variational inference");
  spec_flag(train);
  seed_flag(train);
  walk_flags(train, o);
  train->add_option("--data", o.data, "CSV dataset")->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "output directory")->required();
  train->add_option("--epochs", o.train.epochs, "passes over the training split");
  train->add_option("--batch-size", o.train.batch_size, "rows per step")->check(CLI::PositiveNumber);
  train->add_option("--step-size", o.train.step_size, "SGD step size")->check(CLI::PositiveNumber);
  train->add_option("--elbo-samples", o.train.elbo_samples, "proposals per row")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "held-out ELBO and structure posterior");
  spec_flag(eval);
  seed_flag(eval);
  walk_flags(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint.json from train")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", o.data, "CSV dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--samples", o.posterior_samples, "structure posterior draws")->check(CLI::PositiveNumber);
  eval->add_option("--elbo-samples", o.train.elbo_samples, "proposals per row")->check(CLI::PositiveNumber);
  eval->add_option("--out", o.out, "write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  o.hyper.hyperprior = (sample_prior->count() + distances_prior->count()) > 0 ? 1 : 0;
  if (validate->parsed()) return cmd_validate(o);
  if (sample->parsed()) return cmd_sample(o);
  if (distances->parsed()) return cmd_distances(o);
  if (train->parsed()) return cmd_train(o);
  return cmd_eval(o);
}
