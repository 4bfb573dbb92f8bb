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

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "freecat/category.hpp"
#include "freecat/error.hpp"
#include "freecat/model.hpp"
#include "support.hpp"

using namespace freecat;
using namespace freecat::model;
using category::Morphism;
using category::parse_spec;
using numerics::Matrix;

namespace {

Morphism chain_of(const category::CategorySpec& spec, std::initializer_list<const char*> names) {
  std::optional<Morphism> m;
  for (const char* n : names) {
    auto g = Morphism::generator(spec.generator(n));
    m = m ? category::compose(*m, g) : g;
  }
  return *m;
}

const char* kProduct = R"({
  "objects": [{"name": "A", "kind": "space", "dim": 1}, {"name": "Y", "kind": "space", "dim": 2},
              {"name": "P", "kind": "product", "factors": ["A", "A"]}],
  "generators": [
    {"name": "p", "dom": "unit", "cod": "A", "primitive": {"kind": "gaussian-prior"}},
    {"name": "q", "dom": "unit", "cod": "A", "primitive": {"kind": "gaussian-prior"}},
    {"name": "h", "dom": "P", "cod": "Y", "primitive": {"kind": "affine-gaussian", "hidden": 4}}
  ],
  "data_object": "Y"})";

// Hand-written forward pass of the chain p;f with a continuous-Bernoulli head.
double chain_likelihood(const ParamStore& ps, std::span<const double> z, std::span<const double> x) {
  const auto& f = ps.theta.at("f");
  const auto& w1 = f.at("w1");
  const auto& w2 = f.at("w2");
  std::vector<double> h(w1.rows);
  for (std::size_t i = 0; i < w1.rows; ++i) {
    double s = f.at("b1").values[i];
    for (std::size_t j = 0; j < w1.cols; ++j) s += w1.values[i * w1.cols + j] * z[j];
    h[i] = std::tanh(s);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < w2.rows; ++i) {
    double s = f.at("b2").values[i];
    for (std::size_t j = 0; j < w2.cols; ++j) s += w2.values[i * w2.cols + j] * h[j];
    const double lam = 1.0 / (1.0 + std::exp(-s));
    const double u = 1.0 - 2.0 * lam;
    const double log_c = std::abs(u) < 1e-6 ? std::log(2.0) : std::log(2.0 * std::atanh(u) / u);
    total += log_c + x[i] * std::log(lam) + (1.0 - x[i]) * std::log(1.0 - lam);
  }
  return total;
}

}  // namespace

TEST_CASE("initialize covers every executable generator") {
  const auto spec = fixtures::diamond();
  Rng rng(1);
  const auto ps = initialize(spec, rng);
  CHECK(ps.theta.size() == 3);
  CHECK(ps.theta.at("p").at("mean").values.size() == 2);
  CHECK(ps.theta.at("f").at("w1").rows == 8);
  CHECK(ps.theta.at("f").at("w1").cols == 2);
  CHECK(ps.theta.at("f").at("w2").rows == 4);
  CHECK(ps.theta.at("f").at("scale").values[0] == doctest::Approx(numerics::inverse_softplus(1.0)));
  CHECK(numerics::softplus(ps.theta.at("f").at("scale").values[0]) == doctest::Approx(1.0));
  CHECK(ps.dagger.at("f").at("w1").cols == 4);
  CHECK(ps.dagger.at("f").at("w2").rows == 2);
  CHECK(!ps.dagger.contains("p"));
  for (double b : ps.theta.at("g").at("b1").values) CHECK(b == 0.0);
}

TEST_CASE("execute p;f") {
  const auto spec = fixtures::chain();
  Rng init(2);
  const auto ps = initialize(spec, init);
  const auto m = chain_of(spec, {"p", "f"});
  Rng a(7), b(7);
  const auto e = execute(m, ps, a);
  REQUIRE(e.trace.latents.size() == 1);
  CHECK(e.trace.latents[0].generator == "p");
  CHECK(e.trace.latents[0].value.size() == 2);
  const auto& z = e.trace.latents[0].value;
  const double expect =
      numerics::gaussian_log_density(z[0], 0.0, 1.0) + numerics::gaussian_log_density(z[1], 0.0, 1.0);
  CHECK(e.trace.latents[0].log_density == doctest::Approx(expect).epsilon(1e-14));
  REQUIRE(e.observation.size() == 1);
  CHECK(e.observation[0].kind == numerics::DistKind::continuous_bernoulli);
  CHECK(e.observation[0].dim() == 4);
  const auto again = execute(m, ps, b);
  CHECK(again.trace.latents[0].value == z);
  CHECK(compile(m).latent_count() == category::generator_chain(m).size() - 1);
}

TEST_CASE("execute a lone prior") {
  const auto spec = parse_spec(R"({"objects": [{"name": "X", "kind": "space", "dim": 3}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X", "primitive": {"kind": "gaussian-prior"}}],
    "data_object": "X"})");
  Rng rng(1);
  const auto ps = initialize(spec, rng);
  const auto e = execute(Morphism::generator(spec.generator("p")), ps, rng);
  CHECK(e.trace.latents.empty());
  REQUIRE(e.observation.size() == 1);
  CHECK(e.observation[0].kind == numerics::DistKind::gaussian);
  CHECK(e.observation[0].dim() == 3);
}

TEST_CASE("joint log-probability") {
  const auto spec = fixtures::chain();
  Rng rng(3);
  auto ps = initialize(spec, rng);
  const auto m = chain_of(spec, {"p", "f"});
  const auto g = transition::arrow_graph(spec);
  const std::size_t n = g->size();
  const transition::TransitionModel tm(g, Matrix(n, n, 1.0), 1.0);
  const auto e = execute(m, ps, rng);
  const std::vector<double> x{0.1, 0.9, 0.5, 0.0};
  const auto j = joint_logprob(x, e.trace, m, tm, ps, {});
  CHECK(j.hyper_prior == doctest::Approx(-1.0 - double(n * n)));
  CHECK(j.path == 0.0);
  CHECK(std::abs(j.total() - (j.likelihood + j.latent_prior + j.path + j.hyper_prior)) < 1e-12);
  CHECK(j.latent_prior == doctest::Approx(e.trace.latents[0].log_density).epsilon(1e-14));
  // x = 0 is clamped into the support
  std::vector<double> xc = x;
  xc[3] = numerics::kLambdaClamp;
  CHECK(j.likelihood == doctest::Approx(chain_likelihood(ps, e.trace.latents[0].value, xc)).epsilon(1e-10));
  CHECK(std::isfinite(j.total()));
  CHECK(hyper_prior_logprob(1.0, Matrix(2, 2, 1.0)) == -5.0);
}

TEST_CASE("product branches run independently") {
  const auto spec = parse_spec(kProduct);
  Rng init(4);
  const auto ps = initialize(spec, init);
  const auto branches = category::product(Morphism::generator(spec.generator("p")),
                                          Morphism::generator(spec.generator("q")));
  const auto m = category::compose(Morphism::macro(spec.generator(category::macro_name("P")), branches),
                                   Morphism::generator(spec.generator("h")));
  const auto plan = compile(m);
  CHECK(plan.sites.size() == 3);
  CHECK(plan.sites[2].inputs.size() == 2);
  const int bins = 20, n = 10000;
  std::vector<double> hp(bins), hq(bins);
  double cross = 0.0;
  auto bin = [](double v) { return std::clamp(int((v + 4.0) / 8.0 * bins), 0, bins - 1); };
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng(99).split(i);
    const auto e = execute(m, ps, rng);
    REQUIRE(e.trace.latents.size() == 2);
    const double a = e.trace.latents[0].value[0], b = e.trace.latents[1].value[0];
    hp[bin(a)] += 1.0 / n;
    hq[bin(b)] += 1.0 / n;
    cross += a * b / n;
  }
  double tv = 0.0;
  for (int k = 0; k < bins; ++k) tv += 0.5 * std::abs(hp[k] - hq[k]);
  CHECK(tv <= 0.03);
  CHECK(std::abs(cross) < 0.05);
}

TEST_CASE("non-executable morphisms") {
  const auto spec = parse_spec(R"({
    "objects": [{"name": "X2", "kind": "space", "dim": 2}, {"name": "X4", "kind": "space", "dim": 4},
                {"name": "E", "kind": "exponential", "dom": "X2", "cod": "X4"}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X2", "primitive": {"kind": "gaussian-prior"}},
                   {"name": "f", "dom": "X2", "cod": "X4"}],
    "data_object": "X4"})");
  const auto pf = chain_of(spec, {"p", "f"});
  CHECK_THROWS_AS(compile(pf), SpecError);
  const auto e = Morphism::macro(spec.generator(category::macro_name("E")), Morphism::generator(spec.generator("f")));
  CHECK_THROWS_AS(compile(e), SpecError);
  CHECK_THROWS_AS(compile(category::dagger(chain_of(spec, {"p"}))), SpecError);
}

TEST_CASE("dagger plan reverses the chain") {
  const auto spec = fixtures::chain();
  const auto pf = chain_of(spec, {"p", "f"});
  CHECK(category::signature(dagger(pf)) == "f†;p†");
  CHECK(dagger(dagger(pf)) == pf);
}

TEST_CASE("forward and dagger densities differentiate correctly") {
  const auto spec = parse_spec(R"({
    "objects": [{"name": "A", "kind": "space", "dim": 2}, {"name": "B", "kind": "space", "dim": 3}],
    "generators": [
      {"name": "p", "dom": "unit", "cod": "A", "primitive": {"kind": "gaussian-prior"}},
      {"name": "f", "dom": "A", "cod": "B", "primitive": {"kind": "affine-gaussian", "hidden": 4}},
      {"name": "c", "dom": "A", "cod": "B", "primitive": {"kind": "affine-cbernoulli", "hidden": 5, "activation": "identity"}}
    ],
    "data_object": "B"})");
  Rng rng(12);
  const auto ps = initialize(spec, rng);
  const std::vector<double> a{0.3, -0.6}, b{0.2, 0.7, 0.45};
  struct Case {
    SectionId section;
    const char* gen;
  };
  for (const Case& c : {Case{SectionId::theta, "p"}, Case{SectionId::theta, "f"}, Case{SectionId::theta, "c"},
                        Case{SectionId::dagger, "f"}, Case{SectionId::dagger, "c"}}) {
    const auto& gen = *spec.generator(c.gen);
    auto value = [&](const ParamStore& p, ParamStore* grads) {
      ad::Tape t;
      Binder bind(t, p, grads);
      ad::Var out;
      if (c.section == SectionId::dagger) {
        out = dagger_dist(gen, bind, t.constant(b)).log_density(t.constant(a));
      } else if (gen.primitive.kind == category::PrimitiveKind::gaussian_prior) {
        out = forward_dist(gen, bind, std::nullopt).log_density(t.constant(a));
      } else {
        out = forward_dist(gen, bind, t.constant(a)).log_density(t.constant(b));
      }
      if (grads) t.backward(out);
      return out.scalar();
    };
    ParamStore grads = ps.zeros_like();
    value(ps, &grads);
    const auto& blocks = (c.section == SectionId::theta ? ps.theta : ps.dagger).at(c.gen);
    for (const auto& [name, block] : blocks) {
      auto f = [&](std::span<const double> v) {
        ParamStore q = ps;
        auto& target = (c.section == SectionId::theta ? q.theta : q.dagger).at(c.gen).at(name).values;
        target.assign(v.begin(), v.end());
        return value(q, nullptr);
      };
      const auto fd = numerics::finite_diff_grad(f, block.values, 1e-5);
      const auto& an = (c.section == SectionId::theta ? grads.theta : grads.dagger).at(c.gen).at(name).values;
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < fd.size(); ++i) {
        num += (an[i] - fd[i]) * (an[i] - fd[i]);
        den += fd[i] * fd[i];
      }
      INFO(c.gen << "." << name);
      CHECK(std::sqrt(num) <= 1e-4 * std::max(1.0, std::sqrt(den)));
    }
  }
}

TEST_CASE("checkpoint round trip") {
  const auto spec = fixtures::diamond();
  Rng rng(5);
  Checkpoint c{category::spec_hash(spec), 77, 12, -3.0000000000000004, true, initialize(spec, rng)};
  c.params.hyper["beta"]["mean_b"] = {1, 1, {0.1 + 0.2}};
  const auto text = write_checkpoint(c);
  const auto back = read_checkpoint(text);
  CHECK(back == c);
  CHECK(write_checkpoint(back) == text);
  CHECK_THROWS_AS(read_checkpoint("{"), SpecError);
  CHECK_THROWS_AS(read_checkpoint("{\"format\": \"other\"}"), SpecError);
}

TEST_CASE("observation clamp") {
  const auto spec = fixtures::chain();
  const auto plan = compile(chain_of(spec, {"p", "f"}));
  const std::vector<double> x{0.0, 1.0, 0.5, 2.0};
  const auto c = clamp_observation(plan, x);
  CHECK(c[0] == numerics::kLambdaClamp);
  CHECK(c[1] == 1.0 - numerics::kLambdaClamp);
  CHECK(c[2] == 0.5);
  CHECK(c[3] == 1.0 - numerics::kLambdaClamp);
  const std::vector<double> short_x{0.1};
  CHECK_THROWS_AS(clamp_observation(plan, short_x), SpecError);
}
