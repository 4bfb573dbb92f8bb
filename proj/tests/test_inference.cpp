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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "freecat/error.hpp"
#include "freecat/inference.hpp"
#include "support.hpp"

using namespace freecat;
using namespace freecat::inference;
using model::Block;
using model::SectionId;

namespace {

Context context(const category::CategorySpec& spec) { return make_context(spec, sampler::WalkConfig{}); }

ParamStore params(const category::CategorySpec& spec, const Context& ctx, std::uint64_t seed) {
  Rng rng(seed);
  return init_params(spec, ctx, rng);
}

std::vector<double> flat(const ParamStore& p) {
  std::vector<double> out;
  model::for_each_block(p, [&](SectionId, const std::string&, const std::string&, const Block& b) {
    out.insert(out.end(), b.values.begin(), b.values.end());
  });
  return out;
}

std::vector<double> some_x(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(d);
  for (double& v : x) v = rng.normal();
  return x;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Probability that the diamond walk takes f, from β and the X4 row of W.
// Vertices: unit, X2, X4, p, f, g.
double diamond_f_prob(double beta, const std::vector<double>& w_x4) {
  Matrix a(6, 6);
  a(0, 3) = a(3, 1) = a(1, 4) = a(4, 2) = a(1, 5) = a(5, 2) = 1.0;
  const Matrix e = fixtures::series_exp(a);
  auto score = [&](int row) {
    std::vector<double> logits(6);
    for (int j = 0; j < 6; ++j) logits[j] = std::clamp((e(row, j) + w_x4[j]) / beta, -80.0, 80.0);
    return logits[2] - log_sum_exp(logits);
  };
  return 1.0 / (1.0 + std::exp(score(5) - score(4)));
}

}  // namespace

TEST_CASE("hyper layout covers only choices that matter") {
  const auto chain = fixtures::chain();
  const auto lc = context(chain).layout;
  CHECK_FALSE(lc.beta);
  CHECK(lc.w_rows.empty());

  const auto diamond = fixtures::diamond();
  const Context ctx = context(diamond);
  CHECK(ctx.layout.beta);
  REQUIRE(ctx.layout.w_rows.size() == 1);
  CHECK(ctx.graph->name(ctx.layout.w_rows[0]) == "X4");
  const auto p = params(diamond, ctx, 1);
  CHECK(p.hyper.contains("beta"));
  CHECK(p.hyper.contains("W.X4"));
  CHECK(p.hyper.at("W.X4").at("mean_b").values.size() == 6);
}

TEST_CASE("propose: chain path term is zero and draws are deterministic") {
  const auto spec = fixtures::chain();
  const Context ctx = context(spec);
  const auto p = params(spec, ctx, 2);
  const auto x = std::vector<double>{0.1, 0.9, 0.4, 0.6};
  Rng a(5), b(5);
  const Proposal pa = propose(ctx, x, p, a);
  const Proposal pb = propose(ctx, x, p, b);
  CHECK(category::signature(pa.morphism) == "p;f");
  CHECK(pa.trace.total_path_logprob == 0.0);
  CHECK(category::signature(pb.morphism) == category::signature(pa.morphism));
  CHECK(pa.beta == pb.beta);
  CHECK(pa.w == pb.w);
  CHECK(pa.logq_total == pb.logq_total);
  REQUIRE(pa.trace.latents.size() == 1);
  CHECK(pa.trace.latents[0].value == pb.trace.latents[0].value);
  CHECK(pa.trace.latents[0].value.size() == 2);
}

TEST_CASE("propose: symmetric diamond picks f and g equally") {
  const auto spec = fixtures::diamond();
  const Context ctx = context(spec);
  const auto p = params(spec, ctx, 3);
  const auto x = some_x(4, 9);
  Rng rng(11);
  const int n = 10000;
  int f = 0;
  for (int i = 0; i < n; ++i) f += category::signature(propose(ctx, x, p, rng).morphism) == "p;f";
  CHECK(std::abs(f / double(n) - 0.5) <= 0.02);
}

TEST_CASE("conjugate model: exact dagger gives the evidence") {
  fixtures::Conjugate conj;
  const Context ctx = context(conj.spec);
  CHECK(ctx.frozen.contains("f"));
  auto p = params(conj.spec, ctx, 4);
  conj.set_theta(p);
  conj.set_exact_dagger(p);
  const std::vector<double> x{1.3, -0.2, 0.8};
  const double evidence = conj.log_evidence(x);
  Rng rng(12);
  const auto est = elbo(ctx, x, p, 10000, rng);
  CHECK(std::abs(est.value - evidence) <= 1e-9);
  CHECK(est.std_error <= 1e-9);
  CHECK(est.parts.path_prior == 0.0);
  CHECK(est.parts.value() == doctest::Approx(est.value).epsilon(1e-12));

  // A mismatched dagger is a strict lower bound.
  p.dagger.at("f").at("b1").values[0] += 0.4;
  p.dagger.at("f").at("scale").values[1] += 0.5;
  const auto worse = elbo(ctx, x, p, 10000, rng);
  CHECK(worse.value <= evidence + 3.0 * worse.std_error);
  CHECK(worse.value < evidence - 0.01);
}

TEST_CASE("path terms cancel on every sample") {
  const auto spec = fixtures::diamond();
  const Context ctx = context(spec);
  auto p = params(spec, ctx, 5);
  p.hyper.at("W.X4").at("mean_b").values[4] = 0.7;
  Rng rng(13);
  const auto x = some_x(4, 3);
  for (int i = 0; i < 500; ++i) {
    const Sample s = build_sample(ctx, x, x, p, nullptr, &rng);
    CHECK(std::abs(s.parts.path_prior - s.parts.path_proposal) < 1e-12);
    CHECK(s.parts.path_proposal < 0.0);
    CHECK(s.logq_discrete.scalar() == doctest::Approx(s.parts.path_proposal).epsilon(1e-12));
  }
}

TEST_CASE("surrogate gradient on the chain is the pathwise gradient") {
  const auto spec = fixtures::chain();
  const Context ctx = context(spec);
  const auto p = params(spec, ctx, 6);
  const std::vector<double> x{0.2, 0.7, 0.5, 0.1};
  Rng rng(14);
  ParamStore ga = p.zeros_like(), gb = p.zeros_like();
  const Sample s = build_sample(ctx, x, x, p, &ga, &rng);
  CHECK(s.logq_discrete.scalar() == 0.0);
  s.tape->backward(surrogate_term(s, 3.7));
  const Sample r = build_sample(ctx, x, x, p, &gb, nullptr, &s.noise);
  CHECK(r.ell.scalar() == s.ell.scalar());
  r.tape->backward(r.ell);
  CHECK(flat(ga) == flat(gb));

  // and matches central differences of ell with the noise held fixed
  auto gd = flat(ga);
  int checked = 0;
  for (const char* block : {"w1", "b2", "scale"}) {
    for (std::size_t i = 0; i < 2; ++i) {
      auto ell_at = [&](double h) {
        ParamStore q = p;
        q.dagger.at("f").at(block).values[i] += h;
        return build_sample(ctx, x, x, q, nullptr, nullptr, &s.noise).ell.scalar();
      };
      const double fd = (ell_at(1e-5) - ell_at(-1e-5)) / 2e-5;
      ParamStore g = p.zeros_like();
      const Sample t = build_sample(ctx, x, x, p, &g, nullptr, &s.noise);
      t.tape->backward(t.ell);
      const double an = g.dagger.at("f").at(block).values[i];
      CHECK(std::abs(an - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
      ++checked;
    }
  }
  CHECK(checked == 6);
}

TEST_CASE("centered learning signal adds no score gradient") {
  const auto spec = fixtures::diamond();
  const Context ctx = context(spec);
  const auto p = params(spec, ctx, 7);
  const auto x = some_x(4, 4);
  Rng rng(15);
  for (int i = 0; i < 20; ++i) {
    ParamStore ga = p.zeros_like(), gb = p.zeros_like();
    const Sample s = build_sample(ctx, x, x, p, &ga, &rng);
    s.tape->backward(surrogate_term(s, s.ell.scalar()));
    const Sample r = build_sample(ctx, x, x, p, &gb, nullptr, &s.noise);
    r.tape->backward(r.ell);
    CHECK(flat(ga) == flat(gb));
  }
}

TEST_CASE("score estimator on the two-branch diamond is unbiased") {
  const auto spec = fixtures::diamond();
  const Context ctx = context(spec);
  auto p = params(spec, ctx, 8);
  auto& hb = p.hyper.at("beta");
  auto& hw = p.hyper.at("W.X4");
  hb.at("mean_b").values[0] = 0.2;
  hb.at("logscale_b").values[0] = -0.5;
  const std::vector<double> mb{0.3, -0.2, 0.1, -0.4, 0.6, -0.6};
  hw.at("mean_b").values = mb;
  hw.at("logscale_b").values.assign(6, -0.3);
  const auto x = some_x(4, 5);

  // direction: d/dt of mean_b[f] + 0.5 t of the beta mean
  auto pi_at = [&](const std::vector<double>& eps, double t) {
    const double beta = std::exp(0.2 + 0.5 * t + std::exp(-0.5) * eps[0]);
    std::vector<double> w(6);
    for (int j = 0; j < 6; ++j) w[j] = std::exp(mb[j] + (j == 4 ? t : 0.0) + std::exp(-0.3) * eps[1 + j]);
    return diamond_f_prob(beta, w);
  };

  Rng rng(16);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0, oracle = 0.0;
  double s0 = 0.0, s0_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    ParamStore g = p.zeros_like();
    const Sample s = build_sample(ctx, x, x, p, &g, &rng);
    s.tape->backward(s.logq_discrete);
    const double score = g.hyper.at("W.X4").at("mean_b").values[4] + 0.5 * g.hyper.at("beta").at("mean_b").values[0];
    const double h = category::signature(s.morphism) == "p;f" ? 1.0 : 0.0;
    sum += h * score;
    sum_sq += h * score * h * score;
    s0 += score;
    s0_sq += score * score;
    const double d = 1e-6;
    oracle += (pi_at(s.noise.hyper, d) - pi_at(s.noise.hyper, -d)) / (2 * d);
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  oracle /= n;
  MESSAGE("estimator " << mean << " +- " << se << ", analytic " << oracle);
  CHECK(std::abs(oracle) > 4 * se);
  CHECK(std::abs(mean - oracle) <= 2 * se);

  const double m0 = s0 / n;
  const double se0 = std::sqrt((s0_sq / n - m0 * m0) / n);
  CHECK(std::abs(m0) <= 3 * se0);
}

TEST_CASE("train: zero epochs, determinism, rising ELBO") {
  fixtures::Conjugate conj;
  std::string text = fixtures::kConjugate;
  for (std::size_t at; (at = text.find("false")) != std::string::npos;) text.replace(at, 5, "true");
  const auto spec = category::parse_spec(text);
  const Context ctx = context(spec);
  CHECK(ctx.frozen.empty());
  Rng data_rng(17);
  const Dataset data = conj.draw(200, data_rng);
  TrainState init{params(spec, ctx, 9), 0, 0.0, false};

  TrainConfig cfg;
  cfg.epochs = 0;
  const auto none = train(ctx, data, init, cfg, Rng(1));
  CHECK(none.metrics.empty());
  CHECK(none.state.params == init.params);
  CHECK(none.state.steps == 0);

  cfg.epochs = 30;
  cfg.batch_size = 20;
  const auto a = train(ctx, data, init, cfg, Rng(1));
  const auto b = train(ctx, data, init, cfg, Rng(1));
  REQUIRE(a.metrics.size() == 30);
  CHECK(a.state.steps == 300);
  CHECK(a.state.params == b.state.params);
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].elbo == b.metrics[i].elbo);
    CHECK(a.metrics[i].baseline == b.metrics[i].baseline);
    CHECK(a.metrics[i].path_logprob == 0.0);
  }
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 10; ++i) {
    first += a.metrics[i].elbo;
    last += a.metrics[20 + i].elbo;
  }
  MESSAGE("first " << first / 10 << " last " << last / 10);
  CHECK(last > first);
}

TEST_CASE("train leaves frozen generators alone") {
  fixtures::Conjugate conj;
  const Context ctx = context(conj.spec);
  Rng data_rng(18);
  const Dataset data = conj.draw(40, data_rng);
  TrainState init{params(conj.spec, ctx, 10), 0, 0.0, false};
  conj.set_theta(init.params);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 10;
  const auto out = train(ctx, data, init, cfg, Rng(2));
  CHECK(out.state.params.theta == init.params.theta);
  CHECK(out.state.params.dagger != init.params.dagger);
}

TEST_CASE("train aborts on a non-finite gradient and names the block") {
  const auto spec = fixtures::diamond();
  const Context ctx = context(spec);
  Dataset data(8, std::vector<double>(4, 1e155));
  TrainState init{params(spec, ctx, 11), 0, 0.0, false};
  TrainConfig cfg;
  cfg.epochs = 1;
  std::string what;
  try {
    train(ctx, data, init, cfg, Rng(3));
  } catch (const NumericalError& e) {
    what = e.what();
  }
  MESSAGE(what);
  CHECK(what.find("non-finite") != std::string::npos);
  CHECK(what.find("block") != std::string::npos);
}

TEST_CASE("train rejects rows of the wrong length") {
  const auto spec = fixtures::chain();
  const Context ctx = context(spec);
  Dataset data{{0.1, 0.2, 0.3}};
  TrainState init{params(spec, ctx, 12), 0, 0.0, false};
  CHECK_THROWS_AS(train(ctx, data, init, TrainConfig{}, Rng(4)), SpecError);
}

TEST_CASE("structure posterior frequencies") {
  const auto chain = fixtures::chain();
  const Context cc = context(chain);
  Dataset d1{{0.1, 0.2, 0.3, 0.4}, {0.5, 0.5, 0.5, 0.5}};
  Rng rng(19);
  const auto single = structure_posterior(cc, d1, params(chain, cc, 13), 100, rng);
  REQUIRE(single.size() == 1);
  CHECK(single.at("p;f") == 1.0);

  const auto diamond = fixtures::diamond();
  const Context dc = context(diamond);
  Dataset d2{some_x(4, 1), some_x(4, 2)};
  const auto freq = structure_posterior(dc, d2, params(diamond, dc, 14), 2000, rng);
  double total = 0.0;
  for (const auto& [sig, f] : freq) {
    CHECK((sig == "p;f" || sig == "p;g"));
    total += f;
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("dataset ELBO does not depend on row order") {
  fixtures::Conjugate conj;
  const Context ctx = context(conj.spec);
  auto p = params(conj.spec, ctx, 15);
  conj.set_theta(p);
  Rng data_rng(20);
  Dataset data = conj.draw(25, data_rng);
  const auto a = evaluate(ctx, data, p, 3, Rng(7));
  std::reverse(data.begin(), data.end());
  std::rotate(data.begin(), data.begin() + 7, data.end());
  const auto b = evaluate(ctx, data, p, 3, Rng(7));
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
  CHECK(a.std_error == doctest::Approx(b.std_error).epsilon(1e-9));
  const auto c = evaluate(ctx, data, p, 3, Rng(8));
  CHECK(c.value != b.value);
}

TEST_CASE("surrogate loss averages the per-sample terms") {
  const auto spec = fixtures::chain();
  const Context ctx = context(spec);
  const auto p = params(spec, ctx, 16);
  const std::vector<double> x{0.2, 0.7, 0.5, 0.1};
  ad::Tape t;
  std::vector<SurrogateRecord> recs{{t.constant(-2.0), t.constant(-0.5), -1.0},
                                    {t.constant(-4.0), t.constant(-1.0), -1.0}};
  // (-2 + (-1)(-0.5) + -4 + (-3)(-1)) / 2
  CHECK(surrogate_loss(recs).scalar() == doctest::Approx(-1.25));
  Rng rng(21);
  const auto est = elbo(ctx, x, p, 50, rng, std::nullopt, -3.0);
  CHECK(est.surrogate == doctest::Approx(est.value));
  CHECK(est.samples == 50);
  CHECK(est.parts.value() == doctest::Approx(est.value));
}
