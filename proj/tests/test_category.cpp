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

#include <string>

#include "doctest.h"
#include "freecat/category.hpp"
#include "freecat/error.hpp"
#include "support.hpp"

using namespace freecat;
using namespace freecat::category;

namespace {

const char* kWithProduct = R"({
  "objects": [
    {"name": "X2", "kind": "space", "dim": 2},
    {"name": "X4", "kind": "space", "dim": 4},
    {"name": "P", "kind": "product", "factors": ["X2", "X4"]}
  ],
  "generators": [
    {"name": "p", "dom": "unit", "cod": "X2"},
    {"name": "q", "dom": "unit", "cod": "X4"},
    {"name": "f", "dom": "X2", "cod": "X4"},
    {"name": "h", "dom": "P", "cod": "X4"}
  ],
  "data_object": "X4"
})";

std::string message_of(const std::string& text) {
  try {
    parse_spec(text);
  } catch (const SpecError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("diamond spec parses") {
  const auto spec = fixtures::diamond();
  CHECK(spec.objects().size() == 3);  // unit, X2, X4
  CHECK(spec.generators().size() == 3);
  CHECK(spec.macro_count() == 0);
  CHECK(spec.unit()->kind == ObjectKind::unit);
  CHECK(spec.data_object()->name == "X4");
  CHECK(value_dim(spec.data_object()) == 4);
}

TEST_CASE("product objects get a macro") {
  const auto spec = parse_spec(kWithProduct);
  CHECK(spec.macro_count() == 1);
  const auto& m = spec.generators().back();
  CHECK(m->is_macro);
  CHECK(m->name == macro_name("P"));
  CHECK(m->dom->kind == ObjectKind::unit);
  CHECK(display(m->cod) == "(X2,X4)");
  CHECK(value_dim(m->cod) == 6);
}

TEST_CASE("spec errors") {
  const std::string unknown = message_of(R"({"objects": [{"name": "X2", "kind": "space", "dim": 2}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X2"}, {"name": "f", "dom": "X2", "cod": "X9"}],
    "data_object": "X2"})");
  CHECK(unknown.find("unknown object") != std::string::npos);
  CHECK(unknown.find("'f'") != std::string::npos);

  CHECK(message_of("{\n\"objects\": [\n}").find("line 3") != std::string::npos);
  CHECK(message_of(R"({"objects": [{"name": "X", "kind": "space", "dim": 1}, {"name": "X", "kind": "space", "dim": 2}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X"}], "data_object": "X"})")
            .find("duplicate") != std::string::npos);
  CHECK(message_of(R"({"objects": [{"name": "X", "kind": "space", "dim": 1}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X"}, {"name": "p", "dom": "X", "cod": "X"}],
    "data_object": "X"})")
            .find("duplicate") != std::string::npos);
  CHECK(message_of(R"({"objects": [{"name": "X", "kind": "space", "dim": 1}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X"}]})")
            .find("data_object") != std::string::npos);
  CHECK(message_of(R"({"objects": [{"name": "X", "kind": "space", "dim": 1}, {"name": "Y", "kind": "space", "dim": 1}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X"}], "data_object": "X"})")
            .find("unreachable") != std::string::npos);
  CHECK(message_of(R"({"objects": [{"name": "X", "kind": "space", "dim": 0}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X"}], "data_object": "X"})") != "");
  CHECK(message_of(R"({"objects": [{"name": "X", "kind": "space", "dim": 1}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X"}], "data_object": "unit"})") != "");
}

TEST_CASE("compose") {
  const auto spec = fixtures::diamond();
  const auto p = Morphism::generator(spec.generator("p"));
  const auto f = Morphism::generator(spec.generator("f"));
  const auto x2 = spec.objects()[1];
  CHECK(compose(Morphism::identity(x2), f) == f);
  CHECK(compose(f, Morphism::identity(spec.data_object())) == f);
  const auto pf = compose(p, f);
  CHECK(pf.dom()->kind == ObjectKind::unit);
  CHECK(pf.cod()->name == "X4");
  const auto chain = generator_chain(pf);
  REQUIRE(chain.size() == 2);
  CHECK(chain[0].gen->name == "p");
  CHECK(chain[1].gen->name == "f");
  CHECK(signature(pf) == "p;f");
  try {
    compose(f, p);
    FAIL("expected a type error");
  } catch (const TypeError& e) {
    const std::string what = e.what();
    CHECK(what.find("X4") != std::string::npos);
    CHECK(what.find("⊤") != std::string::npos);
  }
}

TEST_CASE("product") {
  const auto spec = parse_spec(kWithProduct);
  const auto p = Morphism::generator(spec.generator("p"));
  const auto q = Morphism::generator(spec.generator("q"));
  const auto f = Morphism::generator(spec.generator("f"));
  CHECK(display(product(p, q).cod()) == "(X2,X4)");
  CHECK(display(product(p, p).cod()) == "(X2,X2)");
  CHECK_THROWS_AS(product(f, p), TypeError);
  const auto m = Morphism::macro(spec.generator(macro_name("P")), product(p, q));
  const auto chain = generator_chain(compose(m, Morphism::generator(spec.generator("h"))));
  REQUIRE(chain.size() == 2);
  REQUIRE(chain[0].branches.size() == 2);
  CHECK(chain[0].branches[0][0].gen->name == "p");
  CHECK(chain[0].branches[1][0].gen->name == "q");
  CHECK(generator_chain(Morphism::identity(spec.objects()[1])).empty());
}

TEST_CASE("associativity and identity laws") {
  const char* text = R"({
    "objects": [{"name": "A", "kind": "space", "dim": 1}, {"name": "B", "kind": "space", "dim": 1},
                {"name": "C", "kind": "space", "dim": 1}],
    "generators": [{"name": "a", "dom": "unit", "cod": "A"}, {"name": "b", "dom": "A", "cod": "B"},
                   {"name": "c", "dom": "B", "cod": "C"}],
    "data_object": "C"})";
  const auto spec = parse_spec(text);
  const auto a = Morphism::generator(spec.generator("a"));
  const auto b = Morphism::generator(spec.generator("b"));
  const auto c = Morphism::generator(spec.generator("c"));
  CHECK(normalize(compose(compose(a, b), c)) == normalize(compose(a, compose(b, c))));
  CHECK(normalize(compose(Morphism::identity(a.dom()), a)) == a);
  CHECK(normalize(compose(a, Morphism::identity(a.cod()))) == a);
  CHECK(type_checks(compose(compose(a, b), c)));
}

TEST_CASE("dagger is a structural involution") {
  const auto spec = fixtures::diamond();
  const auto pf = compose(Morphism::generator(spec.generator("p")), Morphism::generator(spec.generator("f")));
  const auto d = dagger(pf);
  CHECK(d.dom()->name == "X4");
  CHECK(d.cod()->kind == ObjectKind::unit);
  CHECK(signature(d) == "f†;p†");
  CHECK(dagger(d) == pf);
  const auto id = Morphism::identity(spec.objects()[1]);
  CHECK(dagger(id) == id);
  CHECK(type_checks(d));
}

TEST_CASE("dot rendering") {
  const auto spec = fixtures::diamond();
  const auto p = Morphism::generator(spec.generator("p"));
  const std::string single = to_dot(p);
  CHECK(single.find("p: ⊤→X2") != std::string::npos);
  CHECK(single.find("->") == std::string::npos);
  const auto pf = compose(p, Morphism::generator(spec.generator("f")));
  const std::string two = to_dot(pf);
  CHECK(two.find("n0 -> n1") != std::string::npos);
  CHECK(to_dot(pf) == two);
}

TEST_CASE("serialize round trip") {
  for (const char* text : {fixtures::kChain, fixtures::kDiamond, kWithProduct}) {
    const auto a = parse_spec(text);
    const auto b = parse_spec(serialize_spec(a));
    CHECK(serialize_spec(a) == serialize_spec(b));
    CHECK(spec_hash(a) == spec_hash(b));
    CHECK(a.generators().size() == b.generators().size());
  }
  CHECK(spec_hash(fixtures::chain()) != spec_hash(fixtures::diamond()));
}

TEST_CASE("primitive domain rules") {
  CHECK(message_of(R"({"objects": [{"name": "X", "kind": "space", "dim": 1}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X", "primitive": {"kind": "affine-gaussian"}}],
    "data_object": "X"})") != "");
  CHECK(message_of(R"({"objects": [{"name": "X", "kind": "space", "dim": 1}],
    "generators": [{"name": "p", "dom": "unit", "cod": "X", "primitive": {"kind": "gaussian-prior", "hidden": 0}}],
    "data_object": "X"})") != "");
}
