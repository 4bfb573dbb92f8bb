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
#include <string>

#include "freecat/category.hpp"
#include "freecat/error.hpp"
#include "json.hpp"

namespace freecat::category {

using nlohmann::json;

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw SpecError(where + ": missing key '" + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) throw SpecError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

ObjectKind object_kind(const std::string& s, const std::string& where) {
  if (s == "space") return ObjectKind::space;
  if (s == "product") return ObjectKind::product;
  if (s == "exponential") return ObjectKind::exponential;
  if (s == "unit") return ObjectKind::unit;
  throw SpecError(where + ": unknown object kind '" + s + "'");
}

PrimitiveKind primitive_kind(const std::string& s, const std::string& where) {
  if (s == "none") return PrimitiveKind::none;
  if (s == "gaussian-prior") return PrimitiveKind::gaussian_prior;
  if (s == "affine-gaussian") return PrimitiveKind::affine_gaussian;
  if (s == "affine-cbernoulli") return PrimitiveKind::affine_cbernoulli;
  throw SpecError(where + ": unknown primitive kind '" + s + "'");
}

std::string_view kind_name(ObjectKind k) {
  switch (k) {
    case ObjectKind::unit: return "unit";
    case ObjectKind::space: return "space";
    case ObjectKind::product: return "product";
    case ObjectKind::exponential: return "exponential";
  }
  return "unit";
}

CategorySpec::ObjectDecl read_object(const json& j, std::size_t i) {
  std::string where = "objects[" + std::to_string(i) + "]";
  if (!j.is_object()) throw SpecError(where + ": expected an object");
  CategorySpec::ObjectDecl d;
  d.name = require_string(j, "name", where);
  where += " ('" + d.name + "')";
  d.kind = object_kind(require_string(j, "kind", where), where);
  switch (d.kind) {
    case ObjectKind::space: {
      const json& dim = require(j, "dim", where);
      if (!dim.is_number_integer() || dim.get<long long>() < 1)
        throw SpecError(where + ": 'dim' must be a positive integer");
      d.dim = dim.get<std::size_t>();
      break;
    }
    case ObjectKind::product: {
      const json& f = require(j, "factors", where);
      if (!f.is_array() || f.size() != 2 || !f[0].is_string() || !f[1].is_string())
        throw SpecError(where + ": 'factors' must be a list of two object names");
      d.left = f[0].get<std::string>();
      d.right = f[1].get<std::string>();
      break;
    }
    case ObjectKind::exponential:
      d.left = require_string(j, "dom", where);
      d.right = require_string(j, "cod", where);
      break;
    case ObjectKind::unit:
      break;
  }
  return d;
}

PrimitiveConfig read_primitive(const json& j, const std::string& where) {
  PrimitiveConfig p;
  if (!j.is_object()) throw SpecError(where + ": 'primitive' must be an object");
  p.kind = primitive_kind(require_string(j, "kind", where), where);
  if (auto it = j.find("hidden"); it != j.end()) {
    if (!it->is_number_integer() || it->get<long long>() < 1)
      throw SpecError(where + ": 'hidden' must be a positive integer");
    p.hidden = it->get<std::size_t>();
  }
  if (auto it = j.find("activation"); it != j.end()) {
    const std::string a = it->is_string() ? it->get<std::string>() : "";
    if (a == "tanh") p.activation = Activation::tanh;
    else if (a == "identity") p.activation = Activation::identity;
    else throw SpecError(where + ": 'activation' must be \"tanh\" or \"identity\"");
  }
  if (auto it = j.find("scale"); it != j.end()) {
    if (!it->is_number()) throw SpecError(where + ": 'scale' must be a number");
    p.init_scale = it->get<double>();
  }
  if (auto it = j.find("trainable"); it != j.end()) {
    if (!it->is_boolean()) throw SpecError(where + ": 'trainable' must be a boolean");
    p.trainable = it->get<bool>();
  }
  return p;
}

CategorySpec::GeneratorDecl read_generator(const json& j, std::size_t i) {
  std::string where = "generators[" + std::to_string(i) + "]";
  if (!j.is_object()) throw SpecError(where + ": expected an object");
  CategorySpec::GeneratorDecl g;
  g.name = require_string(j, "name", where);
  where += " ('" + g.name + "')";
  g.dom = require_string(j, "dom", where);
  g.cod = require_string(j, "cod", where);
  if (auto it = j.find("primitive"); it != j.end()) g.primitive = read_primitive(*it, where);
  return g;
}

}  // namespace

CategorySpec parse_spec(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SpecError("syntax error at line " + std::to_string(line_of(text, e.byte)) + ": " +
                    e.what());
  }
  if (!root.is_object()) throw SpecError("spec must be a JSON object");
  std::vector<CategorySpec::ObjectDecl> objects;
  std::vector<CategorySpec::GeneratorDecl> generators;
  if (auto it = root.find("objects"); it != root.end()) {
    if (!it->is_array()) throw SpecError("'objects' must be a list");
    for (std::size_t i = 0; i < it->size(); ++i) objects.push_back(read_object((*it)[i], i));
  }
  const json& gens = require(root, "generators", "spec");
  if (!gens.is_array()) throw SpecError("'generators' must be a list");
  for (std::size_t i = 0; i < gens.size(); ++i) generators.push_back(read_generator(gens[i], i));
  auto data = root.find("data_object");
  if (data == root.end()) throw SpecError("missing data_object");
  if (!data->is_string()) throw SpecError("'data_object' must be an object name");
  return CategorySpec::build(objects, generators, data->get<std::string>());
}

std::string serialize_spec(const CategorySpec& spec) {
  json objects = json::array();
  for (const auto& d : spec.object_decls()) {
    json o = {{"name", d.name}, {"kind", kind_name(d.kind)}};
    if (d.kind == ObjectKind::space) o["dim"] = d.dim;
    if (d.kind == ObjectKind::product) o["factors"] = {d.left, d.right};
    if (d.kind == ObjectKind::exponential) {
      o["dom"] = d.left;
      o["cod"] = d.right;
    }
    objects.push_back(std::move(o));
  }
  json generators = json::array();
  for (const auto& g : spec.generator_decls()) {
    json p = {{"kind", to_string(g.primitive.kind)},
              {"hidden", g.primitive.hidden},
              {"activation", to_string(g.primitive.activation)},
              {"scale", g.primitive.init_scale},
              {"trainable", g.primitive.trainable}};
    generators.push_back({{"name", g.name}, {"dom", g.dom}, {"cod", g.cod}, {"primitive", p}});
  }
  json root = {{"objects", objects},
               {"generators", generators},
               {"data_object", spec.data_object()->name}};
  return root.dump(2) + "\n";
}

std::uint64_t spec_hash(const CategorySpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_spec(spec)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace freecat::category
