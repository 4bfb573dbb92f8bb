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
#include <functional>
#include <map>
#include <set>

#include "freecat/category.hpp"
#include "freecat/error.hpp"

namespace freecat::category {

Type unit_type() {
  static const Type unit = std::make_shared<const TypeObject>(
      TypeObject{ObjectKind::unit, std::string(kUnitName), 0, nullptr, nullptr});
  return unit;
}

Type space_type(std::string name, std::size_t dim) {
  return std::make_shared<const TypeObject>(
      TypeObject{ObjectKind::space, std::move(name), dim, nullptr, nullptr});
}

Type product_type(Type left, Type right, std::string name) {
  return std::make_shared<const TypeObject>(
      TypeObject{ObjectKind::product, std::move(name), 0, std::move(left), std::move(right)});
}

Type exponential_type(Type dom, Type cod, std::string name) {
  return std::make_shared<const TypeObject>(
      TypeObject{ObjectKind::exponential, std::move(name), 0, std::move(dom), std::move(cod)});
}

bool same_type(const Type& a, const Type& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case ObjectKind::unit:
      return true;
    case ObjectKind::space:
      return a->name == b->name && a->dim == b->dim;
    case ObjectKind::product:
    case ObjectKind::exponential:
      return same_type(a->left, b->left) && same_type(a->right, b->right);
  }
  return false;
}

std::string display(const Type& t) {
  switch (t->kind) {
    case ObjectKind::unit:
      return "⊤";
    case ObjectKind::space:
      return t->name;
    case ObjectKind::product:
      return "(" + display(t->left) + "," + display(t->right) + ")";
    case ObjectKind::exponential: {
      auto wrap = [](const Type& x) {
        return x->kind == ObjectKind::space || x->kind == ObjectKind::unit ? display(x)
                                                                            : "{" + display(x) + "}";
      };
      return wrap(t->right) + "^" + wrap(t->left);
    }
  }
  return {};
}

std::size_t value_dim(const Type& t) {
  switch (t->kind) {
    case ObjectKind::unit:
    case ObjectKind::exponential:
      return 0;
    case ObjectKind::space:
      return t->dim;
    case ObjectKind::product:
      return value_dim(t->left) + value_dim(t->right);
  }
  return 0;
}

namespace {

bool contains_exponential(const Type& t) {
  switch (t->kind) {
    case ObjectKind::exponential:
      return true;
    case ObjectKind::product:
      return contains_exponential(t->left) || contains_exponential(t->right);
    default:
      return false;
  }
}

bool carries_vector(const Type& t) { return !contains_exponential(t) && value_dim(t) > 0; }

}  // namespace

std::string_view to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::none: return "none";
    case PrimitiveKind::gaussian_prior: return "gaussian-prior";
    case PrimitiveKind::affine_gaussian: return "affine-gaussian";
    case PrimitiveKind::affine_cbernoulli: return "affine-cbernoulli";
    case PrimitiveKind::product_macro: return "product-macro";
    case PrimitiveKind::exponential_macro: return "exponential-macro";
  }
  return "none";
}

std::string_view to_string(Activation a) {
  return a == Activation::tanh ? "tanh" : "identity";
}

std::string macro_name(std::string_view object_name) {
  return "intro_" + std::string(object_name);
}

CategorySpec CategorySpec::build(const std::vector<ObjectDecl>& objects,
                                 const std::vector<GeneratorDecl>& generators,
                                 const std::string& data_object) {
  CategorySpec spec;
  spec.object_decls_ = objects;
  spec.generator_decls_ = generators;

  // Declarations, unit first. An explicit {"name": "unit", "kind": "unit"} is
  // accepted and folded into the implicit unit.
  std::vector<const ObjectDecl*> decls;
  std::map<std::string, std::size_t, std::less<>> index;
  index.emplace(std::string(kUnitName), 0);
  decls.push_back(nullptr);
  for (const auto& d : objects) {
    if (d.kind == ObjectKind::unit) {
      if (d.name != kUnitName)
        throw SpecError("duplicate unit object '" + d.name + "': the unit object is named 'unit'");
      continue;
    }
    if (d.name.empty()) throw SpecError("object with empty name");
    if (!index.emplace(d.name, decls.size()).second)
      throw SpecError("duplicate object name '" + d.name + "'");
    decls.push_back(&d);
  }

  // Resolve structure, allowing forward references but not cycles.
  std::vector<Type> resolved(decls.size());
  std::vector<int> state(decls.size(), 0);
  resolved[0] = unit_type();
  state[0] = 2;
  std::function<Type(std::size_t)> resolve = [&](std::size_t i) -> Type {
    if (state[i] == 2) return resolved[i];
    const ObjectDecl& d = *decls[i];
    if (state[i] == 1) throw SpecError("object '" + d.name + "' is defined in terms of itself");
    state[i] = 1;
    auto lookup = [&](const std::string& name, const char* role) {
      auto it = index.find(name);
      if (it == index.end())
        throw SpecError("unknown object '" + name + "' referenced as " + role + " of object '" +
                        d.name + "'");
      return resolve(it->second);
    };
    switch (d.kind) {
      case ObjectKind::space:
        if (d.dim < 1) throw SpecError("space object '" + d.name + "' must have dim >= 1");
        resolved[i] = space_type(d.name, d.dim);
        break;
      case ObjectKind::product:
        resolved[i] = product_type(lookup(d.left, "factor"), lookup(d.right, "factor"), d.name);
        break;
      case ObjectKind::exponential:
        resolved[i] = exponential_type(lookup(d.left, "dom"), lookup(d.right, "cod"), d.name);
        break;
      case ObjectKind::unit:
        break;
    }
    state[i] = 2;
    return resolved[i];
  };
  for (std::size_t i = 1; i < decls.size(); ++i) resolve(i);
  for (std::size_t i = 1; i < resolved.size(); ++i)
    for (std::size_t j = 1; j < i; ++j)
      if (resolved[i]->kind != ObjectKind::space && same_type(resolved[i], resolved[j]))
        throw SpecError("objects '" + decls[j]->name + "' and '" + decls[i]->name +
                        "' have the same structure " + display(resolved[i]));
  spec.objects_ = resolved;

  std::set<std::string, std::less<>> gen_names;
  for (const auto& g : generators) {
    if (g.name.empty()) throw SpecError("generator with empty name");
    if (!gen_names.insert(g.name).second)
      throw SpecError("duplicate generator name '" + g.name + "'");
    auto dom = index.find(g.dom);
    if (dom == index.end())
      throw SpecError("generator '" + g.name + "' references unknown object '" + g.dom + "'");
    auto cod = index.find(g.cod);
    if (cod == index.end())
      throw SpecError("generator '" + g.name + "' references unknown object '" + g.cod + "'");
    Generator gen{g.name, resolved[dom->second], resolved[cod->second], g.primitive, false};
    const auto& p = g.primitive;
    switch (p.kind) {
      case PrimitiveKind::none:
        break;
      case PrimitiveKind::gaussian_prior:
        if (gen.dom->kind != ObjectKind::unit || !carries_vector(gen.cod))
          throw SpecError("generator '" + g.name +
                          "': gaussian-prior needs domain unit and a real-vector codomain");
        break;
      case PrimitiveKind::affine_gaussian:
      case PrimitiveKind::affine_cbernoulli:
        if (!carries_vector(gen.dom) || !carries_vector(gen.cod))
          throw SpecError("generator '" + g.name + "': " + std::string(to_string(p.kind)) +
                          " needs real-vector domain and codomain");
        break;
      case PrimitiveKind::product_macro:
      case PrimitiveKind::exponential_macro:
        throw SpecError("generator '" + g.name + "': macro primitives are created automatically");
    }
    if (p.hidden < 1) throw SpecError("generator '" + g.name + "': hidden width must be >= 1");
    if (!(p.init_scale > 0.0)) throw SpecError("generator '" + g.name + "': scale must be > 0");
    spec.generators_.push_back(std::make_shared<const Generator>(std::move(gen)));
  }

  for (std::size_t i = 1; i < resolved.size(); ++i) {
    const auto& obj = resolved[i];
    if (obj->kind != ObjectKind::product && obj->kind != ObjectKind::exponential) continue;
    std::string name = macro_name(obj->name);
    if (!gen_names.insert(name).second)
      throw SpecError("duplicate generator name '" + name + "' (reserved for the macro of '" +
                      obj->name + "')");
    PrimitiveConfig prim;
    prim.kind = obj->kind == ObjectKind::product ? PrimitiveKind::product_macro
                                                 : PrimitiveKind::exponential_macro;
    spec.generators_.push_back(std::make_shared<const Generator>(
        Generator{std::move(name), unit_type(), obj, prim, true}));
  }

  if (data_object.empty()) throw SpecError("missing data_object");
  auto data = index.find(data_object);
  if (data == index.end()) throw SpecError("unknown data object '" + data_object + "'");
  if (data->second == 0) throw SpecError("the data object cannot be the unit");
  spec.data_index_ = data->second;

  // Every object must be reachable from the unit along generator edges.
  std::vector<bool> seen(resolved.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t at = stack.back();
    stack.pop_back();
    for (const auto& g : spec.generators_) {
      if (!same_type(g->dom, resolved[at])) continue;
      const std::size_t to = *spec.object_index(g->cod);
      if (!seen[to]) {
        seen[to] = true;
        stack.push_back(to);
      }
    }
  }
  for (std::size_t i = 1; i < resolved.size(); ++i)
    if (!seen[i]) throw SpecError("object '" + decls[i]->name + "' is unreachable from unit");
  return spec;
}

std::size_t CategorySpec::macro_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(generators_.begin(), generators_.end(), [](const auto& g) { return g->is_macro; }));
}

std::optional<std::size_t> CategorySpec::find_object(std::string_view name) const {
  for (std::size_t i = 0; i < objects_.size(); ++i)
    if (objects_[i]->name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> CategorySpec::object_index(const Type& t) const {
  for (std::size_t i = 0; i < objects_.size(); ++i)
    if (same_type(objects_[i], t)) return i;
  return std::nullopt;
}

std::optional<std::size_t> CategorySpec::find_generator(std::string_view name) const {
  for (std::size_t i = 0; i < generators_.size(); ++i)
    if (generators_[i]->name == name) return i;
  return std::nullopt;
}

const GeneratorRef& CategorySpec::generator(std::string_view name) const {
  auto i = find_generator(name);
  if (!i) throw SpecError("unknown generator '" + std::string(name) + "'");
  return generators_[*i];
}

}  // namespace freecat::category
