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

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace freecat::category {

enum class ObjectKind { unit, space, product, exponential };

struct TypeObject;
using Type = std::shared_ptr<const TypeObject>;

/// An object of the category. Products and exponentials refer to their
/// parts by value, so equality is structural (see same_type).
struct TypeObject {
  ObjectKind kind = ObjectKind::unit;
  std::string name;
  std::size_t dim = 0;  // space only
  Type left;            // product: first factor; exponential: domain
  Type right;           // product: second factor; exponential: codomain
};

inline constexpr std::string_view kUnitName = "unit";

Type unit_type();
Type space_type(std::string name, std::size_t dim);
Type product_type(Type left, Type right, std::string name = {});
Type exponential_type(Type dom, Type cod, std::string name = {});

bool same_type(const Type& a, const Type& b);
/// Human-readable form: "⊤", a space's name, "(A,B)", "B^A".
std::string display(const Type& t);
/// Length of the real vector carrying a value of this type (0 for ⊤ and
/// exponentials, which do not carry vectors).
std::size_t value_dim(const Type& t);

enum class PrimitiveKind {
  none,  // structural only; not executable
  gaussian_prior,
  affine_gaussian,
  affine_cbernoulli,
  product_macro,
  exponential_macro,
};

enum class Activation { tanh, identity };

std::string_view to_string(PrimitiveKind k);
std::string_view to_string(Activation a);

struct PrimitiveConfig {
  PrimitiveKind kind = PrimitiveKind::none;
  std::size_t hidden = 32;
  Activation activation = Activation::tanh;
  // Initial output noise scale for the Gaussian kinds.
  double init_scale = 1.0;
  // Frozen generators keep their initial forward parameters during training.
  bool trainable = true;

  bool operator==(const PrimitiveConfig&) const = default;
};

struct Generator {
  std::string name;
  Type dom;
  Type cod;
  PrimitiveConfig primitive;
  bool is_macro = false;
};

using GeneratorRef = std::shared_ptr<const Generator>;

/// A validated, immutable finitely generated free category: objects (⊤ at
/// index 0), generators (user generators first, then auto-inserted macros,
/// one per declared product or exponential object) and the data object.
class CategorySpec {
 public:
  struct ObjectDecl {
    std::string name;
    ObjectKind kind = ObjectKind::space;
    std::size_t dim = 0;
    std::string left;
    std::string right;
  };
  struct GeneratorDecl {
    std::string name;
    std::string dom;
    std::string cod;
    PrimitiveConfig primitive;
  };

  /// Resolves names and validates every invariant; throws SpecError.
  static CategorySpec build(const std::vector<ObjectDecl>& objects,
                            const std::vector<GeneratorDecl>& generators,
                            const std::string& data_object);

  std::span<const Type> objects() const noexcept { return objects_; }
  std::span<const GeneratorRef> generators() const noexcept { return generators_; }
  const Type& unit() const { return objects_.front(); }
  const Type& data_object() const { return objects_[data_index_]; }
  std::size_t data_index() const noexcept { return data_index_; }
  std::size_t macro_count() const noexcept;

  std::optional<std::size_t> find_object(std::string_view name) const;
  /// Index of the declared object structurally equal to t.
  std::optional<std::size_t> object_index(const Type& t) const;
  std::optional<std::size_t> find_generator(std::string_view name) const;
  const GeneratorRef& generator(std::string_view name) const;

  /// Declarations this spec was built from (for serialization).
  const std::vector<ObjectDecl>& object_decls() const noexcept { return object_decls_; }
  const std::vector<GeneratorDecl>& generator_decls() const noexcept { return generator_decls_; }

 private:
  std::vector<Type> objects_;
  std::vector<GeneratorRef> generators_;
  std::size_t data_index_ = 0;
  std::vector<ObjectDecl> object_decls_;
  std::vector<GeneratorDecl> generator_decls_;
};

/// Spec-file reader/writer. The format is JSON with top-level keys
/// `objects`, `generators` and `data_object`.
CategorySpec parse_spec(std::string_view text);
std::string serialize_spec(const CategorySpec& spec);
/// FNV-1a over the canonical serialization.
std::uint64_t spec_hash(const CategorySpec& spec);

/// Name given to the macro generator of a product or exponential object.
std::string macro_name(std::string_view object_name);

// ---------------------------------------------------------------------------
// Morphisms

enum class Term { identity, generator, compose, product, macro };

/// An immutable composite term. Values built through compose(), product()
/// and dagger() are always in normal form: compositions are right-nested
/// chains with identities elided.
class Morphism {
 public:
  static Morphism identity(Type obj);
  static Morphism generator(GeneratorRef gen);
  /// A macro generator standing for its expansion `body`. For product
  /// macros body : ⊤ → (A,B); for exponential macros B^A the body is the
  /// morphism-valued latent A → B and the node itself types as ⊤ → B^A.
  static Morphism macro(GeneratorRef gen, Morphism body);

  Term term() const;
  const Type& dom() const;
  const Type& cod() const;
  /// Generator and macro nodes only.
  const GeneratorRef& gen() const;
  /// Reversed (stochastic-inverse) node; flips dom and cod.
  bool daggered() const;
  /// compose: left then right; product: the two branches; macro: left is the body.
  const Morphism& left() const;
  const Morphism& right() const;

  bool operator==(const Morphism& other) const;

 private:
  struct Node;
  explicit Morphism(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;

  friend Morphism compose(const Morphism&, const Morphism&);
  friend Morphism product(const Morphism&, const Morphism&);
  friend Morphism dagger(const Morphism&);
  friend Morphism normalize(const Morphism&);
};

/// f then g ("f >> g"). Throws TypeError unless cod(f) = dom(g).
Morphism compose(const Morphism& f, const Morphism& g);
/// ⊤ → (cod f, cod g). Throws TypeError unless dom f = dom g = ⊤.
Morphism product(const Morphism& f, const Morphism& g);
/// Structural reversal: (f;g)† = g†;f†, and products split into daggers.
Morphism dagger(const Morphism& m);
Morphism normalize(const Morphism& m);

/// Recomputes dom/cod bottom-up and checks them against the stored types.
bool type_checks(const Morphism& m);

struct ChainItem {
  GeneratorRef gen;  // null for a bare product
  bool daggered = false;
  std::vector<std::vector<ChainItem>> branches;
};

/// Top-level generators in execution order; macros and products carry their
/// expansions as nested branches.
std::vector<ChainItem> generator_chain(const Morphism& m);

/// Canonical text form, e.g. "p;f" or "intro_P(p,q);h".
std::string signature(const Morphism& m);

/// Deterministic DOT digraph read top to bottom.
std::string to_dot(const Morphism& m, std::string_view graph_name = "morphism");

}  // namespace freecat::category
