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

#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "freecat/category.hpp"
#include "freecat/error.hpp"

namespace freecat::category {

struct Morphism::Node {
  Term term = Term::identity;
  Type dom;
  Type cod;
  GeneratorRef gen;
  bool daggered = false;
  std::optional<Morphism> left;
  std::optional<Morphism> right;
};

Morphism Morphism::identity(Type obj) {
  auto n = std::make_shared<Node>();
  n->term = Term::identity;
  n->dom = obj;
  n->cod = std::move(obj);
  return Morphism(std::move(n));
}

Morphism Morphism::generator(GeneratorRef gen) {
  if (!gen) throw std::invalid_argument("null generator");
  auto n = std::make_shared<Node>();
  n->term = Term::generator;
  n->dom = gen->dom;
  n->cod = gen->cod;
  n->gen = std::move(gen);
  return Morphism(std::move(n));
}

Morphism Morphism::macro(GeneratorRef gen, Morphism body) {
  if (!gen || !gen->is_macro) throw std::invalid_argument("macro() needs a macro generator");
  const bool ok = gen->primitive.kind == PrimitiveKind::product_macro
                      ? same_type(body.dom(), unit_type()) && same_type(body.cod(), gen->cod)
                      : same_type(body.dom(), gen->cod->left) && same_type(body.cod(), gen->cod->right);
  if (!ok || body.daggered())
    throw TypeError("macro '" + gen->name + "' cannot expand to a morphism " +
                    display(body.dom()) + "→" + display(body.cod()));
  auto n = std::make_shared<Node>();
  n->term = Term::macro;
  n->dom = gen->dom;
  n->cod = gen->cod;
  n->gen = std::move(gen);
  n->left = normalize(body);
  return Morphism(std::move(n));
}

Term Morphism::term() const { return node_->term; }
const Type& Morphism::dom() const { return node_->dom; }
const Type& Morphism::cod() const { return node_->cod; }
bool Morphism::daggered() const { return node_->daggered; }

const GeneratorRef& Morphism::gen() const {
  if (!node_->gen) throw std::logic_error("morphism node has no generator");
  return node_->gen;
}

const Morphism& Morphism::left() const {
  if (!node_->left) throw std::logic_error("morphism node has no children");
  return *node_->left;
}

const Morphism& Morphism::right() const {
  if (!node_->right) throw std::logic_error("morphism node has no right child");
  return *node_->right;
}

bool Morphism::operator==(const Morphism& other) const {
  if (node_ == other.node_) return true;
  const Node& a = *node_;
  const Node& b = *other.node_;
  if (a.term != b.term || a.daggered != b.daggered) return false;
  if (!same_type(a.dom, b.dom) || !same_type(a.cod, b.cod)) return false;
  if ((a.gen == nullptr) != (b.gen == nullptr)) return false;
  if (a.gen && a.gen->name != b.gen->name) return false;
  if (a.left.has_value() != b.left.has_value() || a.right.has_value() != b.right.has_value())
    return false;
  if (a.left && !(*a.left == *b.left)) return false;
  if (a.right && !(*a.right == *b.right)) return false;
  return true;
}

namespace {

void flatten(const Morphism& m, std::vector<Morphism>& out) {
  switch (m.term()) {
    case Term::identity:
      return;
    case Term::compose:
      flatten(m.left(), out);
      flatten(m.right(), out);
      return;
    default:
      out.push_back(m);
  }
}

std::string arrow_text(const Morphism& m) {
  std::string name = m.term() == Term::identity ? "id" : signature(m);
  return name + ": " + display(m.dom()) + "→" + display(m.cod());
}

}  // namespace

Morphism compose(const Morphism& f, const Morphism& g) {
  if (!same_type(f.cod(), g.dom()))
    throw TypeError("cannot compose " + arrow_text(f) + " with " + arrow_text(g) + ": " +
                    display(f.cod()) + " ≠ " + display(g.dom()));
  std::vector<Morphism> items;
  flatten(f, items);
  flatten(g, items);
  if (items.empty()) return Morphism::identity(f.dom());
  Morphism acc = items.back();
  for (std::size_t i = items.size() - 1; i-- > 0;) {
    auto n = std::make_shared<Morphism::Node>();
    n->term = Term::compose;
    n->dom = items[i].dom();
    n->cod = acc.cod();
    n->left = items[i];
    n->right = std::move(acc);
    acc = Morphism(std::move(n));
  }
  return acc;
}

Morphism product(const Morphism& f, const Morphism& g) {
  if (f.dom()->kind != ObjectKind::unit || g.dom()->kind != ObjectKind::unit)
    throw TypeError("product needs unit domains, got " + arrow_text(f) + " and " + arrow_text(g));
  auto n = std::make_shared<Morphism::Node>();
  n->term = Term::product;
  n->dom = unit_type();
  n->cod = product_type(f.cod(), g.cod());
  n->left = normalize(f);
  n->right = normalize(g);
  return Morphism(std::move(n));
}

Morphism dagger(const Morphism& m) {
  switch (m.term()) {
    case Term::identity:
      return m;
    case Term::compose:
      return compose(dagger(m.right()), dagger(m.left()));
    default:
      break;
  }
  auto n = std::make_shared<Morphism::Node>(*m.node_);
  n->dom = m.cod();
  n->cod = m.dom();
  n->daggered = !m.daggered();
  if (n->left) n->left = dagger(*n->left);
  if (n->right) n->right = dagger(*n->right);
  return Morphism(std::move(n));
}

Morphism normalize(const Morphism& m) {
  switch (m.term()) {
    case Term::identity:
    case Term::generator:
      return m;
    case Term::compose:
      return compose(normalize(m.left()), normalize(m.right()));
    case Term::product:
    case Term::macro: {
      auto n = std::make_shared<Morphism::Node>(*m.node_);
      if (n->left) n->left = normalize(*n->left);
      if (n->right) n->right = normalize(*n->right);
      return Morphism(std::move(n));
    }
  }
  return m;
}

bool type_checks(const Morphism& m) {
  const bool d = m.daggered();
  // Orientation-independent view of the node: source/target before daggering.
  const Type& src = d ? m.cod() : m.dom();
  const Type& dst = d ? m.dom() : m.cod();
  switch (m.term()) {
    case Term::identity:
      return same_type(m.dom(), m.cod());
    case Term::generator:
      return same_type(src, m.gen()->dom) && same_type(dst, m.gen()->cod);
    case Term::compose:
      return type_checks(m.left()) && type_checks(m.right()) &&
             same_type(m.left().cod(), m.right().dom()) && same_type(m.dom(), m.left().dom()) &&
             same_type(m.cod(), m.right().cod());
    case Term::product: {
      const Morphism& l = m.left();
      const Morphism& r = m.right();
      if (!type_checks(l) || !type_checks(r) || l.daggered() != d || r.daggered() != d) return false;
      const Type& ls = d ? l.cod() : l.dom();
      const Type& rs = d ? r.cod() : r.dom();
      const Type& lt = d ? l.dom() : l.cod();
      const Type& rt = d ? r.dom() : r.cod();
      return src->kind == ObjectKind::unit && ls->kind == ObjectKind::unit &&
             rs->kind == ObjectKind::unit && same_type(dst, product_type(lt, rt));
    }
    case Term::macro: {
      const Morphism& body = m.left();
      if (!type_checks(body) || !same_type(src, m.gen()->dom) || !same_type(dst, m.gen()->cod))
        return false;
      const Type& bs = d ? body.cod() : body.dom();
      const Type& bt = d ? body.dom() : body.cod();
      if (m.gen()->primitive.kind == PrimitiveKind::product_macro)
        return bs->kind == ObjectKind::unit && same_type(bt, m.gen()->cod);
      return same_type(bs, m.gen()->cod->left) && same_type(bt, m.gen()->cod->right);
    }
  }
  return false;
}

std::vector<ChainItem> generator_chain(const Morphism& m) {
  std::vector<Morphism> items;
  flatten(m, items);
  std::vector<ChainItem> chain;
  for (const auto& item : items) {
    ChainItem c;
    c.daggered = item.daggered();
    switch (item.term()) {
      case Term::generator:
        c.gen = item.gen();
        break;
      case Term::product:
        c.branches = {generator_chain(item.left()), generator_chain(item.right())};
        break;
      case Term::macro: {
        c.gen = item.gen();
        const Morphism& body = item.left();
        if (body.term() == Term::product)
          c.branches = {generator_chain(body.left()), generator_chain(body.right())};
        else
          c.branches = {generator_chain(body)};
        break;
      }
      default:
        break;
    }
    chain.push_back(std::move(c));
  }
  return chain;
}

std::string signature(const Morphism& m) {
  const std::string mark = m.daggered() ? "†" : "";
  switch (m.term()) {
    case Term::identity:
      return "id_" + display(m.dom());
    case Term::generator:
      return m.gen()->name + mark;
    case Term::compose:
      return signature(m.left()) + ";" + signature(m.right());
    case Term::product:
      return "(" + signature(m.left()) + "," + signature(m.right()) + ")" + mark;
    case Term::macro: {
      const Morphism& body = m.left();
      if (m.gen()->primitive.kind == PrimitiveKind::product_macro)
        return m.gen()->name + mark + signature(body);
      return m.gen()->name + mark + "{" + signature(body) + "}";
    }
  }
  return {};
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

struct DotWriter {
  std::ostringstream out;
  int nodes = 0;
  int clusters = 0;

  struct Ends {
    std::vector<int> heads;
    std::vector<int> tails;
  };

  int node(const std::string& label, const std::string& indent) {
    const int id = nodes++;
    out << indent << "n" << id << " [label=\"" << escape(label) << "\"];\n";
    return id;
  }

  Ends render(const Morphism& m, const std::string& indent) {
    switch (m.term()) {
      case Term::identity:
      case Term::generator: {
        const int id = node(arrow_text(m), indent);
        return {{id}, {id}};
      }
      case Term::compose: {
        Ends a = render(m.left(), indent);
        Ends b = render(m.right(), indent);
        for (int t : a.tails)
          for (int h : b.heads) out << indent << "n" << t << " -> n" << h << ";\n";
        return {a.heads, b.tails};
      }
      case Term::product: {
        Ends a = render(m.left(), indent);
        Ends b = render(m.right(), indent);
        a.heads.insert(a.heads.end(), b.heads.begin(), b.heads.end());
        a.tails.insert(a.tails.end(), b.tails.begin(), b.tails.end());
        return a;
      }
      case Term::macro: {
        const int id = clusters++;
        out << indent << "subgraph cluster_" << id << " {\n";
        out << indent << "  label=\""
            << escape(m.gen()->name + (m.daggered() ? "†" : "") + ": " + display(m.dom()) + "→" +
                      display(m.cod()))
            << "\";\n";
        Ends body = render(m.left(), indent + "  ");
        out << indent << "}\n";
        return body;
      }
    }
    return {};
  }
};

}  // namespace

std::string to_dot(const Morphism& m, std::string_view graph_name) {
  DotWriter w;
  w.out << "digraph " << graph_name << " {\n";
  w.out << "  rankdir=TB;\n";
  w.out << "  label=\"" << escape(signature(m)) << "\";\n";
  w.out << "  node [shape=box];\n";
  w.render(m, "  ");
  w.out << "}\n";
  return w.out.str();
}

}  // namespace freecat::category
