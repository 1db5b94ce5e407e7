#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "verbframe/error.hpp"
#include "verbframe/expr.hpp"

namespace verbframe {

struct PlanNode;
using PlanPtr = std::shared_ptr<const PlanNode>;

enum class SortDir { Asc, Desc };

struct SortKey {
  ExprPtr expr;
  SortDir dir = SortDir::Asc;
};

struct Agg {
  std::string name;
  ExprPtr expr;
};

struct JoinKey {
  std::string left;
  std::string right;
};

namespace plan_node {

struct TableRef {
  std::string name;
};
struct Select {
  PlanPtr child;
  std::vector<std::string> cols;
};
struct Filter {
  PlanPtr child;
  ExprPtr pred;
};
struct Mutate {
  PlanPtr child;
  std::string name;
  ExprPtr expr;
};
struct Arrange {
  PlanPtr child;
  std::vector<SortKey> keys;
};
struct GroupBy {
  PlanPtr child;
  std::vector<std::string> keys;
};
struct Summarise {
  PlanPtr child;
  std::vector<Agg> aggs;
};
struct Ungroup {
  PlanPtr child;
};
struct LeftJoin {
  PlanPtr left;
  PlanPtr right;
  std::vector<JoinKey> by;
};
struct Distinct {
  PlanPtr child;
};
struct Head {
  PlanPtr child;
  int64_t n = 6;
};

}  // namespace plan_node

// One verb per node; building performs no catalog or data access.
struct PlanNode {
  using Variant =
      std::variant<plan_node::TableRef, plan_node::Select, plan_node::Filter, plan_node::Mutate,
                   plan_node::Arrange, plan_node::GroupBy, plan_node::Summarise,
                   plan_node::Ungroup, plan_node::LeftJoin, plan_node::Distinct, plan_node::Head>;
  Variant node;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  const char* verb() const {
    switch (node.index()) {
      case 0: return "table";
      case 1: return "select";
      case 2: return "filter";
      case 3: return "mutate";
      case 4: return "arrange";
      case 5: return "group_by";
      case 6: return "summarise";
      case 7: return "ungroup";
      case 8: return "left_join";
      case 9: return "distinct";
      case 10: return "head";
    }
    return "?";
  }
};

inline PlanPtr make_plan_node(PlanNode::Variant v) {
  return std::make_shared<const PlanNode>(PlanNode{std::move(v)});
}

// Value-semantic handle over an immutable plan tree. Every verb returns a new
// plan wrapping this one; shared prefixes are never mutated.
class Plan {
 public:
  Plan() = default;
  explicit Plan(PlanPtr node) : node_(std::move(node)) {}

  static Plan table(std::string name) {
    if (name.empty()) fail(errc::unknown_table, "table name must be nonempty");
    return Plan(make_plan_node(plan_node::TableRef{std::move(name)}));
  }

  Plan select(std::vector<std::string> cols) const {
    require_built();
    return Plan(make_plan_node(plan_node::Select{node_, std::move(cols)}));
  }

  Plan filter(ExprPtr pred) const {
    require_built();
    return Plan(make_plan_node(plan_node::Filter{node_, std::move(pred)}));
  }

  Plan mutate(std::string name, ExprPtr expr) const {
    require_built();
    if (name.empty()) fail(errc::arity_error, "mutate needs a nonempty column name");
    return Plan(make_plan_node(plan_node::Mutate{node_, std::move(name), std::move(expr)}));
  }

  Plan arrange(std::vector<SortKey> keys) const {
    require_built();
    if (keys.empty()) fail(errc::arity_error, "arrange needs at least one key");
    return Plan(make_plan_node(plan_node::Arrange{node_, std::move(keys)}));
  }

  Plan group_by(std::vector<std::string> keys) const {
    require_built();
    if (keys.empty()) fail(errc::arity_error, "group_by needs at least one key");
    return Plan(make_plan_node(plan_node::GroupBy{node_, std::move(keys)}));
  }

  Plan summarise(std::vector<Agg> aggs) const {
    require_built();
    if (aggs.empty()) fail(errc::arity_error, "summarise needs at least one aggregate");
    for (const auto& a : aggs) {
      if (a.name.empty()) fail(errc::arity_error, "summarise aggregates must be named");
    }
    return Plan(make_plan_node(plan_node::Summarise{node_, std::move(aggs)}));
  }

  Plan ungroup() const {
    require_built();
    return Plan(make_plan_node(plan_node::Ungroup{node_}));
  }

  Plan distinct() const {
    require_built();
    return Plan(make_plan_node(plan_node::Distinct{node_}));
  }

  Plan head(int64_t n = 6) const {
    require_built();
    if (n < 1) fail(errc::arity_error, "head(n) needs n >= 1");
    return Plan(make_plan_node(plan_node::Head{node_, n}));
  }

  bool empty() const { return node_ == nullptr; }
  const PlanPtr& node() const { return node_; }

 private:
  void require_built() const {
    if (!node_) fail(errc::exec_error, "plan has no source table");
  }
  PlanPtr node_;
};

inline Plan left_join(const Plan& left, const Plan& right, std::vector<JoinKey> by) {
  if (left.empty() || right.empty()) fail(errc::exec_error, "join side has no source table");
  if (by.empty()) fail(errc::arity_error, "left_join needs at least one key pair");
  return Plan(make_plan_node(plan_node::LeftJoin{left.node(), right.node(), std::move(by)}));
}

inline bool plan_equal(const PlanPtr& a, const PlanPtr& b) {
  using namespace plan_node;
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* t = a->as<TableRef>()) return t->name == b->as<TableRef>()->name;
  if (const auto* s = a->as<Select>()) {
    return s->cols == b->as<Select>()->cols && plan_equal(s->child, b->as<Select>()->child);
  }
  if (const auto* f = a->as<Filter>()) {
    return expr_equal(f->pred, b->as<Filter>()->pred) && plan_equal(f->child, b->as<Filter>()->child);
  }
  if (const auto* m = a->as<Mutate>()) {
    const auto* o = b->as<Mutate>();
    return m->name == o->name && expr_equal(m->expr, o->expr) && plan_equal(m->child, o->child);
  }
  if (const auto* ar = a->as<Arrange>()) {
    const auto* o = b->as<Arrange>();
    if (ar->keys.size() != o->keys.size() || !plan_equal(ar->child, o->child)) return false;
    for (size_t i = 0; i < ar->keys.size(); ++i) {
      if (ar->keys[i].dir != o->keys[i].dir || !expr_equal(ar->keys[i].expr, o->keys[i].expr)) {
        return false;
      }
    }
    return true;
  }
  if (const auto* g = a->as<GroupBy>()) {
    return g->keys == b->as<GroupBy>()->keys && plan_equal(g->child, b->as<GroupBy>()->child);
  }
  if (const auto* su = a->as<Summarise>()) {
    const auto* o = b->as<Summarise>();
    if (su->aggs.size() != o->aggs.size() || !plan_equal(su->child, o->child)) return false;
    for (size_t i = 0; i < su->aggs.size(); ++i) {
      if (su->aggs[i].name != o->aggs[i].name || !expr_equal(su->aggs[i].expr, o->aggs[i].expr)) {
        return false;
      }
    }
    return true;
  }
  if (const auto* u = a->as<Ungroup>()) return plan_equal(u->child, b->as<Ungroup>()->child);
  if (const auto* j = a->as<LeftJoin>()) {
    const auto* o = b->as<LeftJoin>();
    if (j->by.size() != o->by.size()) return false;
    for (size_t i = 0; i < j->by.size(); ++i) {
      if (j->by[i].left != o->by[i].left || j->by[i].right != o->by[i].right) return false;
    }
    return plan_equal(j->left, o->left) && plan_equal(j->right, o->right);
  }
  if (const auto* d = a->as<Distinct>()) return plan_equal(d->child, b->as<Distinct>()->child);
  const auto* h = a->as<Head>();
  return h->n == b->as<Head>()->n && plan_equal(h->child, b->as<Head>()->child);
}

inline bool plan_equal(const Plan& a, const Plan& b) { return plan_equal(a.node(), b.node()); }

}  // namespace verbframe
