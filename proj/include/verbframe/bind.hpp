#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "verbframe/catalog.hpp"
#include "verbframe/error.hpp"
#include "verbframe/expr.hpp"
#include "verbframe/plan.hpp"
#include "verbframe/schema.hpp"

namespace verbframe {

struct BoundNode;
using BoundNodePtr = std::shared_ptr<const BoundNode>;

// Plan node annotated with its output schema and grouping keys. Binding reads
// catalog schemas only; it never materializes a table.
struct BoundNode {
  PlanPtr plan;
  Schema schema;
  std::vector<std::string> groups;
  std::vector<BoundNodePtr> children;

  const BoundNodePtr& child(size_t i = 0) const { return children[i]; }
};

struct BoundPlan {
  PlanPtr plan;
  BoundNodePtr root;

  const Schema& schema() const { return root->schema; }
  const std::vector<std::string>& groups() const { return root->groups; }
};

namespace bind_detail {

// Arrange keys carry direction either in SortKey::dir or as an outermost
// desc() wrapper; normalize to (bare expr, dir) before typing.
inline SortKey normalize_sort_key(const SortKey& key) {
  if (const auto* u = key.expr->as<Unary>(); u && u->op == UnaryOp::Desc) {
    SortDir flipped = key.dir == SortDir::Asc ? SortDir::Desc : SortDir::Asc;
    return SortKey{u->operand, flipped};
  }
  return key;
}

inline void require_scalar(const ExprPtr& e, const char* verb) {
  if (expr_kind(e) == ExprKind::Aggregate) {
    fail(errc::type_error, std::string(verb) + " expressions must not contain aggregates");
  }
}

inline BoundNodePtr bind_node(const PlanPtr& p, const Catalog& cat) {
  using namespace plan_node;

  if (const auto* t = p->as<TableRef>()) {
    return std::make_shared<const BoundNode>(BoundNode{p, cat.schema_of(t->name), {}, {}});
  }

  if (const auto* s = p->as<Select>()) {
    BoundNodePtr child = bind_node(s->child, cat);
    if (s->cols.empty()) fail(errc::empty_projection, "select kept no columns");
    std::unordered_set<std::string> seen;
    std::vector<SchemaField> fields;
    fields.reserve(s->cols.size());
    for (const auto& name : s->cols) {
      if (!seen.insert(name).second) {
        fail(errc::duplicate_name, "column '" + name + "' selected twice");
      }
      fields.push_back({name, child->schema.dtype_of(name)});
    }
    for (const auto& key : child->groups) {
      if (!seen.count(key)) {
        fail(errc::group_key_dropped, "select must keep group key '" + key + "'");
      }
    }
    return std::make_shared<const BoundNode>(
        BoundNode{p, Schema(std::move(fields)), child->groups, {child}});
  }

  if (const auto* f = p->as<Filter>()) {
    BoundNodePtr child = bind_node(f->child, cat);
    require_scalar(f->pred, "filter");
    Dtype t = typecheck_value(f->pred, child->schema);
    if (t != Dtype::Bool) {
      fail(errc::type_error,
           std::string("filter predicate has type ") + dtype_name(t) + ", expected bool");
    }
    return std::make_shared<const BoundNode>(BoundNode{p, child->schema, child->groups, {child}});
  }

  if (const auto* m = p->as<Mutate>()) {
    BoundNodePtr child = bind_node(m->child, cat);
    require_scalar(m->expr, "mutate");
    Dtype t = typecheck_value(m->expr, child->schema);
    std::vector<SchemaField> fields = child->schema.fields();
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const SchemaField& f) { return f.name == m->name; });
    if (it != fields.end()) {
      it->dtype = t;
    } else {
      fields.push_back({m->name, t});
    }
    return std::make_shared<const BoundNode>(
        BoundNode{p, Schema(std::move(fields)), child->groups, {child}});
  }

  if (const auto* ar = p->as<Arrange>()) {
    BoundNodePtr child = bind_node(ar->child, cat);
    for (const auto& raw : ar->keys) {
      SortKey key = normalize_sort_key(raw);
      require_scalar(key.expr, "arrange");
      typecheck_value(key.expr, child->schema);
    }
    return std::make_shared<const BoundNode>(BoundNode{p, child->schema, child->groups, {child}});
  }

  if (const auto* g = p->as<GroupBy>()) {
    BoundNodePtr child = bind_node(g->child, cat);
    std::unordered_set<std::string> seen;
    for (const auto& key : g->keys) {
      child->schema.dtype_of(key);
      if (!seen.insert(key).second) {
        fail(errc::duplicate_name, "group key '" + key + "' listed twice");
      }
    }
    return std::make_shared<const BoundNode>(BoundNode{p, child->schema, g->keys, {child}});
  }

  if (const auto* su = p->as<Summarise>()) {
    BoundNodePtr child = bind_node(su->child, cat);
    std::unordered_set<std::string> seen;
    std::vector<SchemaField> fields;
    for (const auto& key : child->groups) {
      fields.push_back({key, child->schema.dtype_of(key)});
      seen.insert(key);
    }
    for (const auto& agg : su->aggs) {
      if (expr_kind(agg.expr) != ExprKind::Aggregate) {
        fail(errc::type_error, "summarise expression '" + agg.name + "' does not aggregate");
      }
      check_columns_inside_aggregates(agg.expr);
      Dtype t = typecheck_value(agg.expr, child->schema);
      if (!seen.insert(agg.name).second) {
        fail(errc::duplicate_name, "summarise output '" + agg.name + "' named twice");
      }
      fields.push_back({agg.name, t});
    }
    // Aggregation consumes the innermost key: output grouping drops the last.
    std::vector<std::string> groups = child->groups;
    if (!groups.empty()) groups.pop_back();
    return std::make_shared<const BoundNode>(
        BoundNode{p, Schema(std::move(fields)), std::move(groups), {child}});
  }

  if (const auto* u = p->as<Ungroup>()) {
    BoundNodePtr child = bind_node(u->child, cat);
    return std::make_shared<const BoundNode>(BoundNode{p, child->schema, {}, {child}});
  }

  if (const auto* j = p->as<LeftJoin>()) {
    BoundNodePtr left = bind_node(j->left, cat);
    BoundNodePtr right = bind_node(j->right, cat);
    std::unordered_set<std::string> right_keys;
    for (const auto& key : j->by) {
      Dtype lt = left->schema.dtype_of(key.left);
      Dtype rt = right->schema.dtype_of(key.right);
      if (lt != rt) {
        fail(errc::type_error, "join keys '" + key.left + "' (" + dtype_name(lt) + ") and '" +
                                   key.right + "' (" + dtype_name(rt) + ") have different types");
      }
      right_keys.insert(key.right);
    }
    std::vector<SchemaField> fields = left->schema.fields();
    for (const auto& f : right->schema.fields()) {
      if (right_keys.count(f.name)) continue;
      if (left->schema.contains(f.name)) {
        fail(errc::name_collision, "column '" + f.name + "' exists on both join sides");
      }
      fields.push_back(f);
    }
    return std::make_shared<const BoundNode>(
        BoundNode{p, Schema(std::move(fields)), left->groups, {left, right}});
  }

  if (const auto* d = p->as<Distinct>()) {
    BoundNodePtr child = bind_node(d->child, cat);
    return std::make_shared<const BoundNode>(BoundNode{p, child->schema, child->groups, {child}});
  }

  const auto* h = p->as<Head>();
  BoundNodePtr child = bind_node(h->child, cat);
  return std::make_shared<const BoundNode>(BoundNode{p, child->schema, child->groups, {child}});
}

}  // namespace bind_detail

inline BoundPlan bind(const Plan& p, const Catalog& cat) {
  if (p.empty()) fail(errc::exec_error, "plan has no source table");
  return BoundPlan{p.node(), bind_detail::bind_node(p.node(), cat)};
}

}  // namespace verbframe
