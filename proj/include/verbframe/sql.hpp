#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "verbframe/bind.hpp"
#include "verbframe/error.hpp"
#include "verbframe/expr.hpp"
#include "verbframe/plan.hpp"
#include "verbframe/value.hpp"

namespace verbframe {

namespace sql_detail {

inline std::string quote_ident(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string quote_string(const std::string& text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

inline std::string render_literal(const Value& v) {
  if (v.is_null()) return "NULL";
  if (v.is_int()) return std::to_string(v.as_int());
  if (v.is_float()) return float_to_text(v.as_float());
  if (v.is_str()) return quote_string(v.as_str());
  if (v.is_bool()) return v.as_bool() ? "TRUE" : "FALSE";
  return "DATE " + quote_string(date_to_iso(v.as_date()));
}

// One flat SELECT; FROM is a base table, a nested block, or a left join of
// two sides (each a base table or nested block).
struct SelectBlock {
  struct Item {
    std::string sql;
    std::string alias;  // empty when sql is already the bare quoted name
  };
  struct Side {
    std::string table;                   // base table, or
    std::shared_ptr<SelectBlock> block;  // nested subquery
    std::string alias;                   // required for nested or joined sides
  };
  struct Order {
    std::string sql;
    SortDir dir = SortDir::Asc;
  };

  std::vector<Item> select_list;
  bool distinct = false;
  Side from;
  bool has_join = false;
  Side join_side;
  std::vector<std::string> join_on;
  std::vector<std::string> where;
  std::vector<std::string> group_by;
  std::vector<std::string> having;
  std::vector<Order> order_by;
  std::optional<int64_t> limit;
};

// Operator precedence, loosest first; atoms bind tightest.
enum SqlPrec {
  kPrecOr = 1,
  kPrecAnd = 2,
  kPrecNot = 3,
  kPrecCompare = 4,
  kPrecAdd = 5,
  kPrecMul = 6,
  kPrecNeg = 7,
  kPrecAtom = 8,
};

using Resolver = std::unordered_map<std::string, std::string>;

inline const std::string& resolve_column(const Resolver& ref, const std::string& name) {
  auto it = ref.find(name);
  if (it == ref.end()) fail(errc::unknown_column, "column '" + name + "' not in scope");
  return it->second;
}

inline void collect_columns(const ExprPtr& e, std::vector<std::string>& out) {
  if (const auto* c = e->as<ColRef>()) {
    out.push_back(c->name);
  } else if (const auto* u = e->as<Unary>()) {
    collect_columns(u->operand, out);
  } else if (const auto* b = e->as<Binary>()) {
    collect_columns(b->lhs, out);
    collect_columns(b->rhs, out);
  } else if (const auto* call = e->as<Call>()) {
    for (const auto& a : call->args) collect_columns(a, out);
  }
}

inline bool references_any(const ExprPtr& e, const std::unordered_set<std::string>& names) {
  if (names.empty()) return false;
  std::vector<std::string> cols;
  collect_columns(e, cols);
  for (const auto& c : cols) {
    if (names.count(c)) return true;
  }
  return false;
}

// Folds paste(...) over literals to one string; nullopt when any argument is
// a column or the call mixes in non-literal parts.
inline std::optional<std::string> fold_paste(const Call& call) {
  std::string sep = " ";
  auto it = call.named_args.find("sep");
  if (it != call.named_args.end()) {
    const auto* lit = it->second->as<Lit>();
    if (lit == nullptr || !lit->value.is_str()) return std::nullopt;
    sep = lit->value.as_str();
  }
  std::string out;
  bool first = true;
  for (const auto& arg : call.args) {
    const auto* lit = arg->as<Lit>();
    if (lit == nullptr || lit->value.is_null()) return std::nullopt;
    if (!first) out += sep;
    out += value_to_text(lit->value);
    first = false;
  }
  return out;
}

inline std::string render_expr(const ExprPtr& e, const Resolver& ref, int min_prec);

inline std::string render_paste_concat(const Call& call, const Resolver& ref) {
  std::string sep = " ";
  auto it = call.named_args.find("sep");
  if (it != call.named_args.end()) sep = it->second->as<Lit>()->value.as_str();
  std::string out = "CONCAT(";
  bool first = true;
  for (const auto& arg : call.args) {
    if (!first) {
      out += ", ";
      if (!sep.empty()) out += quote_string(sep) + ", ";
    }
    out += render_expr(arg, ref, kPrecOr);
    first = false;
  }
  out += ")";
  return out;
}

// ymd over constants becomes a DATE literal; otherwise a CAST of the argument
// text (CONCAT for paste), the documented non-constant form.
inline std::string render_ymd(const Call& call, const Resolver& ref) {
  const ExprPtr& arg = call.args[0];
  if (const auto* lit = arg->as<Lit>(); lit != nullptr && lit->value.is_str()) {
    Date d{};
    if (try_parse_date(lit->value.as_str(), d)) return "DATE " + quote_string(date_to_iso(d));
  }
  if (const auto* inner = arg->as<Call>(); inner != nullptr && inner->fn == Fn::Paste) {
    if (auto folded = fold_paste(*inner)) {
      Date d{};
      if (try_parse_date(*folded, d)) return "DATE " + quote_string(date_to_iso(d));
    }
    return "CAST(" + render_paste_concat(*inner, ref) + " AS DATE)";
  }
  return "CAST(" + render_expr(arg, ref, kPrecOr) + " AS DATE)";
}

inline std::string render_expr(const ExprPtr& e, const Resolver& ref, int min_prec) {
  int prec = kPrecAtom;
  std::string out;

  if (const auto* c = e->as<ColRef>()) {
    out = resolve_column(ref, c->name);
  } else if (const auto* lit = e->as<Lit>()) {
    out = render_literal(lit->value);
  } else if (e->as<LitList>() != nullptr) {
    fail(errc::type_error, "value list outside %in%");
  } else if (const auto* u = e->as<Unary>()) {
    switch (u->op) {
      case UnaryOp::Not:
        prec = kPrecNot;
        out = "NOT " + render_expr(u->operand, ref, kPrecNot + 1);
        break;
      case UnaryOp::Neg:
        prec = kPrecNeg;
        out = "-" + render_expr(u->operand, ref, kPrecAtom);
        break;
      case UnaryOp::Desc:
        fail(errc::type_error, "desc() is only an ordering marker");
    }
  } else if (const auto* b = e->as<Binary>()) {
    const char* op = nullptr;
    switch (b->op) {
      case BinaryOp::Add: prec = kPrecAdd; op = " + "; break;
      case BinaryOp::Sub: prec = kPrecAdd; op = " - "; break;
      case BinaryOp::Mul: prec = kPrecMul; op = " * "; break;
      case BinaryOp::Div: prec = kPrecMul; op = " / "; break;
      case BinaryOp::Eq: prec = kPrecCompare; op = " = "; break;
      case BinaryOp::Ne: prec = kPrecCompare; op = " <> "; break;
      case BinaryOp::Lt: prec = kPrecCompare; op = " < "; break;
      case BinaryOp::Le: prec = kPrecCompare; op = " <= "; break;
      case BinaryOp::Gt: prec = kPrecCompare; op = " > "; break;
      case BinaryOp::Ge: prec = kPrecCompare; op = " >= "; break;
      case BinaryOp::And: prec = kPrecAnd; op = " AND "; break;
      case BinaryOp::Or: prec = kPrecOr; op = " OR "; break;
      case BinaryOp::In: {
        prec = kPrecCompare;
        out = render_expr(b->lhs, ref, kPrecCompare + 1) + " IN (";
        const auto& items = b->rhs->as<LitList>()->values;
        for (size_t i = 0; i < items.size(); ++i) {
          if (i > 0) out += ",";
          out += render_literal(items[i]);
        }
        out += ")";
        break;
      }
    }
    if (op != nullptr) {
      // Left-associative: the left child may share this precedence level.
      out = render_expr(b->lhs, ref, prec) + op + render_expr(b->rhs, ref, prec + 1);
    }
  } else {
    const auto* call = e->as<Call>();
    switch (call->fn) {
      case Fn::N: out = "COUNT(*)"; break;
      case Fn::Mean: out = "AVG(" + render_expr(call->args[0], ref, kPrecOr) + ")"; break;
      case Fn::Sum: out = "SUM(" + render_expr(call->args[0], ref, kPrecOr) + ")"; break;
      case Fn::Min: out = "MIN(" + render_expr(call->args[0], ref, kPrecOr) + ")"; break;
      case Fn::Max: out = "MAX(" + render_expr(call->args[0], ref, kPrecOr) + ")"; break;
      case Fn::Ymd: out = render_ymd(*call, ref); break;
      case Fn::Paste: out = render_paste_concat(*call, ref); break;
    }
  }

  if (prec < min_prec) return "(" + out + ")";
  return out;
}

inline std::string render_block(const SelectBlock& b);

inline std::string render_side(const SelectBlock::Side& side) {
  std::string out;
  if (side.block) {
    out = "(" + render_block(*side.block) + ")";
  } else {
    out = quote_ident(side.table);
  }
  if (!side.alias.empty()) out += " AS " + quote_ident(side.alias);
  return out;
}

inline std::string join_strings(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string render_block(const SelectBlock& b) {
  std::string out = "SELECT ";
  if (b.distinct) out += "DISTINCT ";
  std::vector<std::string> items;
  items.reserve(b.select_list.size());
  for (const auto& item : b.select_list) {
    items.push_back(item.alias.empty() ? item.sql : item.sql + " AS " + quote_ident(item.alias));
  }
  out += join_strings(items, ", ");
  out += " FROM " + render_side(b.from);
  if (b.has_join) {
    out += " LEFT JOIN " + render_side(b.join_side) + " ON " + join_strings(b.join_on, " AND ");
  }
  if (!b.where.empty()) out += " WHERE " + join_strings(b.where, " AND ");
  if (!b.group_by.empty()) out += " GROUP BY " + join_strings(b.group_by, ", ");
  if (!b.having.empty()) out += " HAVING " + join_strings(b.having, " AND ");
  if (!b.order_by.empty()) {
    std::vector<std::string> keys;
    keys.reserve(b.order_by.size());
    for (const auto& o : b.order_by) {
      keys.push_back(o.sql + (o.dir == SortDir::Asc ? " ASC NULLS LAST" : " DESC NULLS FIRST"));
    }
    out += " ORDER BY " + join_strings(keys, ", ");
  }
  if (b.limit) out += " LIMIT " + std::to_string(*b.limit);
  return out;
}

// Growing SELECT plus the bookkeeping merge decisions need: how each visible
// column renders inside this block, and which names are derived here.
struct BlockState {
  SelectBlock block;
  std::vector<std::string> names;
  Resolver ref;
  std::unordered_set<std::string> derived;
  bool aggregated = false;
  bool bare_scan = false;  // plain TableRef, usable as a join side directly
};

class Compiler {
 public:
  explicit Compiler(bool naive) : naive_(naive) {}

  std::string compile(const BoundNodePtr& root) { return render_block(build(root).block); }

 private:
  std::string next_alias() { return "t" + std::to_string(next_alias_++); }

  BlockState wrap(BlockState inner) {
    BlockState out;
    out.block.from.block = std::make_shared<SelectBlock>(std::move(inner.block));
    out.block.from.alias = next_alias();
    out.names = inner.names;
    for (const auto& n : out.names) {
      out.block.select_list.push_back({quote_ident(n), ""});
      out.ref.emplace(n, quote_ident(n));
    }
    return out;
  }

  BlockState wrap_if(BlockState st, bool unmergeable) {
    if (naive_ || unmergeable) return wrap(std::move(st));
    return st;
  }

  static std::unordered_set<std::string> columns_of(const ExprPtr& e) {
    std::vector<std::string> cols;
    collect_columns(e, cols);
    return {cols.begin(), cols.end()};
  }

  BlockState build(const BoundNodePtr& bp) {
    using namespace plan_node;
    const PlanPtr& p = bp->plan;

    if (const auto* t = p->as<TableRef>()) {
      BlockState st;
      st.block.from.table = t->name;
      st.bare_scan = true;
      for (const auto& f : bp->schema.fields()) {
        st.names.push_back(f.name);
        st.block.select_list.push_back({quote_ident(f.name), ""});
        st.ref.emplace(f.name, quote_ident(f.name));
      }
      return st;
    }

    if (const auto* s = p->as<Select>()) {
      return apply_select(build(bp->child()), s->cols);
    }

    if (const auto* f = p->as<Filter>()) {
      return apply_filter(build(bp->child()), f->pred);
    }

    if (const auto* m = p->as<Mutate>()) {
      return apply_mutate(build(bp->child()), m->name, m->expr);
    }

    if (const auto* ar = p->as<Arrange>()) {
      return apply_arrange(build(bp->child()), ar->keys);
    }

    if (p->as<GroupBy>() != nullptr || p->as<Ungroup>() != nullptr) {
      // Grouping is plan metadata; SQL emerges only at the summarise.
      return build(bp->child());
    }

    if (const auto* su = p->as<Summarise>()) {
      return apply_summarise(build(bp->child()), bp->child()->groups, su->aggs);
    }

    if (const auto* j = p->as<LeftJoin>()) {
      return apply_join(build(bp->child(0)), build(bp->child(1)), j->by, bp);
    }

    if (p->as<Distinct>() != nullptr) {
      BlockState st = build(bp->child());
      st = wrap_if(std::move(st), st.block.limit.has_value());
      st.block.distinct = true;
      st.bare_scan = false;
      return st;
    }

    const auto* h = p->as<Head>();
    BlockState st = build(bp->child());
    if (naive_ && !st.block.limit) st = wrap(std::move(st));
    if (st.block.limit) {
      st.block.limit = std::min(*st.block.limit, h->n);
    } else {
      st.block.limit = h->n;
    }
    st.bare_scan = false;
    return st;
  }

  BlockState apply_select(BlockState st, const std::vector<std::string>& cols) {
    st = wrap_if(std::move(st), st.block.distinct || st.block.limit.has_value());
    std::vector<SelectBlock::Item> items;
    Resolver ref;
    std::unordered_set<std::string> derived;
    for (const auto& name : cols) {
      const std::string& sql = resolve_column(st.ref, name);
      items.push_back({sql, sql == quote_ident(name) ? "" : name});
      ref.emplace(name, sql);
      if (st.derived.count(name)) derived.insert(name);
    }
    st.block.select_list = std::move(items);
    st.names = cols;
    st.ref = std::move(ref);
    st.derived = std::move(derived);
    st.bare_scan = false;
    return st;
  }

  BlockState apply_filter(BlockState st, const ExprPtr& pred) {
    if (st.aggregated) {
      // Filters over an aggregation become HAVING; the alias-free rendering
      // repeats each aggregate expression.
      st = wrap_if(std::move(st), st.block.group_by.empty() || st.block.distinct ||
                                      st.block.limit.has_value());
    } else {
      st = wrap_if(std::move(st), st.block.distinct || st.block.limit.has_value() ||
                                      references_any(pred, st.derived));
    }
    std::string sql = render_expr(pred, st.ref, kPrecAnd);
    if (st.aggregated) {
      st.block.having.push_back(std::move(sql));
    } else {
      st.block.where.push_back(std::move(sql));
    }
    st.bare_scan = false;
    return st;
  }

  BlockState apply_mutate(BlockState st, const std::string& name, const ExprPtr& expr) {
    st = wrap_if(std::move(st), st.aggregated || st.block.distinct ||
                                    st.block.limit.has_value() ||
                                    references_any(expr, st.derived));
    std::string sql = render_expr(expr, st.ref, kPrecAtom);
    auto it = std::find(st.names.begin(), st.names.end(), name);
    if (it != st.names.end()) {
      st.block.select_list[static_cast<size_t>(it - st.names.begin())] = {sql, name};
    } else {
      st.block.select_list.push_back({sql, name});
      st.names.push_back(name);
    }
    st.ref[name] = sql;
    st.derived.insert(name);
    st.bare_scan = false;
    return st;
  }

  BlockState apply_arrange(BlockState st, const std::vector<SortKey>& keys) {
    std::vector<SelectBlock::Order> order;
    bool needs_wrap = st.block.limit.has_value();
    if (!needs_wrap && st.block.distinct) {
      // DISTINCT restricts ORDER BY to selected items on strict engines.
      for (const auto& raw : keys) {
        SortKey key = bind_detail::normalize_sort_key(raw);
        const auto* c = key.expr->as<ColRef>();
        if (c == nullptr) {
          needs_wrap = true;
          break;
        }
      }
    }
    st = wrap_if(std::move(st), needs_wrap);
    for (const auto& raw : keys) {
      SortKey key = bind_detail::normalize_sort_key(raw);
      order.push_back({render_expr(key.expr, st.ref, kPrecAtom), key.dir});
    }
    st.block.order_by = std::move(order);
    st.bare_scan = false;
    return st;
  }

  BlockState apply_summarise(BlockState st, const std::vector<std::string>& keys,
                             const std::vector<Agg>& aggs) {
    bool key_is_derived = false;
    for (const auto& k : keys) key_is_derived = key_is_derived || st.derived.count(k) > 0;
    bool arg_is_derived = false;
    for (const auto& a : aggs) arg_is_derived = arg_is_derived || references_any(a.expr, st.derived);
    st = wrap_if(std::move(st), st.aggregated || st.block.distinct || st.block.limit.has_value() ||
                                    !st.block.order_by.empty() || key_is_derived || arg_is_derived);

    std::vector<SelectBlock::Item> items;
    Resolver ref;
    std::unordered_set<std::string> derived;
    std::vector<std::string> names;
    std::vector<std::string> group_by;
    for (const auto& k : keys) {
      const std::string& sql = resolve_column(st.ref, k);
      items.push_back({sql, sql == quote_ident(k) ? "" : k});
      group_by.push_back(sql);
      ref.emplace(k, sql);
      names.push_back(k);
    }
    for (const auto& a : aggs) {
      std::string sql = render_expr(a.expr, st.ref, kPrecAtom);
      items.push_back({sql, a.name});
      ref.emplace(a.name, sql);
      derived.insert(a.name);
      names.push_back(a.name);
    }
    st.block.select_list = std::move(items);
    st.block.group_by = std::move(group_by);
    st.names = std::move(names);
    st.ref = std::move(ref);
    st.derived = std::move(derived);
    st.aggregated = true;
    st.bare_scan = false;
    return st;
  }

  BlockState apply_join(BlockState left, BlockState right, const std::vector<JoinKey>& by,
                        const BoundNodePtr& bp) {
    BlockState out;
    out.block.has_join = true;
    out.block.from = to_side(std::move(left));
    out.block.join_side = to_side(std::move(right));
    std::string la = quote_ident(out.block.from.alias);
    std::string ra = quote_ident(out.block.join_side.alias);

    std::unordered_set<std::string> right_keys;
    for (const auto& key : by) {
      out.block.join_on.push_back(la + "." + quote_ident(key.left) + " = " + ra + "." +
                                  quote_ident(key.right));
      right_keys.insert(key.right);
    }
    const BoundNodePtr& lchild = bp->child(0);
    const BoundNodePtr& rchild = bp->child(1);
    for (const auto& f : lchild->schema.fields()) {
      std::string sql = la + "." + quote_ident(f.name);
      out.block.select_list.push_back({sql, f.name});
      out.ref.emplace(f.name, std::move(sql));
      out.names.push_back(f.name);
    }
    for (const auto& f : rchild->schema.fields()) {
      if (right_keys.count(f.name)) continue;
      std::string sql = ra + "." + quote_ident(f.name);
      out.block.select_list.push_back({sql, f.name});
      out.ref.emplace(f.name, std::move(sql));
      out.names.push_back(f.name);
    }
    return out;
  }

  SelectBlock::Side to_side(BlockState st) {
    SelectBlock::Side side;
    if (st.bare_scan && !naive_) {
      side.table = st.block.from.table;
    } else {
      side.block = std::make_shared<SelectBlock>(std::move(st.block));
    }
    side.alias = next_alias();
    return side;
  }

  bool naive_;
  int next_alias_ = 0;
};

}  // namespace sql_detail

// Single-statement SQL for a bound plan, merging verbs into one SELECT where
// the rewrite is order- and multiplicity-preserving.
inline std::string compile(const BoundPlan& bp) {
  return sql_detail::Compiler(false).compile(bp.root);
}

// Reference emission: every verb in its own subquery. Slower SQL, trivially
// faithful to the plan; the merged form must agree with it.
inline std::string compile_naive(const BoundPlan& bp) {
  return sql_detail::Compiler(true).compile(bp.root);
}

// Reformats compile() output, one clause per line, subqueries indented.
inline std::string emit_pretty(const std::string& sql) {
  std::string out;
  int depth = 0;
  std::vector<bool> select_paren;  // tracks which open parens hold a SELECT
  auto indent = [&](int d) {
    out += '\n';
    for (int i = 0; i < d; ++i) out += "  ";
  };
  auto word_at = [&](size_t i, const char* w) {
    size_t n = std::char_traits<char>::length(w);
    if (sql.compare(i, n, w) != 0) return false;
    bool left_ok = i == 0 || sql[i - 1] == ' ' || sql[i - 1] == '(';
    bool right_ok = i + n >= sql.size() || sql[i + n] == ' ' || sql[i + n] == '(';
    return left_ok && right_ok;
  };
  size_t i = 0;
  while (i < sql.size()) {
    char c = sql[i];
    if (c == '\'' || c == '"') {
      char q = c;
      out += c;
      ++i;
      while (i < sql.size()) {
        out += sql[i];
        if (sql[i] == q) {
          if (i + 1 < sql.size() && sql[i + 1] == q) {
            out += q;
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        ++i;
      }
      continue;
    }
    if (c == '(') {
      bool is_select = word_at(i + 1, "SELECT");
      select_paren.push_back(is_select);
      out += '(';
      ++i;
      if (is_select) {
        ++depth;
        indent(depth);
      }
      continue;
    }
    if (c == ')') {
      bool was_select = !select_paren.empty() && select_paren.back();
      if (!select_paren.empty()) select_paren.pop_back();
      if (was_select) {
        --depth;
        indent(depth);
      }
      out += ')';
      ++i;
      continue;
    }
    if (c == ' ') {
      // First words are unambiguous: LEFT JOIN, GROUP BY, ORDER BY break on
      // LEFT/GROUP/ORDER, which appear nowhere else outside quotes.
      static const char* kClauses[] = {"FROM", "LEFT", "WHERE", "GROUP", "HAVING", "ORDER",
                                       "LIMIT"};
      bool broke = false;
      for (const char* clause : kClauses) {
        if (word_at(i + 1, clause)) {
          indent(depth);
          broke = true;
          break;
        }
      }
      if (!broke) out += ' ';
      ++i;
      continue;
    }
    out += c;
    ++i;
  }
  return out;
}

}  // namespace verbframe
