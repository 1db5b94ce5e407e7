#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "verbframe/error.hpp"
#include "verbframe/schema.hpp"
#include "verbframe/value.hpp"

namespace verbframe {

enum class UnaryOp { Not, Neg, Desc };
enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or, In };
enum class Fn { N, Mean, Sum, Min, Max, Ymd, Paste };

inline bool is_aggregate_fn(Fn f) {
  return f == Fn::N || f == Fn::Mean || f == Fn::Sum || f == Fn::Min || f == Fn::Max;
}

inline const char* fn_name(Fn f) {
  switch (f) {
    case Fn::N: return "n";
    case Fn::Mean: return "mean";
    case Fn::Sum: return "sum";
    case Fn::Min: return "min";
    case Fn::Max: return "max";
    case Fn::Ymd: return "ymd";
    case Fn::Paste: return "paste";
  }
  return "?";
}

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct ColRef {
  std::string name;
};

struct Lit {
  Value value;
};

// Literal list: valid only as the right operand of `in`.
struct LitList {
  std::vector<Value> values;
};

struct Unary {
  UnaryOp op;
  ExprPtr operand;
};

struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Call {
  Fn fn;
  std::vector<ExprPtr> args;
  std::map<std::string, ExprPtr> named_args;
};

// Immutable expression tree over column references, literals, operators and
// calls. Shared freely; evaluation never mutates.
class Expr {
 public:
  using Node = std::variant<ColRef, Lit, LitList, Unary, Binary, Call>;

  static ExprPtr column(std::string name) {
    return make(ColRef{std::move(name)});
  }
  static ExprPtr literal(Value v) { return make(Lit{std::move(v)}); }
  static ExprPtr list(std::vector<Value> values) { return make(LitList{std::move(values)}); }
  static ExprPtr unary(UnaryOp op, ExprPtr e) { return make(Unary{op, std::move(e)}); }
  static ExprPtr binary(BinaryOp op, ExprPtr l, ExprPtr r) {
    return make(Binary{op, std::move(l), std::move(r)});
  }
  static ExprPtr call(Fn fn, std::vector<ExprPtr> args,
                      std::map<std::string, ExprPtr> named = {}) {
    return make(Call{fn, std::move(args), std::move(named)});
  }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&node_);
  }
  const Node& node() const { return node_; }

 private:
  static ExprPtr make(Node n) { return std::shared_ptr<const Expr>(new Expr(std::move(n))); }
  explicit Expr(Node n) : node_(std::move(n)) {}
  Node node_;
};

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node().index() != b->node().index()) return false;
  if (const auto* c = a->as<ColRef>()) return c->name == b->as<ColRef>()->name;
  if (const auto* l = a->as<Lit>()) return l->value == b->as<Lit>()->value;
  if (const auto* ll = a->as<LitList>()) return ll->values == b->as<LitList>()->values;
  if (const auto* u = a->as<Unary>()) {
    const auto* v = b->as<Unary>();
    return u->op == v->op && expr_equal(u->operand, v->operand);
  }
  if (const auto* x = a->as<Binary>()) {
    const auto* y = b->as<Binary>();
    return x->op == y->op && expr_equal(x->lhs, y->lhs) && expr_equal(x->rhs, y->rhs);
  }
  const auto* f = a->as<Call>();
  const auto* g = b->as<Call>();
  if (f->fn != g->fn || f->args.size() != g->args.size() ||
      f->named_args.size() != g->named_args.size()) {
    return false;
  }
  for (size_t i = 0; i < f->args.size(); ++i) {
    if (!expr_equal(f->args[i], g->args[i])) return false;
  }
  for (auto it = f->named_args.begin(), jt = g->named_args.begin(); it != f->named_args.end();
       ++it, ++jt) {
    if (it->first != jt->first || !expr_equal(it->second, jt->second)) return false;
  }
  return true;
}

enum class ExprKind { Scalar, Aggregate };

// An expression is aggregate-kind iff it contains at least one aggregate call.
inline ExprKind expr_kind(const ExprPtr& e) {
  if (e->as<ColRef>() || e->as<Lit>() || e->as<LitList>()) return ExprKind::Scalar;
  if (const auto* u = e->as<Unary>()) return expr_kind(u->operand);
  if (const auto* b = e->as<Binary>()) {
    return expr_kind(b->lhs) == ExprKind::Aggregate || expr_kind(b->rhs) == ExprKind::Aggregate
               ? ExprKind::Aggregate
               : ExprKind::Scalar;
  }
  const auto* c = e->as<Call>();
  if (is_aggregate_fn(c->fn)) return ExprKind::Aggregate;
  for (const auto& a : c->args) {
    if (expr_kind(a) == ExprKind::Aggregate) return ExprKind::Aggregate;
  }
  for (const auto& [_, a] : c->named_args) {
    if (expr_kind(a) == ExprKind::Aggregate) return ExprKind::Aggregate;
  }
  return ExprKind::Scalar;
}

inline bool contains_desc(const ExprPtr& e) {
  if (e->as<ColRef>() || e->as<Lit>() || e->as<LitList>()) return false;
  if (const auto* u = e->as<Unary>()) {
    return u->op == UnaryOp::Desc || contains_desc(u->operand);
  }
  if (const auto* b = e->as<Binary>()) return contains_desc(b->lhs) || contains_desc(b->rhs);
  const auto* c = e->as<Call>();
  for (const auto& a : c->args) {
    if (contains_desc(a)) return true;
  }
  for (const auto& [_, a] : c->named_args) {
    if (contains_desc(a)) return true;
  }
  return false;
}

namespace expr_detail {

inline bool is_numeric(Dtype t) { return t == Dtype::Int || t == Dtype::Float; }

inline Dtype typecheck_impl(const ExprPtr& e, const Schema& s, bool in_aggregate,
                            bool desc_allowed);

inline Dtype element_dtype(const LitList& list) {
  bool seen = false;
  Dtype t = Dtype::Str;
  for (const Value& v : list.values) {
    if (v.is_null()) continue;
    Dtype vt = v.dtype();
    if (!seen) {
      t = vt;
      seen = true;
    } else if (vt != t) {
      if (is_numeric(vt) && is_numeric(t)) {
        t = Dtype::Float;
      } else {
        fail(errc::type_error, "mixed types in literal list");
      }
    }
  }
  if (!seen) fail(errc::type_error, "literal list must contain a non-null value");
  return t;
}

inline Dtype typecheck_call(const Call& c, const Schema& s, bool in_aggregate) {
  auto expect_arity = [&](size_t n) {
    if (c.args.size() != n) {
      fail(errc::arity_error, std::string(fn_name(c.fn)) + "() expects " + std::to_string(n) +
                                  " argument(s), got " + std::to_string(c.args.size()));
    }
  };
  bool agg = is_aggregate_fn(c.fn);
  if (agg && in_aggregate) {
    fail(errc::type_error, "aggregate " + std::string(fn_name(c.fn)) + "() nested inside an aggregate");
  }
  if (!c.named_args.empty() && c.fn != Fn::Paste) {
    fail(errc::arity_error,
         std::string(fn_name(c.fn)) + "() accepts no named arguments");
  }
  bool inner = in_aggregate || agg;
  switch (c.fn) {
    case Fn::N:
      expect_arity(0);
      return Dtype::Int;
    case Fn::Mean: {
      expect_arity(1);
      Dtype t = typecheck_impl(c.args[0], s, inner, false);
      if (!is_numeric(t)) fail(errc::type_error, "mean() needs a numeric argument");
      return Dtype::Float;
    }
    case Fn::Sum: {
      expect_arity(1);
      Dtype t = typecheck_impl(c.args[0], s, inner, false);
      if (!is_numeric(t)) fail(errc::type_error, "sum() needs a numeric argument");
      return t;
    }
    case Fn::Min:
    case Fn::Max: {
      expect_arity(1);
      Dtype t = typecheck_impl(c.args[0], s, inner, false);
      if (t == Dtype::Bool) {
        fail(errc::type_error, std::string(fn_name(c.fn)) + "() over bool is not supported");
      }
      return t;
    }
    case Fn::Ymd: {
      expect_arity(1);
      Dtype t = typecheck_impl(c.args[0], s, inner, false);
      if (t != Dtype::Str) fail(errc::type_error, "ymd() needs a string argument");
      return Dtype::Date;
    }
    case Fn::Paste: {
      if (c.args.empty()) fail(errc::arity_error, "paste() needs at least one argument");
      for (const auto& a : c.args) typecheck_impl(a, s, inner, false);
      for (const auto& [name, value] : c.named_args) {
        if (name != "sep") fail(errc::arity_error, "paste(): unknown named argument '" + name + "'");
        const auto* lit = value->as<Lit>();
        if (!lit || !lit->value.is_str()) {
          fail(errc::type_error, "paste(): sep must be a string literal");
        }
      }
      return Dtype::Str;
    }
  }
  fail(errc::type_error, "bad function");
}

inline Dtype typecheck_impl(const ExprPtr& e, const Schema& s, bool in_aggregate,
                            bool desc_allowed) {
  if (const auto* c = e->as<ColRef>()) return s.dtype_of(c->name);
  if (const auto* l = e->as<Lit>()) {
    if (l->value.is_null()) fail(errc::type_error, "null literal has no type");
    return l->value.dtype();
  }
  if (e->as<LitList>()) {
    fail(errc::type_error, "literal list is only valid as the right operand of %in%");
  }
  if (const auto* u = e->as<Unary>()) {
    if (u->op == UnaryOp::Desc) {
      if (!desc_allowed) {
        fail(errc::type_error, "desc() is only valid as the outermost wrapper of an arrange key");
      }
      return typecheck_impl(u->operand, s, in_aggregate, false);
    }
    Dtype t = typecheck_impl(u->operand, s, in_aggregate, false);
    if (u->op == UnaryOp::Not) {
      if (t != Dtype::Bool) fail(errc::type_error, "! needs a bool operand");
      return Dtype::Bool;
    }
    if (!is_numeric(t)) fail(errc::type_error, "unary - needs a numeric operand");
    return t;
  }
  if (const auto* b = e->as<Binary>()) {
    if (b->op == BinaryOp::In) {
      Dtype lt = typecheck_impl(b->lhs, s, in_aggregate, false);
      const auto* list = b->rhs->as<LitList>();
      if (!list) fail(errc::type_error, "%in% needs a literal list as its right operand");
      Dtype et = element_dtype(*list);
      bool ok = lt == et || (is_numeric(lt) && is_numeric(et));
      if (!ok) {
        fail(errc::type_error, std::string("%in% over ") + dtype_name(lt) + " and a " +
                                   dtype_name(et) + " list");
      }
      return Dtype::Bool;
    }
    Dtype lt = typecheck_impl(b->lhs, s, in_aggregate, false);
    Dtype rt = typecheck_impl(b->rhs, s, in_aggregate, false);
    switch (b->op) {
      case BinaryOp::Add:
      case BinaryOp::Sub:
      case BinaryOp::Mul:
      case BinaryOp::Div:
        if (!is_numeric(lt) || !is_numeric(rt)) {
          fail(errc::type_error, "arithmetic needs numeric operands");
        }
        return lt == Dtype::Int && rt == Dtype::Int ? Dtype::Int : Dtype::Float;
      case BinaryOp::Eq:
      case BinaryOp::Ne:
        if (lt != rt && !(is_numeric(lt) && is_numeric(rt))) {
          fail(errc::type_error, std::string("cannot compare ") + dtype_name(lt) + " with " +
                                     dtype_name(rt));
        }
        return Dtype::Bool;
      case BinaryOp::Lt:
      case BinaryOp::Le:
      case BinaryOp::Gt:
      case BinaryOp::Ge: {
        bool ok = (is_numeric(lt) && is_numeric(rt)) ||
                  (lt == rt && (lt == Dtype::Str || lt == Dtype::Date));
        if (!ok) {
          fail(errc::type_error, std::string("cannot order ") + dtype_name(lt) + " against " +
                                     dtype_name(rt));
        }
        return Dtype::Bool;
      }
      case BinaryOp::And:
      case BinaryOp::Or:
        if (lt != Dtype::Bool || rt != Dtype::Bool) {
          fail(errc::type_error, "logical operators need bool operands");
        }
        return Dtype::Bool;
      default: fail(errc::type_error, "bad operator");
    }
  }
  return typecheck_call(*e->as<Call>(), s, in_aggregate);
}

}  // namespace expr_detail

// Result dtype of `e` against schema `s`. Numeric promotion int -> float for
// mixed arithmetic and for mean; comparisons and logic yield bool. A desc()
// wrapper is tolerated at the root only.
inline Dtype typecheck(const ExprPtr& e, const Schema& s) {
  return expr_detail::typecheck_impl(e, s, false, true);
}

// Typecheck for value contexts (filter, mutate, summarise): desc() is
// rejected anywhere in the tree.
inline Dtype typecheck_value(const ExprPtr& e, const Schema& s) {
  return expr_detail::typecheck_impl(e, s, false, false);
}

// Summarise expressions must reference columns only inside aggregate
// arguments, so both backends agree on what a bare column would mean.
inline void check_columns_inside_aggregates(const ExprPtr& e, bool inside = false) {
  if (const auto* c = e->as<ColRef>()) {
    if (!inside) {
      fail(errc::type_error,
           "column '" + c->name + "' referenced outside an aggregate in summarise");
    }
    return;
  }
  if (e->as<Lit>() || e->as<LitList>()) return;
  if (const auto* u = e->as<Unary>()) {
    check_columns_inside_aggregates(u->operand, inside);
    return;
  }
  if (const auto* b = e->as<Binary>()) {
    check_columns_inside_aggregates(b->lhs, inside);
    check_columns_inside_aggregates(b->rhs, inside);
    return;
  }
  const auto* c = e->as<Call>();
  bool next = inside || is_aggregate_fn(c->fn);
  for (const auto& a : c->args) check_columns_inside_aggregates(a, next);
  for (const auto& [_, a] : c->named_args) check_columns_inside_aggregates(a, next);
}

}  // namespace verbframe
