#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "verbframe/expr.hpp"
#include "verbframe/frame.hpp"

namespace verbframe {
namespace eval_detail {

inline int64_t checked_add(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_add_overflow(a, b, &r)) fail(errc::overflow, "integer overflow in +");
  return r;
}

inline int64_t checked_sub(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) fail(errc::overflow, "integer overflow in -");
  return r;
}

inline int64_t checked_mul(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) fail(errc::overflow, "integer overflow in *");
  return r;
}

inline Value apply_arith(BinaryOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value::null();
  if (a.is_int() && b.is_int()) {
    int64_t x = a.as_int(), y = b.as_int();
    switch (op) {
      case BinaryOp::Add: return Value::int_(checked_add(x, y));
      case BinaryOp::Sub: return Value::int_(checked_sub(x, y));
      case BinaryOp::Mul: return Value::int_(checked_mul(x, y));
      case BinaryOp::Div:
        if (y == 0) fail(errc::divide_by_zero, "integer division by zero");
        if (x == INT64_MIN && y == -1) fail(errc::overflow, "integer overflow in /");
        return Value::int_(x / y);
      default: break;
    }
  }
  double x = a.as_number(), y = b.as_number();
  switch (op) {
    case BinaryOp::Add: return Value::float_(x + y);
    case BinaryOp::Sub: return Value::float_(x - y);
    case BinaryOp::Mul: return Value::float_(x * y);
    case BinaryOp::Div: return Value::float_(x / y);  // IEEE infinities allowed
    default: break;
  }
  fail(errc::exec_error, "bad arithmetic operator");
}

inline Value apply_compare(BinaryOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value::null();
  bool eq, lt;
  if ((a.is_int() || a.is_float()) && (b.is_int() || b.is_float())) {
    if (a.is_int() && b.is_int()) {
      eq = a.as_int() == b.as_int();
      lt = a.as_int() < b.as_int();
    } else {
      eq = a.as_number() == b.as_number();
      lt = a.as_number() < b.as_number();
    }
  } else if (a.is_str() && b.is_str()) {
    eq = a.as_str() == b.as_str();
    lt = a.as_str() < b.as_str();
  } else if (a.is_bool() && b.is_bool()) {
    eq = a.as_bool() == b.as_bool();
    lt = false;
  } else if (a.is_date() && b.is_date()) {
    eq = a.as_date() == b.as_date();
    lt = a.as_date() < b.as_date();
  } else {
    fail(errc::exec_error, "cannot compare values of different types");
  }
  switch (op) {
    case BinaryOp::Eq: return Value::boolean(eq);
    case BinaryOp::Ne: return Value::boolean(!eq);
    case BinaryOp::Lt: return Value::boolean(lt);
    case BinaryOp::Le: return Value::boolean(lt || eq);
    case BinaryOp::Gt: return Value::boolean(!lt && !eq);
    case BinaryOp::Ge: return Value::boolean(!lt);
    default: break;
  }
  fail(errc::exec_error, "bad comparison operator");
}

// SQL three-valued logic.
inline Value apply_logic(BinaryOp op, const Value& a, const Value& b) {
  if (op == BinaryOp::And) {
    if ((!a.is_null() && !a.as_bool()) || (!b.is_null() && !b.as_bool())) {
      return Value::boolean(false);
    }
    if (a.is_null() || b.is_null()) return Value::null();
    return Value::boolean(true);
  }
  if ((!a.is_null() && a.as_bool()) || (!b.is_null() && b.as_bool())) {
    return Value::boolean(true);
  }
  if (a.is_null() || b.is_null()) return Value::null();
  return Value::boolean(false);
}

inline bool values_match(const Value& a, const Value& b) {
  if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
  if ((a.is_int() || a.is_float()) && (b.is_int() || b.is_float())) {
    return a.as_number() == b.as_number();
  }
  return a == b;
}

// SQL IN: null left operand yields null; otherwise true on a match, null if
// the list contains a null and nothing matched, false otherwise.
inline Value apply_in(const Value& lhs, const std::vector<Value>& list) {
  if (lhs.is_null()) return Value::null();
  bool saw_null = false;
  for (const Value& v : list) {
    if (v.is_null()) {
      saw_null = true;
      continue;
    }
    if (values_match(lhs, v)) return Value::boolean(true);
  }
  return saw_null ? Value::null() : Value::boolean(false);
}

inline Value apply_unary(UnaryOp op, const Value& v) {
  if (v.is_null()) return Value::null();
  switch (op) {
    case UnaryOp::Not: return Value::boolean(!v.as_bool());
    case UnaryOp::Neg:
      if (v.is_int()) {
        if (v.as_int() == INT64_MIN) fail(errc::overflow, "integer overflow in unary -");
        return Value::int_(-v.as_int());
      }
      return Value::float_(-v.as_float());
    case UnaryOp::Desc:
      fail(errc::type_error, "desc() is not a value function");
  }
  fail(errc::exec_error, "bad unary operator");
}

inline Value apply_ymd(const Value& v) {
  if (v.is_null()) return Value::null();
  return Value::date(date_from_iso(v.as_str()));
}

inline Value apply_paste(const std::vector<Value>& args, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i].is_null()) return Value::null();
    if (i) out += sep;
    out += value_to_text(args[i]);
  }
  return Value::str(out);
}

inline std::string paste_separator(const Call& c) {
  auto it = c.named_args.find("sep");
  if (it == c.named_args.end()) return " ";
  return it->second->as<Lit>()->value.as_str();
}

}  // namespace eval_detail

// Vectorized evaluation of a scalar-kind expression against a frame. Returns
// an unnamed column of the frame's row count; literals broadcast.
inline Column eval_column(const ExprPtr& e, const Frame& f) {
  Dtype out_type = typecheck_value(e, schema_of(f));
  size_t n = f.row_count();

  struct Evaluator {
    const Frame& f;
    size_t n;

    std::vector<Value> eval(const ExprPtr& e) {
      using namespace eval_detail;
      if (const auto* c = e->as<ColRef>()) return f.column_by_name(c->name).cells;
      if (const auto* l = e->as<Lit>()) return std::vector<Value>(n, l->value);
      if (e->as<LitList>()) fail(errc::exec_error, "literal list outside %in%");
      if (const auto* u = e->as<Unary>()) {
        std::vector<Value> v = eval(u->operand);
        for (Value& x : v) x = apply_unary(u->op, x);
        return v;
      }
      if (const auto* b = e->as<Binary>()) {
        if (b->op == BinaryOp::In) {
          const auto& list = b->rhs->as<LitList>()->values;
          std::vector<Value> l = eval(b->lhs);
          for (Value& x : l) x = apply_in(x, list);
          return l;
        }
        std::vector<Value> l = eval(b->lhs);
        std::vector<Value> r = eval(b->rhs);
        for (size_t i = 0; i < l.size(); ++i) {
          switch (b->op) {
            case BinaryOp::Add:
            case BinaryOp::Sub:
            case BinaryOp::Mul:
            case BinaryOp::Div: l[i] = apply_arith(b->op, l[i], r[i]); break;
            case BinaryOp::And:
            case BinaryOp::Or: l[i] = apply_logic(b->op, l[i], r[i]); break;
            default: l[i] = apply_compare(b->op, l[i], r[i]); break;
          }
        }
        return l;
      }
      const auto* c = e->as<Call>();
      if (is_aggregate_fn(c->fn)) {
        fail(errc::exec_error, "aggregate call in a scalar context");
      }
      if (c->fn == Fn::Ymd) {
        std::vector<Value> v = eval(c->args[0]);
        for (Value& x : v) x = apply_ymd(x);
        return v;
      }
      // paste
      std::vector<std::vector<Value>> cols;
      cols.reserve(c->args.size());
      for (const auto& a : c->args) cols.push_back(eval(a));
      std::string sep = paste_separator(*c);
      std::vector<Value> out(n);
      std::vector<Value> row(c->args.size());
      for (size_t i = 0; i < n; ++i) {
        for (size_t k = 0; k < cols.size(); ++k) row[k] = cols[k][i];
        out[i] = apply_paste(row, sep);
      }
      return out;
    }
  };

  std::vector<Value> cells = Evaluator{f, n}.eval(e);
  return Column("_expr", out_type, std::move(cells));
}

// Evaluates an aggregate-kind expression over row subsets. Aggregate-call
// argument columns are computed once over the whole frame, so a grouped
// summarise pays one pass per argument, not one per partition.
class AggregateEvaluator {
 public:
  AggregateEvaluator(ExprPtr e, const Frame& f) : expr_(std::move(e)), frame_(f) {
    prepare(expr_);
  }

  Value value_for(const std::vector<size_t>& rows) const { return eval(expr_, rows); }

 private:
  void prepare(const ExprPtr& e) {
    if (const auto* u = e->as<Unary>()) {
      prepare(u->operand);
      return;
    }
    if (const auto* b = e->as<Binary>()) {
      prepare(b->lhs);
      prepare(b->rhs);
      return;
    }
    if (const auto* c = e->as<Call>()) {
      if (is_aggregate_fn(c->fn) && !c->args.empty()) {
        arg_columns_.emplace(e.get(), eval_column(c->args[0], frame_));
        return;
      }
      for (const auto& a : c->args) prepare(a);
      for (const auto& [_, a] : c->named_args) prepare(a);
    }
  }

  Value reduce(const Call& c, const Expr* key, const std::vector<size_t>& rows) const {
    using namespace eval_detail;
    if (c.fn == Fn::N) return Value::int_(int64_t(rows.size()));
    const Column& arg = arg_columns_.at(key);
    switch (c.fn) {
      case Fn::Sum: {
        if (arg.dtype == Dtype::Int) {
          int64_t acc = 0;
          for (size_t r : rows) {
            if (!arg.cells[r].is_null()) acc = checked_add(acc, arg.cells[r].as_int());
          }
          return Value::int_(acc);
        }
        double acc = 0.0;
        for (size_t r : rows) {
          if (!arg.cells[r].is_null()) acc += arg.cells[r].as_number();
        }
        return Value::float_(acc);
      }
      case Fn::Mean: {
        double acc = 0.0;
        int64_t cnt = 0;
        for (size_t r : rows) {
          if (!arg.cells[r].is_null()) {
            acc += arg.cells[r].as_number();
            ++cnt;
          }
        }
        if (cnt == 0) return Value::null();
        return Value::float_(acc / double(cnt));
      }
      case Fn::Min:
      case Fn::Max: {
        Value best;
        for (size_t r : rows) {
          const Value& v = arg.cells[r];
          if (v.is_null()) continue;
          if (best.is_null()) {
            best = v;
          } else {
            int cmp = value_compare(v, best);
            if ((c.fn == Fn::Min && cmp < 0) || (c.fn == Fn::Max && cmp > 0)) best = v;
          }
        }
        return best;
      }
      default: break;
    }
    fail(errc::exec_error, "bad aggregate");
  }

  Value eval(const ExprPtr& e, const std::vector<size_t>& rows) const {
    using namespace eval_detail;
    if (const auto* l = e->as<Lit>()) return l->value;
    if (e->as<ColRef>()) {
      fail(errc::exec_error, "bare column reference in an aggregate expression");
    }
    if (e->as<LitList>()) fail(errc::exec_error, "literal list outside %in%");
    if (const auto* u = e->as<Unary>()) return apply_unary(u->op, eval(u->operand, rows));
    if (const auto* b = e->as<Binary>()) {
      if (b->op == BinaryOp::In) {
        return apply_in(eval(b->lhs, rows), b->rhs->as<LitList>()->values);
      }
      Value l = eval(b->lhs, rows);
      Value r = eval(b->rhs, rows);
      switch (b->op) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
        case BinaryOp::Mul:
        case BinaryOp::Div: return apply_arith(b->op, l, r);
        case BinaryOp::And:
        case BinaryOp::Or: return apply_logic(b->op, l, r);
        default: return apply_compare(b->op, l, r);
      }
    }
    const auto* c = e->as<Call>();
    if (is_aggregate_fn(c->fn)) return reduce(*c, e.get(), rows);
    if (c->fn == Fn::Ymd) return apply_ymd(eval(c->args[0], rows));
    std::vector<Value> args;
    args.reserve(c->args.size());
    for (const auto& a : c->args) args.push_back(eval(a, rows));
    return apply_paste(args, paste_separator(*c));
  }

  ExprPtr expr_;
  const Frame& frame_;
  std::map<const Expr*, Column> arg_columns_;
};

inline Value eval_aggregate(const ExprPtr& e, const Frame& f, const std::vector<size_t>& rows) {
  return AggregateEvaluator(e, f).value_for(rows);
}

}  // namespace verbframe
