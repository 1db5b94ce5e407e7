#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "verbframe/error.hpp"
#include "verbframe/expr.hpp"
#include "verbframe/plan.hpp"
#include "verbframe/value.hpp"

namespace verbframe {

struct Statement {
  std::string target;  // empty for a bare (display) pipeline
  Plan plan;
  bool collected = false;
  SourceSpan span;
};

struct Script {
  std::vector<Statement> statements;
};

namespace parse_detail {

enum class Tok {
  Ident,
  Int,
  Float,
  Str,
  Assign,  // <-
  Pipe,    // %>% or |>
  In,      // %in%
  LParen,
  RParen,
  Comma,
  NamedEq,  // single = in argument position
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Plus,
  Minus,
  Star,
  Slash,
  And,
  Or,
  Not,
  Tilde,  // lexed so reserved plotting calls fail on the call, not the formula
  Newline,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

inline bool continues_line(Tok k) {
  switch (k) {
    case Tok::Assign:
    case Tok::Pipe:
    case Tok::In:
    case Tok::Comma:
    case Tok::NamedEq:
    case Tok::Eq:
    case Tok::Ne:
    case Tok::Lt:
    case Tok::Le:
    case Tok::Gt:
    case Tok::Ge:
    case Tok::Plus:
    case Tok::Minus:
    case Tok::Star:
    case Tok::Slash:
    case Tok::And:
    case Tok::Or:
    case Tok::Not:
    case Tok::LParen:
      return true;
    default:
      return false;
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    int depth = 0;
    while (true) {
      Token t = next();
      if (t.kind == Tok::LParen) ++depth;
      if (t.kind == Tok::RParen && depth > 0) --depth;
      if (t.kind == Tok::Newline) {
        // Newlines disappear inside parens and after a dangling operator;
        // elsewhere they terminate a statement.
        if (depth > 0 || out.empty() || continues_line(out.back().kind) ||
            out.back().kind == Tok::Newline) {
          continue;
        }
      }
      bool done = t.kind == Tok::End;
      out.push_back(std::move(t));
      if (done) return out;
    }
  }

 private:
  [[noreturn]] void err(const std::string& msg, size_t at) const {
    fail(errc::syntax_error, msg, span_at(at, at + 1));
  }

  SourceSpan span_at(size_t start, size_t end) const {
    SourceSpan s;
    s.start = start;
    s.end = end;
    s.line = line_;
    s.column = static_cast<int>(start - line_start_) + 1;
    return s;
  }

  Token make(Tok kind, size_t start) {
    return Token{kind, std::string(text_.substr(start, pos_ - start)), span_at(start, pos_)};
  }

  Token next() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    size_t start = pos_;
    if (pos_ >= text_.size()) return make(Tok::End, start);
    char c = text_[pos_];

    if (c == '\n') {
      Token t = make(Tok::Newline, start);
      ++pos_;
      ++line_;
      line_start_ = pos_;
      t.text = "\\n";
      return t;
    }
    if (is_ident_start(c)) {
      ++pos_;
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
      return make(Tok::Ident, start);
    }
    if (c >= '0' && c <= '9') return lex_number(start);
    if (c == '\'' || c == '"') return lex_string(start, c);
    if (c == '%') return lex_percent(start);

    ++pos_;
    switch (c) {
      case '(': return make(Tok::LParen, start);
      case ')': return make(Tok::RParen, start);
      case ',': return make(Tok::Comma, start);
      case '+': return make(Tok::Plus, start);
      case '*': return make(Tok::Star, start);
      case '/': return make(Tok::Slash, start);
      case '&': return make(Tok::And, start);
      case '-': return make(Tok::Minus, start);
      case '|':
        if (pos_ < text_.size() && text_[pos_] == '>') {
          ++pos_;
          return make(Tok::Pipe, start);
        }
        return make(Tok::Or, start);
      case '<':
        if (pos_ < text_.size() && text_[pos_] == '-') {
          ++pos_;
          return make(Tok::Assign, start);
        }
        if (pos_ < text_.size() && text_[pos_] == '=') {
          ++pos_;
          return make(Tok::Le, start);
        }
        return make(Tok::Lt, start);
      case '>':
        if (pos_ < text_.size() && text_[pos_] == '=') {
          ++pos_;
          return make(Tok::Ge, start);
        }
        return make(Tok::Gt, start);
      case '=':
        if (pos_ < text_.size() && text_[pos_] == '=') {
          ++pos_;
          return make(Tok::Eq, start);
        }
        return make(Tok::NamedEq, start);
      case '!':
        if (pos_ < text_.size() && text_[pos_] == '=') {
          ++pos_;
          return make(Tok::Ne, start);
        }
        return make(Tok::Not, start);
      case '~':
        return make(Tok::Tilde, start);
      default:
        err(std::string("unexpected character '") + c + "'", start);
    }
  }

  Token lex_number(size_t start) {
    bool is_float = false;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      is_float = true;
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      is_float = true;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ >= text_.size() || text_[pos_] < '0' || text_[pos_] > '9') {
        err("malformed number", start);
      }
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    }
    return make(is_float ? Tok::Float : Tok::Int, start);
  }

  Token lex_string(size_t start, char quote) {
    ++pos_;
    std::string value;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == quote) {
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == quote) {
          value += quote;
          pos_ += 2;
          continue;
        }
        ++pos_;
        Token t = make(Tok::Str, start);
        t.text = std::move(value);
        return t;
      }
      if (c == '\n') break;
      value += c;
      ++pos_;
    }
    err("unterminated string literal", start);
  }

  Token lex_percent(size_t start) {
    size_t close = text_.find('%', pos_ + 1);
    if (close == std::string_view::npos) err("unterminated % operator", start);
    std::string_view word = text_.substr(pos_, close - pos_ + 1);
    pos_ = close + 1;
    if (word == "%>%") return make(Tok::Pipe, start);
    if (word == "%in%") return make(Tok::In, start);
    err("unknown operator " + std::string(word), start);
  }

  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9') || c == '.';
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  size_t line_start_ = 0;
};

// R constructs the paper uses around the pipelines (database handles, plots,
// package loading) that this engine deliberately does not model.
inline bool is_reserved(const std::string& name) {
  static const std::set<std::string> kReserved = {
      "require",     "library", "install.packages", "tbl",  "src_mysql",
      "dbGetQuery",  "xyplot",  "densityplot",      "ladd", "panel.abline",
      "bwplot",      "list",    "print",            "data", "favstats",
  };
  return kReserved.count(name) > 0;
}

inline bool is_verb(const std::string& name) {
  static const std::set<std::string> kVerbs = {
      "select", "filter",    "mutate",   "arrange", "summarise", "group_by",
      "ungroup", "left_join", "distinct", "head",    "collect",
  };
  return kVerbs.count(name) > 0;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Script script() {
    Script out;
    while (!at(Tok::End)) {
      if (at(Tok::Newline)) {
        advance();
        continue;
      }
      out.statements.push_back(statement());
      if (!at(Tok::End)) expect(Tok::Newline, "expected end of statement");
    }
    return out;
  }

  ExprPtr bare_expr() {
    ExprPtr e = expr();
    while (at(Tok::Newline)) advance();
    if (!at(Tok::End)) err("trailing input after expression");
    return e;
  }

 private:
  Statement statement() {
    Statement st;
    st.span = peek().span;
    if (at(Tok::Ident) && peek(1).kind == Tok::Assign) {
      st.target = peek().text;
      advance();
      advance();
    }
    parse_pipeline(st);
    st.span.end = prev_end_;
    return st;
  }

  void parse_pipeline(Statement& st) {
    st.plan = term(st);
    while (at(Tok::Pipe)) {
      advance();
      if (st.collected) err("collect() must be the final verb");
      st.plan = verb_call(st.plan, st);
    }
  }

  Plan term(Statement& st) {
    const Token& t = peek();
    if (!at(Tok::Ident)) err("expected a table name or verb call");
    if (peek(1).kind == Tok::LParen) {
      if (is_verb(t.text)) {
        // Leading-frame style: the first argument is the input pipeline.
        return verb_call(Plan(), st);
      }
      if (is_reserved(t.text)) {
        fail(errc::reserved_error, "'" + t.text + "' is not supported by this engine", t.span);
      }
      err("unknown verb '" + t.text + "'");
    }
    advance();
    return Plan::table(t.text);
  }

  // Parses one verb call. With an empty input plan the verb's first argument
  // is parsed as the input pipeline (call style); otherwise all arguments
  // belong to the verb (pipe style).
  Plan verb_call(Plan input, Statement& st) {
    const Token verb_tok = peek();
    if (!at(Tok::Ident)) err("expected a verb");
    const std::string verb = verb_tok.text;
    if (!is_verb(verb)) {
      if (is_reserved(verb)) {
        fail(errc::reserved_error, "'" + verb + "' is not supported by this engine",
             verb_tok.span);
      }
      fail(errc::syntax_error, "unknown verb '" + verb + "'", verb_tok.span);
    }
    advance();
    expect(Tok::LParen, "expected '(' after verb");

    if (input.empty() && verb != "left_join") {
      input = pipeline_arg();
      if (at(Tok::Comma)) {
        advance();
      } else if (!at(Tok::RParen)) {
        err("expected ',' after the input frame");
      }
    }

    Plan out;
    if (verb == "select") {
      out = input.select(ident_list("select"));
    } else if (verb == "group_by") {
      out = input.group_by(ident_list("group_by"));
    } else if (verb == "filter") {
      ExprPtr pred = expr();
      out = input.filter(pred);
    } else if (verb == "mutate") {
      out = input;
      bool first = true;
      while (first || at(Tok::Comma)) {
        if (!first) advance();
        auto [name, e] = named_expr("mutate");
        out = out.mutate(name, e);
        first = false;
      }
    } else if (verb == "summarise") {
      std::vector<Agg> aggs;
      bool first = true;
      while (first || at(Tok::Comma)) {
        if (!first) advance();
        auto [name, e] = named_expr("summarise");
        aggs.push_back({name, e});
        first = false;
      }
      out = input.summarise(std::move(aggs));
    } else if (verb == "arrange") {
      std::vector<SortKey> keys;
      bool first = true;
      while (first || at(Tok::Comma)) {
        if (!first) advance();
        keys.push_back(sort_key());
        first = false;
      }
      out = input.arrange(std::move(keys));
    } else if (verb == "ungroup") {
      out = input.ungroup();
    } else if (verb == "distinct") {
      out = input.distinct();
    } else if (verb == "head") {
      int64_t n = 6;
      if (!at(Tok::RParen)) n = head_count();
      out = input.head(n);
    } else if (verb == "left_join") {
      out = join_call(std::move(input));
    } else {  // collect
      st.collected = true;
      out = input;
    }
    expect(Tok::RParen, "expected ')'");
    if (st.collected && at(Tok::Pipe)) err("collect() must be the final verb");
    return out;
  }

  Plan pipeline_arg() {
    Statement sub;
    sub.span = peek().span;
    Plan p = term(sub);
    while (at(Tok::Pipe)) {
      advance();
      p = verb_call(p, sub);
    }
    if (sub.collected) err("collect() cannot appear inside an argument");
    return p;
  }

  Plan join_call(Plan input) {
    if (input.empty()) {
      input = pipeline_arg();
      expect(Tok::Comma, "expected ',' after the left frame");
    }
    Plan right = pipeline_arg();
    expect(Tok::Comma, "expected ', by = c(...)' after the right frame");
    const Token& name = peek();
    if (!at(Tok::Ident) || name.text != "by" || peek(1).kind != Tok::NamedEq) {
      err("left_join requires a by = c(...) argument");
    }
    advance();
    advance();
    return left_join(input, right, by_map());
  }

  std::vector<JoinKey> by_map() {
    const Token& c = peek();
    if (!at(Tok::Ident) || c.text != "c") err("expected c(...) after by =");
    advance();
    expect(Tok::LParen, "expected '(' after c");
    std::vector<JoinKey> keys;
    bool first = true;
    while (first || at(Tok::Comma)) {
      if (!first) advance();
      if (!at(Tok::Str)) err("join keys are quoted column names");
      std::string left = peek().text;
      advance();
      std::string right = left;
      if (at(Tok::NamedEq)) {
        advance();
        if (!at(Tok::Str)) err("expected a quoted right-side column after =");
        right = peek().text;
        advance();
      }
      keys.push_back({std::move(left), std::move(right)});
      first = false;
    }
    expect(Tok::RParen, "expected ')'");
    return keys;
  }

  std::vector<std::string> ident_list(const char* verb) {
    std::vector<std::string> names;
    bool first = true;
    while (first || at(Tok::Comma)) {
      if (!first) advance();
      if (!at(Tok::Ident)) err(std::string(verb) + " takes bare column names");
      names.push_back(peek().text);
      advance();
      first = false;
    }
    return names;
  }

  std::pair<std::string, ExprPtr> named_expr(const char* verb) {
    if (!at(Tok::Ident) || peek(1).kind != Tok::NamedEq) {
      err(std::string(verb) + " arguments must be written name = expression");
    }
    std::string name = peek().text;
    advance();
    advance();
    return {std::move(name), expr()};
  }

  SortKey sort_key() {
    if (at(Tok::Ident) && peek().text == "desc" && peek(1).kind == Tok::LParen) {
      advance();
      advance();
      ExprPtr e = expr();
      expect(Tok::RParen, "expected ')'");
      return SortKey{e, SortDir::Desc};
    }
    return SortKey{expr(), SortDir::Asc};
  }

  int64_t head_count() {
    if (at(Tok::Ident) && peek().text == "n" && peek(1).kind == Tok::NamedEq) {
      advance();
      advance();
    }
    if (!at(Tok::Int)) err("head takes a positive row count");
    int64_t n = parse_int(peek());
    if (n < 1) err("head takes a positive row count");
    advance();
    return n;
  }

  // Expression grammar, loosest first: | then & then comparisons/%in%,
  // then + -, then * /, then unary ! -, then atoms.
  ExprPtr expr() { return expr_or(); }

  ExprPtr expr_or() {
    ExprPtr lhs = expr_and();
    while (at(Tok::Or)) {
      advance();
      lhs = Expr::binary(BinaryOp::Or, lhs, expr_and());
    }
    return lhs;
  }

  ExprPtr expr_and() {
    ExprPtr lhs = expr_cmp();
    while (at(Tok::And)) {
      advance();
      lhs = Expr::binary(BinaryOp::And, lhs, expr_cmp());
    }
    return lhs;
  }

  ExprPtr expr_cmp() {
    ExprPtr lhs = expr_add();
    BinaryOp op;
    switch (peek().kind) {
      case Tok::Eq: op = BinaryOp::Eq; break;
      case Tok::Ne: op = BinaryOp::Ne; break;
      case Tok::Lt: op = BinaryOp::Lt; break;
      case Tok::Le: op = BinaryOp::Le; break;
      case Tok::Gt: op = BinaryOp::Gt; break;
      case Tok::Ge: op = BinaryOp::Ge; break;
      case Tok::In: {
        advance();
        return Expr::binary(BinaryOp::In, lhs, literal_list());
      }
      default:
        return lhs;
    }
    advance();
    return Expr::binary(op, lhs, expr_add());
  }

  ExprPtr expr_add() {
    ExprPtr lhs = expr_mul();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      BinaryOp op = at(Tok::Plus) ? BinaryOp::Add : BinaryOp::Sub;
      advance();
      lhs = Expr::binary(op, lhs, expr_mul());
    }
    return lhs;
  }

  ExprPtr expr_mul() {
    ExprPtr lhs = expr_unary();
    while (at(Tok::Star) || at(Tok::Slash)) {
      BinaryOp op = at(Tok::Star) ? BinaryOp::Mul : BinaryOp::Div;
      advance();
      lhs = Expr::binary(op, lhs, expr_unary());
    }
    return lhs;
  }

  ExprPtr expr_unary() {
    if (at(Tok::Not)) {
      advance();
      return Expr::unary(UnaryOp::Not, expr_unary());
    }
    if (at(Tok::Minus)) {
      advance();
      return Expr::unary(UnaryOp::Neg, expr_unary());
    }
    return expr_atom();
  }

  ExprPtr expr_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int: {
        advance();
        return Expr::literal(Value::int_(parse_int(t)));
      }
      case Tok::Float: {
        advance();
        return Expr::literal(Value::float_(parse_float(t)));
      }
      case Tok::Str: {
        advance();
        return Expr::literal(Value::str(t.text));
      }
      case Tok::LParen: {
        advance();
        ExprPtr e = expr();
        expect(Tok::RParen, "expected ')'");
        return e;
      }
      case Tok::Ident:
        return ident_atom();
      default:
        err("expected an expression");
    }
  }

  ExprPtr ident_atom() {
    const Token t = peek();
    advance();
    if (t.text == "TRUE") return Expr::literal(Value::boolean(true));
    if (t.text == "FALSE") return Expr::literal(Value::boolean(false));
    if (t.text == "NA") return Expr::literal(Value::null());
    if (!at(Tok::LParen)) return Expr::column(t.text);

    if (t.text == "desc") {
      advance();
      ExprPtr e = expr();
      expect(Tok::RParen, "expected ')'");
      return Expr::unary(UnaryOp::Desc, e);
    }
    Fn fn;
    if (t.text == "n") {
      fn = Fn::N;
    } else if (t.text == "mean") {
      fn = Fn::Mean;
    } else if (t.text == "sum") {
      fn = Fn::Sum;
    } else if (t.text == "min") {
      fn = Fn::Min;
    } else if (t.text == "max") {
      fn = Fn::Max;
    } else if (t.text == "ymd") {
      fn = Fn::Ymd;
    } else if (t.text == "paste") {
      fn = Fn::Paste;
    } else if (t.text == "collect") {
      fail(errc::syntax_error, "collect() cannot appear inside an argument", t.span);
    } else if (is_reserved(t.text)) {
      fail(errc::reserved_error, "'" + t.text + "' is not supported by this engine", t.span);
    } else {
      fail(errc::syntax_error, "unknown function '" + t.text + "'", t.span);
    }
    advance();
    std::vector<ExprPtr> args;
    std::map<std::string, ExprPtr> named;
    if (!at(Tok::RParen)) {
      bool first = true;
      while (first || at(Tok::Comma)) {
        if (!first) advance();
        if (at(Tok::Ident) && peek(1).kind == Tok::NamedEq) {
          std::string name = peek().text;
          advance();
          advance();
          named.emplace(std::move(name), expr());
        } else {
          args.push_back(expr());
        }
        first = false;
      }
    }
    expect(Tok::RParen, "expected ')'");
    return Expr::call(fn, std::move(args), std::move(named));
  }

  ExprPtr literal_list() {
    const Token& c = peek();
    if (!at(Tok::Ident) || c.text != "c") err("%in% requires a c(...) list");
    advance();
    expect(Tok::LParen, "expected '(' after c");
    std::vector<Value> values;
    bool first = true;
    while (first || at(Tok::Comma)) {
      if (!first) advance();
      values.push_back(list_literal());
      first = false;
    }
    expect(Tok::RParen, "expected ')'");
    return Expr::list(std::move(values));
  }

  Value list_literal() {
    bool neg = false;
    if (at(Tok::Minus)) {
      neg = true;
      advance();
    }
    const Token t = peek();
    switch (t.kind) {
      case Tok::Int:
        advance();
        return Value::int_(neg ? -parse_int(t) : parse_int(t));
      case Tok::Float:
        advance();
        return Value::float_(neg ? -parse_float(t) : parse_float(t));
      case Tok::Str:
        if (neg) err("cannot negate a string");
        advance();
        return Value::str(t.text);
      case Tok::Ident:
        if (neg) err("cannot negate this literal");
        if (t.text == "TRUE") {
          advance();
          return Value::boolean(true);
        }
        if (t.text == "FALSE") {
          advance();
          return Value::boolean(false);
        }
        if (t.text == "NA") {
          advance();
          return Value::null();
        }
        [[fallthrough]];
      default:
        err("c(...) lists hold literals only");
    }
  }

  int64_t parse_int(const Token& t) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) {
      fail(errc::syntax_error, "integer literal out of range", t.span);
    }
    return v;
  }

  double parse_float(const Token& t) {
    double v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) {
      fail(errc::syntax_error, "malformed number", t.span);
    }
    return v;
  }

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(Tok k) const { return peek().kind == k; }
  void advance() {
    prev_end_ = peek().span.end;
    if (pos_ + 1 < toks_.size()) ++pos_;
  }
  void expect(Tok k, const char* msg) {
    if (!at(k)) err(msg);
    advance();
  }
  [[noreturn]] void err(const std::string& msg) const {
    fail(errc::syntax_error, msg, peek().span);
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  size_t prev_end_ = 0;
};

}  // namespace parse_detail

inline Script parse_script(std::string_view text) {
  parse_detail::Parser p(parse_detail::Lexer(text).run());
  return p.script();
}

inline ExprPtr parse_expr(std::string_view text) {
  parse_detail::Parser p(parse_detail::Lexer(text).run());
  return p.bare_expr();
}

// Replaces TableRef leaves named in `aliases` with the bound subplan, so a
// script alias behaves as an inlined pipeline when referenced later.
inline PlanPtr substitute_tables(const PlanPtr& p,
                                 const std::map<std::string, PlanPtr>& aliases) {
  using namespace plan_node;
  if (aliases.empty()) return p;
  if (const auto* t = p->as<TableRef>()) {
    auto it = aliases.find(t->name);
    return it == aliases.end() ? p : it->second;
  }
  auto rebuild1 = [&](const PlanPtr& child, auto make) -> PlanPtr {
    PlanPtr sub = substitute_tables(child, aliases);
    return sub == child ? p : make(sub);
  };
  if (const auto* s = p->as<Select>()) {
    return rebuild1(s->child,
                    [&](PlanPtr c) { return make_plan_node(Select{std::move(c), s->cols}); });
  }
  if (const auto* f = p->as<Filter>()) {
    return rebuild1(f->child,
                    [&](PlanPtr c) { return make_plan_node(Filter{std::move(c), f->pred}); });
  }
  if (const auto* m = p->as<Mutate>()) {
    return rebuild1(m->child, [&](PlanPtr c) {
      return make_plan_node(Mutate{std::move(c), m->name, m->expr});
    });
  }
  if (const auto* ar = p->as<Arrange>()) {
    return rebuild1(ar->child,
                    [&](PlanPtr c) { return make_plan_node(Arrange{std::move(c), ar->keys}); });
  }
  if (const auto* g = p->as<GroupBy>()) {
    return rebuild1(g->child,
                    [&](PlanPtr c) { return make_plan_node(GroupBy{std::move(c), g->keys}); });
  }
  if (const auto* su = p->as<Summarise>()) {
    return rebuild1(su->child,
                    [&](PlanPtr c) { return make_plan_node(Summarise{std::move(c), su->aggs}); });
  }
  if (const auto* u = p->as<Ungroup>()) {
    return rebuild1(u->child, [&](PlanPtr c) { return make_plan_node(Ungroup{std::move(c)}); });
  }
  if (const auto* j = p->as<LeftJoin>()) {
    PlanPtr l = substitute_tables(j->left, aliases);
    PlanPtr r = substitute_tables(j->right, aliases);
    if (l == j->left && r == j->right) return p;
    return make_plan_node(LeftJoin{std::move(l), std::move(r), j->by});
  }
  if (const auto* d = p->as<Distinct>()) {
    return rebuild1(d->child, [&](PlanPtr c) { return make_plan_node(Distinct{std::move(c)}); });
  }
  const auto* h = p->as<Head>();
  return rebuild1(h->child, [&](PlanPtr c) { return make_plan_node(Head{std::move(c), h->n}); });
}

namespace parse_detail {

inline int print_prec(const ExprPtr& e) {
  if (const auto* u = e->as<Unary>()) return u->op == UnaryOp::Desc ? 8 : 7;
  const auto* b = e->as<Binary>();
  if (b == nullptr) return 8;
  switch (b->op) {
    case BinaryOp::Or: return 1;
    case BinaryOp::And: return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
    case BinaryOp::In: return 3;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 4;
    case BinaryOp::Mul:
    case BinaryOp::Div: return 5;
  }
  return 8;
}

inline std::string print_literal(const Value& v) {
  if (v.is_null()) return "NA";
  if (v.is_bool()) return v.as_bool() ? "TRUE" : "FALSE";
  if (v.is_str()) {
    std::string out = "'";
    for (char c : v.as_str()) {
      if (c == '\'') out += '\'';
      out += c;
    }
    return out + "'";
  }
  if (v.is_date()) return "ymd('" + date_to_iso(v.as_date()) + "')";
  return value_to_text(v);
}

inline std::string print_expr_prec(const ExprPtr& e, int min_prec);

inline std::string print_call(const Call& call) {
  static const char* kNames[] = {"n", "mean", "sum", "min", "max", "ymd", "paste"};
  std::string out = kNames[static_cast<int>(call.fn)];
  out += "(";
  bool first = true;
  for (const auto& a : call.args) {
    if (!first) out += ", ";
    out += print_expr_prec(a, 1);
    first = false;
  }
  for (const auto& [name, a] : call.named_args) {
    if (!first) out += ", ";
    out += name + " = " + print_expr_prec(a, 1);
    first = false;
  }
  return out + ")";
}

inline std::string print_expr_prec(const ExprPtr& e, int min_prec) {
  int prec = print_prec(e);
  std::string out;
  if (const auto* c = e->as<ColRef>()) {
    out = c->name;
  } else if (const auto* lit = e->as<Lit>()) {
    out = print_literal(lit->value);
  } else if (const auto* list = e->as<LitList>()) {
    out = "c(";
    for (size_t i = 0; i < list->values.size(); ++i) {
      if (i > 0) out += ", ";
      out += print_literal(list->values[i]);
    }
    out += ")";
  } else if (const auto* u = e->as<Unary>()) {
    switch (u->op) {
      case UnaryOp::Not: out = "!" + print_expr_prec(u->operand, 7); break;
      case UnaryOp::Neg: out = "-" + print_expr_prec(u->operand, 8); break;
      case UnaryOp::Desc: out = "desc(" + print_expr_prec(u->operand, 1) + ")"; break;
    }
  } else if (const auto* b = e->as<Binary>()) {
    const char* op = nullptr;
    switch (b->op) {
      case BinaryOp::Add: op = " + "; break;
      case BinaryOp::Sub: op = " - "; break;
      case BinaryOp::Mul: op = " * "; break;
      case BinaryOp::Div: op = " / "; break;
      case BinaryOp::Eq: op = " == "; break;
      case BinaryOp::Ne: op = " != "; break;
      case BinaryOp::Lt: op = " < "; break;
      case BinaryOp::Le: op = " <= "; break;
      case BinaryOp::Gt: op = " > "; break;
      case BinaryOp::Ge: op = " >= "; break;
      case BinaryOp::And: op = " & "; break;
      case BinaryOp::Or: op = " | "; break;
      case BinaryOp::In: op = " %in% "; break;
    }
    out = print_expr_prec(b->lhs, prec) + op + print_expr_prec(b->rhs, prec + 1);
  } else {
    out = print_call(*e->as<Call>());
  }
  if (prec < min_prec) return "(" + out + ")";
  return out;
}

}  // namespace parse_detail

inline std::string print_expr(const ExprPtr& e) { return parse_detail::print_expr_prec(e, 1); }

inline std::string print_plan(const PlanPtr& p) {
  using namespace plan_node;
  if (const auto* t = p->as<TableRef>()) return t->name;
  if (const auto* s = p->as<Select>()) {
    std::string out = print_plan(s->child) + " %>% select(";
    for (size_t i = 0; i < s->cols.size(); ++i) {
      if (i > 0) out += ", ";
      out += s->cols[i];
    }
    return out + ")";
  }
  if (const auto* f = p->as<Filter>()) {
    return print_plan(f->child) + " %>% filter(" + print_expr(f->pred) + ")";
  }
  if (const auto* m = p->as<Mutate>()) {
    return print_plan(m->child) + " %>% mutate(" + m->name + " = " + print_expr(m->expr) + ")";
  }
  if (const auto* ar = p->as<Arrange>()) {
    std::string out = print_plan(ar->child) + " %>% arrange(";
    for (size_t i = 0; i < ar->keys.size(); ++i) {
      if (i > 0) out += ", ";
      std::string key = print_expr(ar->keys[i].expr);
      out += ar->keys[i].dir == SortDir::Desc ? "desc(" + key + ")" : key;
    }
    return out + ")";
  }
  if (const auto* g = p->as<GroupBy>()) {
    std::string out = print_plan(g->child) + " %>% group_by(";
    for (size_t i = 0; i < g->keys.size(); ++i) {
      if (i > 0) out += ", ";
      out += g->keys[i];
    }
    return out + ")";
  }
  if (const auto* su = p->as<Summarise>()) {
    std::string out = print_plan(su->child) + " %>% summarise(";
    for (size_t i = 0; i < su->aggs.size(); ++i) {
      if (i > 0) out += ", ";
      out += su->aggs[i].name + " = " + print_expr(su->aggs[i].expr);
    }
    return out + ")";
  }
  if (const auto* u = p->as<Ungroup>()) return print_plan(u->child) + " %>% ungroup()";
  if (const auto* j = p->as<LeftJoin>()) {
    std::string out = print_plan(j->left) + " %>% left_join(" + print_plan(j->right) + ", by = c(";
    for (size_t i = 0; i < j->by.size(); ++i) {
      if (i > 0) out += ", ";
      out += "'" + j->by[i].left + "' = '" + j->by[i].right + "'";
    }
    return out + "))";
  }
  if (const auto* d = p->as<Distinct>()) return print_plan(d->child) + " %>% distinct()";
  const auto* h = p->as<Head>();
  if (h->n == 6) return print_plan(h->child) + " %>% head()";
  return print_plan(h->child) + " %>% head(n = " + std::to_string(h->n) + ")";
}

inline std::string print_script(const Script& script) {
  std::string out;
  for (const auto& st : script.statements) {
    if (!st.target.empty()) out += st.target + " <- ";
    out += print_plan(st.plan.node());
    if (st.collected) out += " %>% collect()";
    out += "\n";
  }
  return out;
}

}  // namespace verbframe
