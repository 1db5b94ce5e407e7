#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <variant>

#include "verbframe/error.hpp"

namespace verbframe {

enum class Dtype { Int, Float, Str, Bool, Date };

inline const char* dtype_name(Dtype t) {
  switch (t) {
    case Dtype::Int: return "int";
    case Dtype::Float: return "float";
    case Dtype::Str: return "str";
    case Dtype::Bool: return "bool";
    case Dtype::Date: return "date";
  }
  return "?";
}

// Display tags used by the frame formatter ("Variables not shown: ... (dbl)").
inline const char* dtype_tag(Dtype t) {
  switch (t) {
    case Dtype::Int: return "int";
    case Dtype::Float: return "dbl";
    case Dtype::Str: return "chr";
    case Dtype::Bool: return "lgl";
    case Dtype::Date: return "date";
  }
  return "?";
}

// Calendar date stored as days since 1970-01-01.
struct Date {
  int32_t days = 0;

  friend bool operator==(Date a, Date b) { return a.days == b.days; }
  friend auto operator<=>(Date a, Date b) { return a.days <=> b.days; }
};

inline Date date_from_ymd(int year, int month, int day) {
  namespace chr = std::chrono;
  chr::year_month_day ymd{chr::year{year}, chr::month{unsigned(month)}, chr::day{unsigned(day)}};
  if (!ymd.ok()) {
    fail(errc::parse_error, "invalid calendar date " + std::to_string(year) + "-" +
                                std::to_string(month) + "-" + std::to_string(day));
  }
  return Date{int32_t(chr::sys_days(ymd).time_since_epoch().count())};
}

inline std::string date_to_iso(Date d) {
  namespace chr = std::chrono;
  chr::year_month_day ymd{chr::sys_days{chr::days{d.days}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

// Accepts Y-M-D with a 4-digit year and 1-2 digit month/day. `strict_width`
// additionally requires 2-digit month and day (CSV type inference uses this).
inline bool try_parse_date(std::string_view text, Date& out, bool strict_width = false) {
  auto take_digits = [&](size_t pos, size_t min_d, size_t max_d, int& value, size_t& used) {
    size_t i = pos;
    value = 0;
    while (i < text.size() && i - pos < max_d && text[i] >= '0' && text[i] <= '9') {
      value = value * 10 + (text[i] - '0');
      ++i;
    }
    used = i - pos;
    return used >= min_d;
  };
  int y = 0, m = 0, d = 0;
  size_t used = 0, pos = 0;
  if (!take_digits(pos, 4, 4, y, used)) return false;
  pos += used;
  if (pos >= text.size() || text[pos] != '-') return false;
  ++pos;
  if (!take_digits(pos, strict_width ? 2 : 1, 2, m, used)) return false;
  if (strict_width && used != 2) return false;
  pos += used;
  if (pos >= text.size() || text[pos] != '-') return false;
  ++pos;
  if (!take_digits(pos, strict_width ? 2 : 1, 2, d, used)) return false;
  if (strict_width && used != 2) return false;
  pos += used;
  if (pos != text.size()) return false;
  namespace chr = std::chrono;
  chr::year_month_day ymd{chr::year{y}, chr::month{unsigned(m)}, chr::day{unsigned(d)}};
  if (!ymd.ok()) return false;
  out = Date{int32_t(chr::sys_days(ymd).time_since_epoch().count())};
  return true;
}

inline Date date_from_iso(std::string_view text) {
  Date d;
  if (!try_parse_date(text, d)) {
    fail(errc::parse_error, "expected Y-M-D date, got '" + std::string(text) + "'");
  }
  return d;
}

// Shortest round-trip decimal form; integral values keep a ".0" suffix so the
// text stays unambiguously floating point.
inline std::string float_to_text(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) {  // no '.', exponent, nan/inf
    s += ".0";
  }
  return s;
}

// Nullable scalar: the cell type of every table.
class Value {
 public:
  using Storage = std::variant<std::monostate, int64_t, double, std::string, bool, Date>;

  Value() = default;

  static Value null() { return Value(); }
  static Value int_(int64_t v) { return Value(Storage(std::in_place_type<int64_t>, v)); }
  static Value float_(double v) { return Value(Storage(std::in_place_type<double>, v)); }
  static Value str(std::string v) {
    return Value(Storage(std::in_place_type<std::string>, std::move(v)));
  }
  static Value boolean(bool v) { return Value(Storage(std::in_place_type<bool>, v)); }
  static Value date(Date v) { return Value(Storage(std::in_place_type<Date>, v)); }

  bool is_null() const { return storage_.index() == 0; }
  bool is_int() const { return storage_.index() == 1; }
  bool is_float() const { return storage_.index() == 2; }
  bool is_str() const { return storage_.index() == 3; }
  bool is_bool() const { return storage_.index() == 4; }
  bool is_date() const { return storage_.index() == 5; }

  int64_t as_int() const { return std::get<int64_t>(storage_); }
  double as_float() const { return std::get<double>(storage_); }
  const std::string& as_str() const { return std::get<std::string>(storage_); }
  bool as_bool() const { return std::get<bool>(storage_); }
  Date as_date() const { return std::get<Date>(storage_); }

  // Numeric accessor with int -> float widening.
  double as_number() const { return is_int() ? double(as_int()) : as_float(); }

  // Dtype of a non-null value; calling on null is a programming error.
  Dtype dtype() const {
    switch (storage_.index()) {
      case 1: return Dtype::Int;
      case 2: return Dtype::Float;
      case 3: return Dtype::Str;
      case 4: return Dtype::Bool;
      case 5: return Dtype::Date;
      default: fail(errc::type_error, "null value has no dtype");
    }
  }

  bool matches(Dtype t) const { return is_null() || dtype() == t; }

  friend bool operator==(const Value& a, const Value& b) { return a.storage_ == b.storage_; }

  const Storage& storage() const { return storage_; }

 private:
  explicit Value(Storage s) : storage_(std::move(s)) {}
  Storage storage_;
};

// Total order over same-dtype values, used by sorting and min/max. Nulls are
// handled by the callers (sort direction decides their position). NaN compares
// greater than every number and equal to itself so ordering stays a total
// order.
inline int value_compare(const Value& a, const Value& b) {
  auto cmp3 = [](auto x, auto y) { return x < y ? -1 : (y < x ? 1 : 0); };
  if (a.is_int() && b.is_int()) return cmp3(a.as_int(), b.as_int());
  if ((a.is_int() || a.is_float()) && (b.is_int() || b.is_float())) {
    double x = a.as_number(), y = b.as_number();
    bool nx = std::isnan(x), ny = std::isnan(y);
    if (nx || ny) return nx && ny ? 0 : (nx ? 1 : -1);
    return cmp3(x, y);
  }
  if (a.is_str() && b.is_str()) {
    int c = a.as_str().compare(b.as_str());
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  if (a.is_bool() && b.is_bool()) return cmp3(int(a.as_bool()), int(b.as_bool()));
  if (a.is_date() && b.is_date()) return cmp3(a.as_date().days, b.as_date().days);
  fail(errc::type_error, "cannot order values of different types");
}

// Canonical key bytes for grouping/joining/dedup. Null == Null (SQL GROUP BY
// convention); int and float unify when the float holds the same integer
// losslessly; NaN canonicalizes to a single key.
inline void append_key_bytes(const Value& v, std::string& out) {
  auto append_raw = [&out](const void* p, size_t n) {
    out.append(reinterpret_cast<const char*>(p), n);
  };
  if (v.is_null()) {
    out.push_back('\x00');
    return;
  }
  if (v.is_int()) {
    out.push_back('\x01');
    int64_t x = v.as_int();
    append_raw(&x, sizeof(x));
    return;
  }
  if (v.is_float()) {
    double d = v.as_float();
    if (std::isnan(d)) {
      out.push_back('\x05');
      return;
    }
    int64_t as_i = int64_t(d);
    if (double(as_i) == d && std::abs(d) < 9.2e18) {
      out.push_back('\x01');  // lossless integer: same key as Int
      append_raw(&as_i, sizeof(as_i));
      return;
    }
    out.push_back('\x02');
    if (d == 0.0) d = 0.0;  // collapse -0.0 and +0.0
    append_raw(&d, sizeof(d));
    return;
  }
  if (v.is_str()) {
    out.push_back('\x03');
    uint64_t n = v.as_str().size();
    append_raw(&n, sizeof(n));
    out.append(v.as_str());
    return;
  }
  if (v.is_bool()) {
    out.push_back('\x04');
    out.push_back(v.as_bool() ? '\x01' : '\x00');
    return;
  }
  out.push_back('\x06');
  int32_t d = v.as_date().days;
  append_raw(&d, sizeof(d));
}

// Text form used by CSV output and paste(): ints without separators, floats in
// shortest round-trip form, dates as ISO text.
inline std::string value_to_text(const Value& v) {
  if (v.is_null()) return "";
  if (v.is_int()) return std::to_string(v.as_int());
  if (v.is_float()) return float_to_text(v.as_float());
  if (v.is_str()) return v.as_str();
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  return date_to_iso(v.as_date());
}

}  // namespace verbframe
