#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "verbframe/error.hpp"
#include "verbframe/frame.hpp"
#include "verbframe/schema.hpp"
#include "verbframe/value.hpp"

namespace verbframe {

struct CsvOptions {
  char delimiter = ',';
  bool header = true;
  std::vector<std::string> null_tokens = {"", "NA"};
  std::optional<Schema> schema;  // declared override; skips inference
};

namespace csv_detail {

inline bool is_valid_utf8(std::string_view s) {
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = (unsigned char)s[i];
    size_t extra;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      if (c < 0xC2) return false;  // overlong
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      if (c > 0xF4) return false;
    } else {
      return false;
    }
    for (size_t k = 1; k <= extra; ++k) {
      if (i + k >= s.size() || ((unsigned char)s[i + k] & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

struct RawField {
  std::string text;
  bool quoted = false;
};

struct RawRecord {
  std::vector<RawField> fields;
  size_t line = 0;  // 1-based line where the record starts
};

// RFC-4180 record scanner: quoted fields may contain delimiter, quotes
// (doubled) and newlines; records end at an unquoted newline.
inline std::vector<RawRecord> scan_records(std::string_view text, char delim) {
  std::vector<RawRecord> records;
  size_t i = 0, line = 1;
  while (i < text.size()) {
    RawRecord rec;
    rec.line = line;
    bool done = false;
    while (!done) {
      RawField field;
      if (i < text.size() && text[i] == '"') {
        field.quoted = true;
        ++i;
        while (true) {
          if (i >= text.size()) fail(errc::parse_error, "unterminated quoted field in CSV");
          char c = text[i];
          if (c == '"') {
            if (i + 1 < text.size() && text[i + 1] == '"') {
              field.text.push_back('"');
              i += 2;
            } else {
              ++i;
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.text.push_back(c);
            ++i;
          }
        }
      } else {
        while (i < text.size() && text[i] != delim && text[i] != '\n' && text[i] != '\r') {
          field.text.push_back(text[i]);
          ++i;
        }
      }
      rec.fields.push_back(std::move(field));
      if (i >= text.size()) {
        done = true;
      } else if (text[i] == delim) {
        ++i;
      } else if (text[i] == '\r' || text[i] == '\n') {
        if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
        ++i;
        ++line;
        done = true;
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline bool parses_as_int(std::string_view t, int64_t& out) {
  if (t.empty()) return false;
  auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

inline bool parses_as_float(std::string_view t, double& out) {
  if (t.empty()) return false;
  auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

inline bool parses_as_bool(std::string_view t, bool& out) {
  if (t == "true" || t == "TRUE") {
    out = true;
    return true;
  }
  if (t == "false" || t == "FALSE") {
    out = false;
    return true;
  }
  return false;
}

inline bool looks_typed(const std::string& s) {
  int64_t i;
  double d;
  bool b;
  Date dt;
  return parses_as_int(s, i) || parses_as_float(s, d) || parses_as_bool(s, b) ||
         try_parse_date(s, dt, /*strict_width=*/true);
}

inline Value parse_cell(const std::string& token, Dtype want, size_t line) {
  switch (want) {
    case Dtype::Int: {
      int64_t v;
      if (!parses_as_int(token, v)) {
        fail(errc::schema_mismatch,
             "line " + std::to_string(line) + ": '" + token + "' is not an int");
      }
      return Value::int_(v);
    }
    case Dtype::Float: {
      double v;
      if (!parses_as_float(token, v)) {
        fail(errc::schema_mismatch,
             "line " + std::to_string(line) + ": '" + token + "' is not a float");
      }
      return Value::float_(v);
    }
    case Dtype::Date: {
      Date v;
      if (!try_parse_date(token, v, /*strict_width=*/true)) {
        fail(errc::schema_mismatch,
             "line " + std::to_string(line) + ": '" + token + "' is not a date");
      }
      return Value::date(v);
    }
    case Dtype::Bool: {
      bool v;
      if (!parses_as_bool(token, v)) {
        fail(errc::schema_mismatch,
             "line " + std::to_string(line) + ": '" + token + "' is not a bool");
      }
      return Value::boolean(v);
    }
    case Dtype::Str: return Value::str(token);
  }
  fail(errc::schema_mismatch, "bad dtype");
}

}  // namespace csv_detail

inline Frame read_csv_text(std::string_view text, const CsvOptions& opts = {}) {
  using namespace csv_detail;
  if (opts.delimiter == '"' || opts.delimiter == '\n' || opts.delimiter == '\r') {
    fail(errc::io_error, "delimiter may not be quote or newline");
  }
  if (!is_valid_utf8(text)) fail(errc::bad_utf8, "input is not valid UTF-8");

  std::vector<RawRecord> records = scan_records(text, opts.delimiter);
  // A trailing newline yields a phantom single-empty-field record; drop it.
  if (!records.empty() && records.back().fields.size() == 1 &&
      records.back().fields[0].text.empty() && !records.back().fields[0].quoted) {
    records.pop_back();
  }
  if (records.empty()) fail(errc::parse_error, "empty CSV input");

  std::vector<std::string> names;
  size_t first_data = 0;
  if (opts.header) {
    for (const auto& f : records[0].fields) names.push_back(f.text);
    first_data = 1;
  } else if (opts.schema) {
    for (const auto& f : opts.schema->fields()) names.push_back(f.name);
  } else {
    fail(errc::parse_error, "headerless CSV requires a declared schema");
  }
  size_t ncols = names.size();
  if (opts.schema && opts.schema->size() != ncols) {
    fail(errc::schema_mismatch, "declared schema has " + std::to_string(opts.schema->size()) +
                                    " columns, file has " + std::to_string(ncols));
  }
  if (opts.schema && opts.header) {
    for (size_t i = 0; i < ncols; ++i) {
      if (opts.schema->at(i).name != names[i]) {
        fail(errc::schema_mismatch, "declared column '" + opts.schema->at(i).name +
                                        "' does not match header '" + names[i] + "'");
      }
    }
  }

  auto is_null_token = [&](const RawField& f) {
    if (f.quoted) return false;  // quoting makes a field an explicit string
    for (const auto& t : opts.null_tokens) {
      if (f.text == t) return true;
    }
    return false;
  };

  size_t nrows = records.size() - first_data;
  for (size_t r = first_data; r < records.size(); ++r) {
    if (records[r].fields.size() != ncols) {
      fail(errc::ragged_row, "line " + std::to_string(records[r].line) + ": expected " +
                                 std::to_string(ncols) + " fields, got " +
                                 std::to_string(records[r].fields.size()));
    }
  }

  std::vector<Column> cols;
  cols.reserve(ncols);
  for (size_t c = 0; c < ncols; ++c) {
    Dtype dtype;
    if (opts.schema) {
      dtype = opts.schema->at(c).dtype;
    } else {
      // Inference over non-null tokens: Int, else Float, else Date, else
      // Bool, else Str. Any quoted field pins the column to Str.
      bool any = false, all_int = true, all_float = true, all_date = true, all_bool = true;
      bool any_quoted = false;
      for (size_t r = first_data; r < records.size(); ++r) {
        const RawField& f = records[r].fields[c];
        if (is_null_token(f)) continue;
        any = true;
        if (f.quoted) {
          any_quoted = true;
          break;
        }
        int64_t iv;
        double dv;
        bool bv;
        Date dtv;
        if (all_int && !parses_as_int(f.text, iv)) all_int = false;
        if (all_float && !parses_as_float(f.text, dv)) all_float = false;
        if (all_date && !try_parse_date(f.text, dtv, /*strict_width=*/true)) all_date = false;
        if (all_bool && !parses_as_bool(f.text, bv)) all_bool = false;
      }
      if (!any || any_quoted) {
        dtype = Dtype::Str;
      } else if (all_int) {
        dtype = Dtype::Int;
      } else if (all_float) {
        dtype = Dtype::Float;
      } else if (all_date) {
        dtype = Dtype::Date;
      } else if (all_bool) {
        dtype = Dtype::Bool;
      } else {
        dtype = Dtype::Str;
      }
    }

    std::vector<Value> cells;
    cells.reserve(nrows);
    for (size_t r = first_data; r < records.size(); ++r) {
      const RawField& f = records[r].fields[c];
      if (is_null_token(f)) {
        cells.push_back(Value::null());
      } else {
        cells.push_back(csv_detail::parse_cell(f.text, dtype, records[r].line));
      }
    }
    cols.emplace_back(names[c], dtype, std::move(cells));
  }
  return Frame(std::move(cols));
}

inline Frame read_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_csv_text(buf.str(), opts);
}

inline std::string write_csv_text(const Frame& f, const CsvOptions& opts = {}) {
  auto needs_quoting = [&](const std::string& s) {
    if (s.find_first_of(std::string{opts.delimiter, '"', '\n', '\r'}) != std::string::npos) {
      return true;
    }
    for (const auto& t : opts.null_tokens) {
      if (s == t) return true;
    }
    // Quote anything the reader would otherwise re-type.
    return csv_detail::looks_typed(s);
  };
  auto emit_field = [&](std::string& out, const Value& v) {
    if (v.is_null()) return;  // nulls as empty
    std::string text = value_to_text(v);
    if (v.is_str() && needs_quoting(text)) {
      out.push_back('"');
      for (char c : text) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    } else {
      out += text;
    }
  };

  std::string out;
  if (opts.header) {
    for (size_t c = 0; c < f.column_count(); ++c) {
      if (c) out.push_back(opts.delimiter);
      emit_field(out, Value::str(f.column(c).name));
    }
    out.push_back('\n');
  }
  for (size_t r = 0; r < f.row_count(); ++r) {
    for (size_t c = 0; c < f.column_count(); ++c) {
      if (c) out.push_back(opts.delimiter);
      emit_field(out, f.column(c).cells[r]);
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_csv(const Frame& f, const std::string& path, const CsvOptions& opts = {}) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) fail(errc::io_error, "cannot open '" + path + "' for writing");
  outf << write_csv_text(f, opts);
  if (!outf) fail(errc::io_error, "write to '" + path + "' failed");
}

}  // namespace verbframe
