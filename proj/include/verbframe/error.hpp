#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace verbframe {

// Byte range plus 1-based line/column of a token in a script, for diagnostics.
struct SourceSpan {
  size_t start = 0;
  size_t end = 0;
  int line = 0;
  int column = 0;

  bool valid() const { return line > 0; }
};

enum class errc {
  length_mismatch,
  duplicate_name,
  unknown_column,
  unknown_table,
  type_error,
  arity_error,
  divide_by_zero,
  overflow,
  parse_error,
  syntax_error,
  reserved_error,
  empty_projection,
  group_key_dropped,
  name_collision,
  exec_error,
  io_error,
  ragged_row,
  bad_utf8,
  schema_mismatch,
  remote_not_executable,
  unsupported,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::length_mismatch: return "LengthMismatch";
    case errc::duplicate_name: return "DuplicateName";
    case errc::unknown_column: return "UnknownColumn";
    case errc::unknown_table: return "UnknownTable";
    case errc::type_error: return "TypeError";
    case errc::arity_error: return "ArityError";
    case errc::divide_by_zero: return "DivideByZero";
    case errc::overflow: return "Overflow";
    case errc::parse_error: return "ParseError";
    case errc::syntax_error: return "SyntaxError";
    case errc::reserved_error: return "ReservedError";
    case errc::empty_projection: return "EmptyProjection";
    case errc::group_key_dropped: return "GroupKeyDropped";
    case errc::name_collision: return "NameCollision";
    case errc::exec_error: return "ExecError";
    case errc::io_error: return "IoError";
    case errc::ragged_row: return "RaggedRow";
    case errc::bad_utf8: return "BadUtf8";
    case errc::schema_mismatch: return "SchemaMismatch";
    case errc::remote_not_executable: return "RemoteNotExecutable";
    case errc::unsupported: return "Unsupported";
  }
  return "Error";
}

// Single exception type for the whole library; tests dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(errc code, std::string message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Error(errc code, std::string message, SourceSpan span)
      : std::runtime_error(std::string(errc_name(code)) + " at " + std::to_string(span.line) +
                           ":" + std::to_string(span.column) + ": " + message),
        code_(code),
        span_(span) {}

  errc code() const { return code_; }
  const SourceSpan& span() const { return span_; }

 private:
  errc code_;
  SourceSpan span_{};
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
  throw Error(code, message);
}

[[noreturn]] inline void fail(errc code, const std::string& message, SourceSpan span) {
  throw Error(code, message, span);
}

}  // namespace verbframe
