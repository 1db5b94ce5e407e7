#pragma once

#include <string>
#include <utility>
#include <vector>

#include "verbframe/error.hpp"
#include "verbframe/schema.hpp"
#include "verbframe/value.hpp"

namespace verbframe {

// A named, typed sequence of nullable cells. Every non-null cell's variant
// must equal dtype.
struct Column {
  std::string name;
  Dtype dtype = Dtype::Str;
  std::vector<Value> cells;

  Column() = default;
  Column(std::string name_, Dtype dtype_, std::vector<Value> cells_)
      : name(std::move(name_)), dtype(dtype_), cells(std::move(cells_)) {
    if (name.empty()) fail(errc::duplicate_name, "column name must be nonempty");
    for (const Value& v : cells) {
      if (!v.matches(dtype)) {
        fail(errc::type_error, "cell of type " + std::string(dtype_name(v.dtype())) +
                                   " in column '" + name + "' declared " + dtype_name(dtype));
      }
    }
  }

  size_t size() const { return cells.size(); }

  friend bool operator==(const Column&, const Column&) = default;
};

// Immutable named-column table with uniform column lengths and optional
// grouping metadata. All verbs produce new frames.
class Frame {
 public:
  Frame() = default;

  explicit Frame(std::vector<Column> columns, std::vector<std::string> groups = {})
      : columns_(std::move(columns)), groups_(std::move(groups)) {
    for (size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].size() != columns_[0].size()) {
        fail(errc::length_mismatch, "column '" + columns_[i].name + "' has " +
                                        std::to_string(columns_[i].size()) + " cells, expected " +
                                        std::to_string(columns_[0].size()));
      }
      for (size_t j = i + 1; j < columns_.size(); ++j) {
        if (columns_[i].name == columns_[j].name) {
          fail(errc::duplicate_name, "duplicate column '" + columns_[i].name + "'");
        }
      }
    }
    for (const auto& g : groups_) {
      if (find(g) < 0) fail(errc::unknown_column, "grouping key '" + g + "' is not a column");
    }
  }

  size_t row_count() const { return columns_.empty() ? 0 : columns_[0].size(); }
  size_t column_count() const { return columns_.size(); }

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(size_t i) const { return columns_[i]; }

  const std::vector<std::string>& groups() const { return groups_; }
  bool grouped() const { return !groups_.empty(); }

  int find(const std::string& name) const {
    for (size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) return int(i);
    }
    return -1;
  }

  const Column& column_by_name(const std::string& name) const {
    int i = find(name);
    if (i < 0) fail(errc::unknown_column, "unknown column '" + name + "'");
    return columns_[size_t(i)];
  }

  // Same columns, different grouping metadata.
  Frame with_groups(std::vector<std::string> groups) const {
    return Frame(columns_, std::move(groups));
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::vector<Column> columns_;
  std::vector<std::string> groups_;
};

inline Frame frame_from_columns(std::vector<Column> cols) {
  return Frame(std::move(cols));
}

inline Schema schema_of(const Frame& f) {
  std::vector<SchemaField> fields;
  fields.reserve(f.column_count());
  for (const Column& c : f.columns()) fields.push_back({c.name, c.dtype});
  return Schema(std::move(fields));
}

}  // namespace verbframe
