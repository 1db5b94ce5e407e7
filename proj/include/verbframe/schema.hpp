#pragma once

#include <string>
#include <vector>

#include "verbframe/error.hpp"
#include "verbframe/value.hpp"

namespace verbframe {

struct SchemaField {
  std::string name;
  Dtype dtype;

  friend bool operator==(const SchemaField&, const SchemaField&) = default;
};

// Ordered (name, dtype) list; equality is order-sensitive.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<SchemaField> fields) : fields_(std::move(fields)) {
    for (size_t i = 0; i < fields_.size(); ++i) {
      for (size_t j = i + 1; j < fields_.size(); ++j) {
        if (fields_[i].name == fields_[j].name) {
          fail(errc::duplicate_name, "duplicate column '" + fields_[i].name + "' in schema");
        }
      }
    }
  }

  const std::vector<SchemaField>& fields() const { return fields_; }
  size_t size() const { return fields_.size(); }
  const SchemaField& at(size_t i) const { return fields_[i]; }

  bool contains(const std::string& name) const { return find(name) >= 0; }

  int find(const std::string& name) const {
    for (size_t i = 0; i < fields_.size(); ++i) {
      if (fields_[i].name == name) return int(i);
    }
    return -1;
  }

  Dtype dtype_of(const std::string& name) const {
    int i = find(name);
    if (i < 0) fail(errc::unknown_column, "unknown column '" + name + "'");
    return fields_[size_t(i)].dtype;
  }

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<SchemaField> fields_;
};

}  // namespace verbframe
