#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "verbframe/csv.hpp"
#include "verbframe/error.hpp"
#include "verbframe/frame.hpp"
#include "verbframe/schema.hpp"

namespace verbframe {

struct LocalCsv {
  std::string path;
  std::optional<Schema> declared;
  CsvOptions options;
};

// Named table on a remote engine: compiles to SQL, never executes in memory.
struct RemoteTable {
  std::string qualified_name;
  Schema declared;
};

using TableSource = std::variant<LocalCsv, RemoteTable>;

// Name -> table bindings. Read-only after construction, except for the
// materialization counter, which tests use to observe laziness.
class Catalog {
 public:
  Catalog() = default;
  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  void add_csv(const std::string& name, std::string path, CsvOptions options = {}) {
    insert(name, LocalCsv{std::move(path), options.schema, std::move(options)});
  }

  void add_remote(const std::string& name, std::string qualified_name, Schema declared) {
    insert(name, RemoteTable{std::move(qualified_name), std::move(declared)});
  }

  bool contains(const std::string& name) const { return bindings_.count(name) > 0; }

  const TableSource& source(const std::string& name) const {
    auto it = bindings_.find(name);
    if (it == bindings_.end()) fail(errc::unknown_table, "unknown table '" + name + "'");
    return it->second;
  }

  // Schema without materialization: declared schema when present, otherwise a
  // sniff of the CSV. Does not count as a materialization event.
  Schema schema_of(const std::string& name) const {
    const TableSource& src = source(name);
    if (const auto* remote = std::get_if<RemoteTable>(&src)) return remote->declared;
    const auto& csv = std::get<LocalCsv>(src);
    if (csv.declared) return *csv.declared;
    return verbframe::schema_of(read_csv(csv.path, csv.options));
  }

  // Loads a local table into memory and bumps the materialization counter.
  Frame materialize(const std::string& name) const {
    const TableSource& src = source(name);
    if (std::holds_alternative<RemoteTable>(src)) {
      fail(errc::remote_not_executable,
           "table '" + name + "' is remote; use the SQL backend");
    }
    const auto& csv = std::get<LocalCsv>(src);
    Frame f = read_csv(csv.path, csv.options);
    access_count_.fetch_add(1, std::memory_order_relaxed);
    return f;
  }

  int64_t access_count() const { return access_count_.load(std::memory_order_relaxed); }

  const std::map<std::string, TableSource>& bindings() const { return bindings_; }

 private:
  void insert(const std::string& name, TableSource src) {
    if (name.empty()) fail(errc::unknown_table, "table name must be nonempty");
    if (!bindings_.emplace(name, std::move(src)).second) {
      fail(errc::duplicate_name, "table '" + name + "' already bound");
    }
  }

  std::map<std::string, TableSource> bindings_;
  mutable std::atomic<int64_t> access_count_{0};
};

}  // namespace verbframe
