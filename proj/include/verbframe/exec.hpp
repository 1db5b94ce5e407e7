#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "verbframe/bind.hpp"
#include "verbframe/catalog.hpp"
#include "verbframe/eval.hpp"
#include "verbframe/frame.hpp"
#include "verbframe/plan.hpp"

namespace verbframe {

namespace exec_detail {

inline Frame take_rows(const Frame& f, const std::vector<size_t>& rows,
                       std::vector<std::string> groups) {
  std::vector<Column> cols;
  cols.reserve(f.column_count());
  for (const Column& c : f.columns()) {
    std::vector<Value> cells;
    cells.reserve(rows.size());
    for (size_t r : rows) cells.push_back(c.cells[r]);
    cols.emplace_back(c.name, c.dtype, std::move(cells));
  }
  return Frame(std::move(cols), std::move(groups));
}

inline std::string row_key(const std::vector<const Column*>& cols, size_t row) {
  std::string key;
  for (const Column* c : cols) append_key_bytes(c->cells[row], key);
  return key;
}

// Partitions rows by key tuple, groups ordered by first appearance. Null keys
// compare equal to each other, as in GROUP BY.
inline std::vector<std::vector<size_t>> partition_rows(const Frame& f,
                                                       const std::vector<std::string>& keys) {
  std::vector<const Column*> cols;
  cols.reserve(keys.size());
  for (const auto& k : keys) cols.push_back(&f.column_by_name(k));
  std::vector<std::vector<size_t>> groups;
  std::unordered_map<std::string, size_t> slot;
  for (size_t r = 0; r < f.row_count(); ++r) {
    auto [it, fresh] = slot.try_emplace(row_key(cols, r), groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(r);
  }
  return groups;
}

// Sort comparator per key: ascending puts nulls last, descending reverses the
// whole order so nulls come first. Ties fall through to the next key.
inline bool row_less(const std::vector<Column>& keys, const std::vector<SortDir>& dirs, size_t i,
                     size_t j) {
  for (size_t k = 0; k < keys.size(); ++k) {
    const Value& a = keys[k].cells[i];
    const Value& b = keys[k].cells[j];
    bool an = a.is_null();
    bool bn = b.is_null();
    if (an || bn) {
      if (an && bn) continue;
      return dirs[k] == SortDir::Asc ? bn : an;
    }
    int c = value_compare(a, b);
    if (c == 0) continue;
    return dirs[k] == SortDir::Asc ? c < 0 : c > 0;
  }
  return false;
}

class Executor {
 public:
  explicit Executor(const Catalog& cat) : cat_(cat) {}

  Frame run(const BoundNodePtr& bp) {
    using namespace plan_node;
    const PlanPtr& p = bp->plan;

    if (const auto* t = p->as<TableRef>()) {
      auto it = tables_.find(t->name);
      if (it == tables_.end()) it = tables_.emplace(t->name, cat_.materialize(t->name)).first;
      return it->second.with_groups(bp->groups);
    }

    if (const auto* s = p->as<Select>()) {
      Frame in = run(bp->child());
      std::vector<Column> cols;
      cols.reserve(s->cols.size());
      for (const auto& name : s->cols) cols.push_back(in.column_by_name(name));
      return Frame(std::move(cols), bp->groups);
    }

    if (const auto* f = p->as<Filter>()) {
      Frame in = run(bp->child());
      Column pred = eval_column(f->pred, in);
      std::vector<size_t> rows;
      for (size_t r = 0; r < in.row_count(); ++r) {
        const Value& v = pred.cells[r];
        // Null predicates drop the row, same as false.
        if (v.is_bool() && v.as_bool()) rows.push_back(r);
      }
      return take_rows(in, rows, bp->groups);
    }

    if (const auto* m = p->as<Mutate>()) {
      Frame in = run(bp->child());
      Column derived = eval_column(m->expr, in);
      derived.name = m->name;
      std::vector<Column> cols = in.columns();
      auto it = std::find_if(cols.begin(), cols.end(),
                             [&](const Column& c) { return c.name == m->name; });
      if (it != cols.end()) {
        *it = std::move(derived);
      } else {
        cols.push_back(std::move(derived));
      }
      return Frame(std::move(cols), bp->groups);
    }

    if (const auto* ar = p->as<Arrange>()) {
      Frame in = run(bp->child());
      std::vector<Column> key_cols;
      std::vector<SortDir> dirs;
      key_cols.reserve(ar->keys.size());
      for (const auto& raw : ar->keys) {
        SortKey key = bind_detail::normalize_sort_key(raw);
        key_cols.push_back(eval_column(key.expr, in));
        dirs.push_back(key.dir);
      }
      std::vector<size_t> rows(in.row_count());
      std::iota(rows.begin(), rows.end(), size_t{0});
      std::stable_sort(rows.begin(), rows.end(),
                       [&](size_t i, size_t j) { return row_less(key_cols, dirs, i, j); });
      return take_rows(in, rows, bp->groups);
    }

    if (p->as<GroupBy>() != nullptr || p->as<Ungroup>() != nullptr) {
      return run(bp->child()).with_groups(bp->groups);
    }

    if (const auto* su = p->as<Summarise>()) {
      Frame in = run(bp->child());
      const std::vector<std::string>& keys = bp->child()->groups;
      std::vector<std::vector<size_t>> parts;
      if (keys.empty()) {
        // Ungrouped aggregation always yields one row, even over no input.
        parts.emplace_back(in.row_count());
        std::iota(parts.back().begin(), parts.back().end(), size_t{0});
      } else {
        parts = partition_rows(in, keys);
      }
      std::vector<Column> cols;
      cols.reserve(bp->schema.size());
      for (const auto& key : keys) {
        const Column& src = in.column_by_name(key);
        std::vector<Value> cells;
        cells.reserve(parts.size());
        for (const auto& rows : parts) cells.push_back(src.cells[rows.front()]);
        cols.emplace_back(key, src.dtype, std::move(cells));
      }
      for (const auto& agg : su->aggs) {
        AggregateEvaluator ev(agg.expr, in);
        std::vector<Value> cells;
        cells.reserve(parts.size());
        for (const auto& rows : parts) cells.push_back(ev.value_for(rows));
        cols.emplace_back(agg.name, bp->schema.dtype_of(agg.name), std::move(cells));
      }
      return Frame(std::move(cols), bp->groups);
    }

    if (const auto* j = p->as<LeftJoin>()) {
      Frame left = run(bp->child(0));
      Frame right = run(bp->child(1));
      std::vector<const Column*> lkeys;
      std::vector<const Column*> rkeys;
      std::unordered_map<std::string, bool> is_rkey;
      for (const auto& key : j->by) {
        lkeys.push_back(&left.column_by_name(key.left));
        rkeys.push_back(&right.column_by_name(key.right));
        is_rkey[key.right] = true;
      }
      // Null keys never match, so rows with null keys stay out of the table.
      std::unordered_map<std::string, std::vector<size_t>> matches;
      for (size_t r = 0; r < right.row_count(); ++r) {
        bool has_null = false;
        for (const Column* c : rkeys) has_null = has_null || c->cells[r].is_null();
        if (!has_null) matches[row_key(rkeys, r)].push_back(r);
      }
      std::vector<size_t> lrows;
      std::vector<int64_t> rrows;  // -1 marks an unmatched left row
      for (size_t l = 0; l < left.row_count(); ++l) {
        bool has_null = false;
        for (const Column* c : lkeys) has_null = has_null || c->cells[l].is_null();
        auto it = has_null ? matches.end() : matches.find(row_key(lkeys, l));
        if (it == matches.end() || it->second.empty()) {
          lrows.push_back(l);
          rrows.push_back(-1);
        } else {
          for (size_t r : it->second) {
            lrows.push_back(l);
            rrows.push_back(static_cast<int64_t>(r));
          }
        }
      }
      std::vector<Column> cols;
      cols.reserve(bp->schema.size());
      for (const Column& c : left.columns()) {
        std::vector<Value> cells;
        cells.reserve(lrows.size());
        for (size_t l : lrows) cells.push_back(c.cells[l]);
        cols.emplace_back(c.name, c.dtype, std::move(cells));
      }
      for (const Column& c : right.columns()) {
        if (is_rkey.count(c.name)) continue;
        std::vector<Value> cells;
        cells.reserve(rrows.size());
        for (int64_t r : rrows) {
          cells.push_back(r < 0 ? Value::null() : c.cells[static_cast<size_t>(r)]);
        }
        cols.emplace_back(c.name, c.dtype, std::move(cells));
      }
      return Frame(std::move(cols), bp->groups);
    }

    if (p->as<Distinct>() != nullptr) {
      Frame in = run(bp->child());
      std::vector<const Column*> cols;
      cols.reserve(in.column_count());
      for (const Column& c : in.columns()) cols.push_back(&c);
      std::unordered_map<std::string, bool> seen;
      std::vector<size_t> rows;
      for (size_t r = 0; r < in.row_count(); ++r) {
        if (seen.try_emplace(row_key(cols, r), true).second) rows.push_back(r);
      }
      return take_rows(in, rows, bp->groups);
    }

    const auto* h = p->as<Head>();
    Frame in = run(bp->child());
    size_t n = std::min<size_t>(static_cast<size_t>(h->n), in.row_count());
    std::vector<size_t> rows(n);
    std::iota(rows.begin(), rows.end(), size_t{0});
    return take_rows(in, rows, bp->groups);
  }

 private:
  const Catalog& cat_;
  std::unordered_map<std::string, Frame> tables_;
};

}  // namespace exec_detail

inline Frame execute(const BoundPlan& bp, const Catalog& cat) {
  return exec_detail::Executor(cat).run(bp.root);
}

// Binds, then runs the whole pipeline; the only point where tables are read.
inline Frame collect(const Plan& p, const Catalog& cat) {
  return execute(bind(p, cat), cat);
}

}  // namespace verbframe
