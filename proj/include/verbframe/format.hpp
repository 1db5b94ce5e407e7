#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "verbframe/frame.hpp"
#include "verbframe/value.hpp"

namespace verbframe {

namespace format_detail {

constexpr size_t kDisplayWidth = 80;

// Float columns print with a fixed fraction only when some value needs one.
inline bool column_has_fraction(const Column& col) {
  for (const Value& v : col.cells) {
    if (!v.is_float()) continue;
    double d = v.as_float();
    if (std::isfinite(d) && d != std::floor(d)) return true;
  }
  return false;
}

inline std::string render_cell(const Value& v, Dtype col_dtype, bool frac) {
  if (v.is_null()) return "NA";
  switch (col_dtype) {
    case Dtype::Int:
      return std::to_string(v.as_int());
    case Dtype::Float: {
      double d = v.as_float();
      if (!std::isfinite(d)) return float_to_text(d);
      char buf[64];
      std::snprintf(buf, sizeof buf, frac ? "%.4f" : "%.0f", d);
      return buf;
    }
    case Dtype::Str:
      return v.as_str();
    case Dtype::Bool:
      return v.as_bool() ? "true" : "false";
    case Dtype::Date:
      return date_to_iso(v.as_date());
    default:
      return value_to_text(v);
  }
}

inline std::string pad_left(const std::string& s, size_t width) {
  if (s.size() >= width) return s;
  return std::string(width - s.size(), ' ') + s;
}

}  // namespace format_detail

// Renders a frame the way the CLI prints it: a source line with the frame's
// full dimensions, a grouping line when keys are set, then up to max_print
// numbered rows. Columns past the display width are elided and listed by name.
inline std::string format_frame(const Frame& f, size_t max_print = 6) {
  using namespace format_detail;

  std::string out = "Source: local data frame [" + std::to_string(f.row_count()) + " x " +
                    std::to_string(f.column_count()) + "]\n";
  if (f.grouped()) {
    out += "Groups: ";
    const auto& gs = f.groups();
    for (size_t i = 0; i < gs.size(); ++i) {
      if (i) out += ", ";
      out += gs[i];
    }
    out += "\n";
  }
  out += "\n";

  size_t shown_rows = std::min(max_print, f.row_count());

  // Render every visible cell up front so column widths are exact.
  size_t ncols = f.column_count();
  std::vector<std::vector<std::string>> cells(ncols);
  std::vector<size_t> widths(ncols);
  for (size_t c = 0; c < ncols; ++c) {
    const Column& col = f.column(c);
    bool frac = col.dtype == Dtype::Float && column_has_fraction(col);
    widths[c] = col.name.size();
    cells[c].reserve(shown_rows);
    for (size_t r = 0; r < shown_rows; ++r) {
      cells[c].push_back(render_cell(col.cells[r], col.dtype, frac));
      widths[c] = std::max(widths[c], cells[c].back().size());
    }
  }

  size_t num_width = std::to_string(shown_rows == 0 ? 1 : shown_rows).size();

  // Keep columns while the rendered line stays inside the display width.
  size_t line_width = num_width;
  size_t visible = 0;
  while (visible < ncols && line_width + 1 + widths[visible] <= kDisplayWidth) {
    line_width += 1 + widths[visible];
    ++visible;
  }
  if (visible == 0 && ncols > 0) visible = 1;

  out += std::string(num_width, ' ');
  for (size_t c = 0; c < visible; ++c) {
    out += ' ';
    out += pad_left(f.column(c).name, widths[c]);
  }
  out += "\n";

  for (size_t r = 0; r < shown_rows; ++r) {
    out += pad_left(std::to_string(r + 1), num_width);
    for (size_t c = 0; c < visible; ++c) {
      out += ' ';
      out += pad_left(cells[c][r], widths[c]);
    }
    out += "\n";
  }

  if (visible < ncols) {
    std::string line = "Variables not shown:";
    bool line_has_item = false;
    for (size_t c = visible; c < ncols; ++c) {
      std::string item = f.column(c).name + " (" + dtype_tag(f.column(c).dtype) + ")";
      if (c + 1 < ncols) item += ",";
      if (line_has_item && line.size() + 1 + item.size() > kDisplayWidth) {
        out += line + "\n";
        line = " ";
        line_has_item = false;
      }
      line += " " + item;
      line_has_item = true;
    }
    out += line + "\n";
  }

  return out;
}

}  // namespace verbframe
