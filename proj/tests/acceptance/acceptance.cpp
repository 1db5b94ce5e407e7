// Acceptance gate: one line per criterion, PASS/FAIL/SKIP, exit code equal
// to the number of failures. Each criterion re-derives what it checks from
// the public API so a regression anywhere upstream surfaces here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "support/frame_compare.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"
#include "support/sqlite_harness.hpp"
#include "support/synth_data.hpp"
#include "verbframe/verbframe.hpp"

using namespace verbframe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct CheckFail : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure(bool ok, const std::string& what) {
  if (!ok) throw CheckFail(what);
}

std::string repo_path(const std::string& rel) {
  return std::string(VERBFRAME_REPO_DIR) + "/" + rel;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ensure(in.good(), "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool close_rel(double a, double b, double rel) {
  double scale = std::max(std::fabs(a), std::fabs(b));
  return std::fabs(a - b) <= rel * std::max(scale, 1.0);
}

// Fixture tables plus deterministic synthetic flight history; the same
// catalog the command-line samples run against.
const std::string& catalog_dir() {
  static std::string dir = [] {
    fs::path d = fs::temp_directory_path() / "verbframe_acceptance_catalog";
    fs::remove_all(d);
    fs::create_directories(d);
    for (const auto& ent : fs::directory_iterator(repo_path("data"))) {
      if (ent.path().extension() == ".csv") fs::copy_file(ent.path(), d / ent.path().filename());
    }
    testsupport::write_synth_tables(d.string());
    return d.string();
  }();
  return dir;
}

void load_catalog(Catalog& cat) {
  std::vector<fs::path> files;
  for (const auto& ent : fs::directory_iterator(catalog_dir())) {
    if (ent.path().extension() == ".csv") files.push_back(ent.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) cat.add_csv(p.stem().string(), p.string(), CsvOptions{});
}

void fill_remote_catalog(Catalog& cat) {
  auto I = Dtype::Int;
  auto F = Dtype::Float;
  auto S = Dtype::Str;
  cat.add_remote("ontime", "ontime",
                 Schema({{"Year", I},
                         {"Month", I},
                         {"DayofMonth", I},
                         {"DayOfWeek", I},
                         {"UniqueCarrier", S},
                         {"Origin", S},
                         {"Dest", S},
                         {"ArrDelay", I},
                         {"Distance", I},
                         {"tailnum", S}}));
  cat.add_remote("airports", "airports",
                 Schema({{"code", S},
                         {"name", S},
                         {"city", S},
                         {"state", S},
                         {"country", S},
                         {"latitude", F},
                         {"longitude", F}}));
  cat.add_remote("carriers", "carriers", Schema({{"code", S}, {"name", S}}));
  cat.add_remote("delays", "delays",
                 Schema({{"Year", I},
                         {"Month", I},
                         {"DayofMonth", I},
                         {"UniqueCarrier", S},
                         {"meandelay", F},
                         {"count", I}}));
  cat.add_remote("singleplane", "singleplane",
                 Schema({{"Year", I},
                         {"Month", I},
                         {"DayofMonth", I},
                         {"Dest", S},
                         {"Origin", S},
                         {"Distance", I}}));
  cat.add_remote("airportcounts", "airportcounts",
                 Schema({{"Year", I}, {"Month", I}, {"Dest", S}, {"count", I}}));
}

PlanPtr last_resolved_plan(const std::string& script_text) {
  Script script = parse_script(script_text);
  std::map<std::string, PlanPtr> aliases;
  PlanPtr last;
  for (const auto& st : script.statements) {
    PlanPtr resolved = substitute_tables(st.plan.node(), aliases);
    if (!st.target.empty()) aliases[st.target] = resolved;
    last = resolved;
  }
  ensure(last != nullptr, "script has no statements");
  return last;
}

PlanPtr block_plan(const std::string& stem) {
  return last_resolved_plan(slurp(repo_path("tests/corpus/blocks/" + stem + ".vf")));
}

Frame run_block(const std::string& stem) {
  Catalog cat;
  load_catalog(cat);
  return collect(Plan(block_plan(stem)), cat);
}

Frame run_text(const std::string& text) {
  Catalog cat;
  load_catalog(cat);
  return collect(Plan(last_resolved_plan(text)), cat);
}

std::vector<std::string> block_stems() {
  std::vector<std::string> stems;
  for (const auto& ent : fs::directory_iterator(repo_path("tests/corpus/blocks"))) {
    stems.push_back(ent.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

const Column& column_named(const Frame& f, const std::string& name) {
  for (const auto& c : f.columns()) {
    if (c.name == name) return c;
  }
  throw CheckFail("result lacks column " + name);
}

int failures = 0;

void criterion(int n, const char* name, const std::function<void()>& body) {
  try {
    body();
    std::printf("PASS  %2d. %s\n", n, name);
  } catch (const std::exception& e) {
    ++failures;
    std::printf("FAIL  %2d. %s\n      %s\n", n, name, e.what());
  }
}

}  // namespace

int main() {
  auto suite_start = Clock::now();

  criterion(1, "airport filter reproduces the three printed rows", [] {
    auto t0 = Clock::now();
    Frame f = run_block("01_filter_membership");
    ensure(f.row_count() == 3, "expected 3 rows, got " + std::to_string(f.row_count()));
    const double lat[] = {42.74812, 41.93887, 44.47300};
    const char* codes[] = {"ALB", "BDL", "BTV"};
    const Column& code = column_named(f, "code");
    const Column& latitude = column_named(f, "latitude");
    for (size_t r = 0; r < 3; ++r) {
      ensure(code.cells[r].as_str() == codes[r], "row order broke");
      ensure(close_rel(latitude.cells[r].as_float(), lat[r], 1e-9),
             "latitude " + std::to_string(latitude.cells[r].as_float()));
    }
    ensure(ms_since(t0) < 1000.0, "took over a second");
  });

  criterion(2, "date construction yields the six month starts", [] {
    Frame f = run_block("03_derive_date");
    ensure(f.row_count() == 6, "expected 6 rows");
    const Column& date = column_named(f, "Date");
    ensure(date.dtype == Dtype::Date, "Date column is not a date");
    const char* want[] = {"1987-10-01", "1987-10-01", "1987-10-01",
                          "1987-11-01", "1987-11-01", "1987-11-01"};
    for (size_t r = 0; r < 6; ++r) {
      ensure(date_to_iso(date.cells[r].as_date()) == want[r],
             "row " + std::to_string(r) + " is " + date_to_iso(date.cells[r].as_date()));
    }
  });

  criterion(3, "high-delay filter returns the four rows in order", [] {
    Frame f = run_text("filter(delays, meandelay > 50)");
    ensure(f.row_count() == 4, "expected 4 rows, got " + std::to_string(f.row_count()));
    const double want[] = {78.3333, 59.2500, 88.4000, 53.8000};
    const Column& delay = column_named(f, "meandelay");
    for (size_t r = 0; r < 4; ++r) {
      ensure(close_rel(delay.cells[r].as_float(), want[r], 1e-9),
             "row " + std::to_string(r) + " is " + std::to_string(delay.cells[r].as_float()));
    }
  });

  criterion(4, "join keeps left order and resolves every carrier name", [] {
    Frame merged = run_block("06_join_carrier_names");
    ensure(merged.row_count() == 6, "expected 6 rows");
    ensure(merged.column_count() == 7, "expected 7 columns");
    ensure(merged.column(6).name == "name", "name column is not last");
    for (size_t r = 0; r < 6; ++r) {
      ensure(!merged.column(6).cells[r].is_null(), "null carrier name at row " + std::to_string(r));
    }
    Frame left = run_text("head(delays)");
    const Column& got = column_named(merged, "UniqueCarrier");
    const Column& want = column_named(left, "UniqueCarrier");
    for (size_t r = 0; r < 6; ++r) {
      ensure(got.cells[r].as_str() == want.cells[r].as_str(), "left order broke");
    }
    std::string shown = format_frame(merged);
    ensure(shown.find("[6 x 7]") != std::string::npos, "dimension header missing");
  });

  criterion(5, "yearly distances aggregate to the exact grand total", [] {
    Frame f = run_text("singleplane_yearly %>% summarise(total = sum(totaldist))");
    ensure(f.row_count() == 1 && f.column_count() == 1, "expected a single cell");
    const Value& total = f.column(0).cells[0];
    ensure(total.is_int(), "total is not integer-typed");
    ensure(total.as_int() == 11892763, "total is " + std::to_string(total.as_int()));
  });

  criterion(6, "sort plus threshold keeps the five busy destinations in order", [] {
    Frame f = run_text("dest_counts %>% arrange(desc(count)) %>% filter(count > 500)");
    ensure(f.row_count() == 5, "expected 5 rows, got " + std::to_string(f.row_count()));
    const char* dests[] = {"MSP", "DTW", "MEM", "LGA", "ATL"};
    const int64_t counts[] = {2861, 2271, 847, 812, 716};
    const Column& dest = column_named(f, "Dest");
    const Column& count = column_named(f, "count");
    for (size_t r = 0; r < 5; ++r) {
      ensure(dest.cells[r].as_str() == dests[r] && count.cells[r].as_int() == counts[r],
             "row " + std::to_string(r) + " is " + dest.cells[r].as_str());
    }
  });

  criterion(7, "summarise peels the last grouping key and ungroup clears", [] {
    Catalog cat;
    load_catalog(cat);
    Plan p(block_plan("02_monthly_counts"));
    BoundPlan bp = bind(p, cat);
    ensure(bp.groups() == std::vector<std::string>({"Year", "Month"}),
           "groups after summarise are not [Year, Month]");
    BoundPlan cleared = bind(p.ungroup(), cat);
    ensure(cleared.groups().empty(), "ungroup left grouping keys behind");
  });

  criterion(8, "plans touch no data until collect, then once per table", [] {
    {
      Catalog cat;
      load_catalog(cat);
      Plan p = Plan::table("airports")
                   .filter(parse_expr("country == 'USA'"))
                   .mutate("lat2", parse_expr("latitude * 2.0"))
                   .select({"code", "lat2"})
                   .arrange({SortKey{Expr::column("code"), SortDir::Desc}})
                   .head(2);
      ensure(cat.access_count() == 0, "construction touched the catalog");
      bind(p, cat);
      ensure(cat.access_count() == 0, "binding touched the catalog");
      collect(p, cat);
      ensure(cat.access_count() == 1, "collect did not read exactly one table");
    }
    {
      Catalog cat;
      load_catalog(cat);
      Plan joined(last_resolved_plan(
          "left_join(delays, carriers, by=c(\"UniqueCarrier\" = \"code\")) %>%"
          " select(UniqueCarrier, name) %>% distinct()"));
      ensure(cat.access_count() == 0, "construction touched the catalog");
      collect(joined, cat);
      ensure(cat.access_count() == 2, "join did not read exactly its two tables");
    }
  });

  criterion(9, "one hundred random pipelines match the reference executor", [] {
    auto t0 = Clock::now();
    fs::path dir = fs::temp_directory_path() / "verbframe_acceptance_prop";
    fs::create_directories(dir);
    int both_err = 0;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
      testsupport::Rng rng(seed);
      Frame table0 = testsupport::random_frame(rng);
      Frame table1 = testsupport::random_join_frame(rng);
      Plan p = testsupport::random_pipeline(rng, table0);

      CsvOptions o0;
      std::vector<SchemaField> f0;
      for (const auto& c : table0.columns()) f0.push_back({c.name, c.dtype});
      o0.schema = Schema(f0);
      CsvOptions o1;
      std::vector<SchemaField> f1;
      for (const auto& c : table1.columns()) f1.push_back({c.name, c.dtype});
      o1.schema = Schema(f1);
      write_csv(table0, (dir / "t0.csv").string());
      write_csv(table1, (dir / "t1.csv").string());
      Catalog cat;
      cat.add_csv("t0", (dir / "t0.csv").string(), o0);
      cat.add_csv("t1", (dir / "t1.csv").string(), o1);

      oracle::TableMap tm;
      tm["t0"] = oracle::from_frame(table0);
      tm["t1"] = oracle::from_frame(table1);

      bool engine_ok = true, oracle_ok = true;
      Frame got, want;
      try {
        got = collect(p, cat);
      } catch (const Error&) {
        engine_ok = false;
      }
      try {
        want = oracle::oracle_execute(p, tm);
      } catch (const Error&) {
        oracle_ok = false;
      }
      ensure(engine_ok == oracle_ok,
             "seed " + std::to_string(seed) + ": one side threw, the other did not");
      if (!engine_ok) {
        ++both_err;
        continue;
      }
      std::string why;
      ensure(testsupport::frames_equal(got, want, why, 1e-12),
             "seed " + std::to_string(seed) + ": " + why);
    }
    fs::remove_all(dir);
    ensure(both_err < 50, "too many error-only pipelines to be meaningful");
    ensure(ms_since(t0) < 30000.0, "over the thirty second budget");
  });

  criterion(10, "compiled SQL matches the reviewed goldens byte for byte", [] {
    Catalog cat;
    fill_remote_catalog(cat);
    for (const auto& stem : block_stems()) {
      BoundPlan bp = bind(Plan(block_plan(stem)), cat);
      std::string got = emit_pretty(compile(bp)) + "\n";
      std::string want = slurp(repo_path("tests/golden/sql/" + stem + ".sql"));
      ensure(got == want, stem + " diverged from its golden");
    }
    std::string pretty = emit_pretty(compile(bind(Plan(block_plan("02_monthly_counts")), cat)));
    std::vector<std::string> lines;
    std::stringstream ss(pretty);
    for (std::string line; std::getline(ss, line);) lines.push_back(line);
    ensure(lines.size() == 4, "monthly count query is not four clauses");
    ensure(lines[0].rfind("SELECT ", 0) == 0 && lines[1].rfind("FROM ", 0) == 0 &&
               lines[2].rfind("WHERE ", 0) == 0 && lines[2].find(" IN (") != std::string::npos &&
               lines[3].rfind("GROUP BY ", 0) == 0,
           "clause set is not {SELECT, FROM, WHERE...IN, GROUP BY}");
  });

#ifdef VERBFRAME_HAVE_SQLITE3
  criterion(11, "sql engine agrees with the in-memory engine on every sample", [] {
    testsupport::SqliteEngine eng;
    for (const auto& ent : fs::directory_iterator(catalog_dir())) {
      if (ent.path().extension() == ".csv") {
        eng.load_table(ent.path().stem().string(), read_csv(ent.path().string()));
      }
    }
    Catalog remote;
    fill_remote_catalog(remote);

    for (const auto& stem : block_stems()) {
      Frame mine = run_block(stem);
      BoundPlan bp = bind(Plan(block_plan(stem)), remote);
      std::string sql = compile(bp);
      auto rows = eng.query(testsupport::adapt_sql_for_sqlite(sql), bp.schema());
      ensure(rows.size() == mine.row_count(),
             stem + ": row counts differ (" + std::to_string(rows.size()) + " vs " +
                 std::to_string(mine.row_count()) + ")");

      std::vector<std::vector<Value>> engine_rows;
      for (size_t r = 0; r < mine.row_count(); ++r) {
        std::vector<Value> row;
        for (size_t c = 0; c < mine.column_count(); ++c) row.push_back(mine.column(c).cells[r]);
        engine_rows.push_back(std::move(row));
      }

      auto key = [](const std::vector<Value>& row) {
        std::string k;
        for (const auto& v : row) {
          k += v.is_null() ? "\x1e" : value_to_text(v);
          k += '\x1f';
        }
        return k;
      };
      bool ordered = sql.find("ORDER BY") != std::string::npos;
      if (!ordered) {
        auto by_key = [&](const std::vector<Value>& a, const std::vector<Value>& b) {
          return key(a) < key(b);
        };
        std::sort(engine_rows.begin(), engine_rows.end(), by_key);
        std::sort(rows.begin(), rows.end(), by_key);
      }
      for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t c = 0; c < rows[r].size(); ++c) {
          ensure(testsupport::value_close(engine_rows[r][c], rows[r][c], 1e-9),
                 stem + ": cell mismatch at row " + std::to_string(r));
        }
      }
    }
  });
#else
  std::printf("SKIP  11. sql engine agrees with the in-memory engine on every sample\n");
#endif

  criterion(12, "the script corpus parses and every mutation is pinpointed", [&] {
    auto stems = block_stems();
    ensure(stems.size() == 8, "expected 8 sample pipelines");
    for (const auto& stem : stems) {
      Script s = parse_script(slurp(repo_path("tests/corpus/blocks/" + stem + ".vf")));
      ensure(!s.statements.empty(), stem + " parsed to nothing");
    }

    std::vector<fs::path> errors;
    for (const auto& ent : fs::directory_iterator(repo_path("tests/corpus/errors"))) {
      errors.push_back(ent.path());
    }
    std::sort(errors.begin(), errors.end());
    ensure(errors.size() == 20, "expected 20 error scripts");
    for (const auto& path : errors) {
      std::string text = slurp(path.string());
      std::istringstream first(text.substr(0, text.find('\n')));
      std::string hash, keyword, pos, code;
      first >> hash >> keyword >> pos >> code;
      ensure(hash == "#" && keyword == "expect", path.filename().string() + ": bad directive");
      size_t colon = pos.find(':');
      int line = std::stoi(pos.substr(0, colon));
      int column = std::stoi(pos.substr(colon + 1));
      try {
        parse_script(text);
        ensure(false, path.filename().string() + ": parsed without a diagnostic");
      } catch (const CheckFail&) {
        throw;
      } catch (const Error& e) {
        ensure(errc_name(e.code()) == code && e.span().line == line && e.span().column == column,
               path.filename().string() + ": wrong diagnostic " +
                   std::string(errc_name(e.code())) + " at " + std::to_string(e.span().line) +
                   ":" + std::to_string(e.span().column));
      }
    }
    ensure(ms_since(suite_start) < 60000.0, "acceptance run exceeded a minute");
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures;
}
