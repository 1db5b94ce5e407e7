#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "support/sql_checker.hpp"
#include "support/sqlite_harness.hpp"
#include "support/synth_data.hpp"
#include "verbframe/verbframe.hpp"

using namespace verbframe;
namespace fs = std::filesystem;

namespace {

std::string repo_path(const std::string& rel) {
  return std::string(VERBFRAME_REPO_DIR) + "/" + rel;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Schemas for the warehouse the sample pipelines target. Compilation needs
// column types, not rows.
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
  // extra table for dialect corners the flight schemas lack
  cat.add_remote("events", "events",
                 Schema({{"id", I}, {"label", S}, {"flag", Dtype::Bool}, {"score", F}}));
}

// A script may build up aliases; the query of interest is its last statement
// with all aliases inlined.
PlanPtr last_resolved_plan(const std::string& script_text) {
  Script script = parse_script(script_text);
  std::map<std::string, PlanPtr> aliases;
  PlanPtr last;
  for (const auto& st : script.statements) {
    PlanPtr resolved = substitute_tables(st.plan.node(), aliases);
    if (!st.target.empty()) aliases[st.target] = resolved;
    last = resolved;
  }
  REQUIRE(last != nullptr);
  return last;
}

std::vector<std::string> block_stems() {
  std::vector<std::string> stems;
  for (const auto& ent : fs::directory_iterator(repo_path("tests/corpus/blocks"))) {
    stems.push_back(ent.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

std::string compile_block(const std::string& stem, bool naive = false) {
  Catalog cat;
  fill_remote_catalog(cat);
  PlanPtr plan = last_resolved_plan(slurp(repo_path("tests/corpus/blocks/" + stem + ".vf")));
  BoundPlan bp = bind(Plan(plan), cat);
  return naive ? compile_naive(bp) : compile(bp);
}

std::string compile_pipeline(const std::string& text, bool naive = false) {
  Catalog cat;
  fill_remote_catalog(cat);
  BoundPlan bp = bind(Plan(last_resolved_plan(text)), cat);
  return naive ? compile_naive(bp) : compile(bp);
}

}  // namespace

TEST_CASE("sample pipelines compile to pinned SQL") {
  auto stems = block_stems();
  REQUIRE(stems.size() == 8);
  for (const auto& stem : stems) {
    INFO(stem);
    std::string golden = slurp(repo_path("tests/golden/sql/" + stem + ".sql"));
    CHECK(emit_pretty(compile_block(stem)) + "\n" == golden);
  }
}

TEST_CASE("monthly count query merges into exactly four clauses") {
  std::string pretty = emit_pretty(compile_block("02_monthly_counts"));
  std::vector<std::string> lines;
  std::stringstream ss(pretty);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].rfind("SELECT ", 0) == 0);
  CHECK(lines[1].rfind("FROM ", 0) == 0);
  CHECK(lines[2].rfind("WHERE ", 0) == 0);
  CHECK(lines[2].find(" IN (") != std::string::npos);
  CHECK(lines[3].rfind("GROUP BY ", 0) == 0);
  // one flat statement: no subquery, and none of the unused clauses
  CHECK(pretty.find("(SELECT") == std::string::npos);
  for (const char* absent : {"HAVING", "ORDER BY", "LIMIT", "JOIN", "DISTINCT"}) {
    CHECK(pretty.find(absent) == std::string::npos);
  }
}

TEST_CASE("identifiers are double-quoted and strings escape quotes by doubling") {
  std::string sql = compile_pipeline("events %>% filter(label == \"o'brien\")");
  CHECK(sql == "SELECT \"id\", \"label\", \"flag\", \"score\" FROM \"events\""
               " WHERE \"label\" = 'o''brien'");
}

TEST_CASE("membership lists are tight and select lists are spaced") {
  std::string sql = compile_pipeline(
      "events %>% filter(label %in% c(\"a\", \"b\", \"c\")) %>% select(id, label)");
  CHECK(sql.find("IN ('a','b','c')") != std::string::npos);
  CHECK(sql.find("SELECT \"id\", \"label\"") != std::string::npos);

  std::string ints = compile_pipeline("events %>% filter(id %in% c(1, 2, 3))");
  CHECK(ints.find("IN (1,2,3)") != std::string::npos);
}

TEST_CASE("date construction folds constants and casts anything else") {
  // constant argument: folded to a DATE literal, loose widths normalized
  std::string folded = compile_pipeline("events %>% mutate(d = ymd(\"1987-3-5\"))");
  CHECK(folded.find("DATE '1987-03-05' AS \"d\"") != std::string::npos);

  // constant paste: still foldable
  std::string pasted =
      compile_pipeline("events %>% mutate(d = ymd(paste(\"1987\", \"10\", \"01\", sep = \"-\")))");
  CHECK(pasted.find("DATE '1987-10-01' AS \"d\"") != std::string::npos);

  // column argument: CONCAT under a CAST, separator interleaved
  std::string cast = compile_pipeline(
      "events %>% mutate(d = ymd(paste(id, \"01\", \"01\", sep = \"-\")))");
  CHECK(cast.find("CAST(CONCAT(\"id\", '-', '01', '-', '01') AS DATE) AS \"d\"") !=
        std::string::npos);
}

TEST_CASE("ordering always states null placement") {
  std::string asc = compile_pipeline("events %>% arrange(score)");
  CHECK(asc.find("ORDER BY \"score\" ASC NULLS LAST") != std::string::npos);

  std::string desc = compile_pipeline("events %>% arrange(desc(score), id)");
  CHECK(desc.find("ORDER BY \"score\" DESC NULLS FIRST, \"id\" ASC NULLS LAST") !=
        std::string::npos);
}

TEST_CASE("filters over aggregates become alias-free HAVING clauses") {
  std::string sql = compile_pipeline(
      "events %>% group_by(label) %>% summarise(total = n()) %>% filter(total > 500)");
  CHECK(sql.find("HAVING COUNT(*) > 500") != std::string::npos);
  CHECK(sql.find("HAVING \"total\"") == std::string::npos);

  std::string mean_sql = compile_pipeline(
      "events %>% group_by(label) %>% summarise(m = mean(score)) %>% filter(m > 1.5)");
  CHECK(mean_sql.find("HAVING AVG(\"score\") > 1.5") != std::string::npos);
}

TEST_CASE("ordering by an aggregate substitutes the aggregate expression") {
  std::string sql = compile_pipeline(
      "events %>% group_by(label) %>% summarise(total = n()) %>% arrange(desc(total))");
  CHECK(sql.find("ORDER BY COUNT(*) DESC NULLS FIRST") != std::string::npos);
  CHECK(sql.find("ORDER BY \"total\"") == std::string::npos);
}

TEST_CASE("distinct compiles to SELECT DISTINCT") {
  std::string sql = compile_pipeline("events %>% select(label) %>% distinct()");
  CHECK(sql == "SELECT DISTINCT \"label\" FROM \"events\"");
}

TEST_CASE("boolean columns and literals survive compilation") {
  std::string bare = compile_pipeline("events %>% filter(flag)");
  CHECK(bare.find("WHERE \"flag\"") != std::string::npos);

  std::string lit = compile_pipeline("events %>% filter(flag == TRUE)");
  CHECK(lit.find("WHERE \"flag\" = TRUE") != std::string::npos);

  std::string negated = compile_pipeline("events %>% filter(!(score > 1.5 & flag))");
  CHECK(negated.find("WHERE NOT (\"score\" > 1.5 AND \"flag\")") != std::string::npos);
}

TEST_CASE("arithmetic keeps precedence with minimal inner parentheses") {
  // compound select items are parenthesized as a whole; inside, parens appear
  // only where precedence demands them
  std::string sql = compile_pipeline("events %>% mutate(z = (id + 1) * 2 - id / 3)");
  CHECK(sql.find("((\"id\" + 1) * 2 - \"id\" / 3) AS \"z\"") != std::string::npos);
  CHECK(sql.find("(2)") == std::string::npos);
}

TEST_CASE("every generated statement parses under the dialect grammar") {
  // the pinned goldens, both compiler modes for every sample pipeline, and
  // the pretty form all stay inside the emitted subset
  for (const auto& stem : block_stems()) {
    INFO(stem);
    CHECK_NOTHROW(testsupport::check_sql_parses(slurp(repo_path("tests/golden/sql/" + stem + ".sql"))));
    CHECK_NOTHROW(testsupport::check_sql_parses(compile_block(stem)));
    CHECK_NOTHROW(testsupport::check_sql_parses(compile_block(stem, /*naive=*/true)));
    CHECK_NOTHROW(testsupport::check_sql_parses(emit_pretty(compile_block(stem))));
  }

  const char* extra[] = {
      "events %>% filter(!(flag | score >= -1.5) & id != 0)",
      "events %>% mutate(neg = -id) %>% filter(neg < 0 | label %in% c(\"x\"))",
      "events %>% select(id) %>% distinct() %>% arrange(desc(id)) %>% head(3)",
      "events %>% group_by(flag) %>% summarise(hi = max(score), lo = min(score))",
      "events %>% mutate(d = ymd(paste(id, id, id, sep = \"-\")))",
  };
  for (const char* text : extra) {
    INFO(text);
    CHECK_NOTHROW(testsupport::check_sql_parses(compile_pipeline(text)));
    CHECK_NOTHROW(testsupport::check_sql_parses(compile_pipeline(text, /*naive=*/true)));
  }

  // the checker itself rejects text outside the dialect
  CHECK_THROWS(testsupport::check_sql_parses("SELECT id FROM events"));          // bare idents
  CHECK_THROWS(testsupport::check_sql_parses("select \"id\" from \"events\""));  // lowercase
  CHECK_THROWS(testsupport::check_sql_parses("SELECT \"id\" FROM \"t\" ORDER BY \"id\""));
  CHECK_THROWS(testsupport::check_sql_parses("SELECT \"id\" FROM \"t\"; DROP TABLE \"t\""));
}

TEST_CASE("compilation is deterministic and naive nesting differs") {
  for (const auto& stem : block_stems()) {
    INFO(stem);
    std::string first = compile_block(stem);
    std::string second = compile_block(stem);
    CHECK(first == second);
    CHECK(emit_pretty(first) == emit_pretty(second));
    CHECK(compile_block(stem, true) == compile_block(stem, true));
  }
  // naive mode gives every verb its own subquery
  std::string naive = compile_block("02_monthly_counts", true);
  CHECK(naive.find("(SELECT") != std::string::npos);
  CHECK(naive != compile_block("02_monthly_counts"));
}

#ifdef VERBFRAME_HAVE_SQLITE3

namespace {

// Rows keyed to the bound schema, rendered to comparable text.
std::vector<std::string> render_rows(const std::vector<std::vector<Value>>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    std::string line;
    for (const auto& v : row) {
      line += v.is_null() ? "\x1e" : value_to_text(v);
      line += '\x1f';
    }
    out.push_back(std::move(line));
  }
  return out;
}

void load_warehouse(testsupport::SqliteEngine& eng) {
  for (const char* name : {"airports", "carriers", "delays", "airportcounts"}) {
    eng.load_table(name, read_csv(repo_path("data/" + std::string(name) + ".csv")));
  }
  eng.load_table("ontime", testsupport::synth_ontime());
  eng.load_table("singleplane", testsupport::synth_singleplane());
}

}  // namespace

TEST_CASE("merged SQL and naive SQL return the same rows") {
  testsupport::SqliteEngine eng;
  load_warehouse(eng);

  Catalog cat;
  fill_remote_catalog(cat);

  for (const auto& stem : block_stems()) {
    INFO(stem);
    PlanPtr plan = last_resolved_plan(slurp(repo_path("tests/corpus/blocks/" + stem + ".vf")));
    BoundPlan bp = bind(Plan(plan), cat);
    auto merged_rows =
        eng.query(testsupport::adapt_sql_for_sqlite(compile(bp)), bp.schema());
    auto naive_rows =
        eng.query(testsupport::adapt_sql_for_sqlite(compile_naive(bp)), bp.schema());

    auto merged = render_rows(merged_rows);
    auto naive = render_rows(naive_rows);
    REQUIRE(merged.size() == naive.size());

    std::string sql = compile(bp);
    bool ordered = sql.find("ORDER BY") != std::string::npos;
    if (!ordered) {
      std::sort(merged.begin(), merged.end());
      std::sort(naive.begin(), naive.end());
    }
    CHECK(merged == naive);
  }
}

#else

TEST_CASE("merged SQL and naive SQL return the same rows") {
  SKIP("sqlite3 not available");
}

#endif
