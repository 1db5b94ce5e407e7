#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "verbframe/parse.hpp"

using namespace verbframe;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::filesystem::path> sorted_dir(const std::string& rel) {
  std::vector<std::filesystem::path> out;
  for (const auto& e :
       std::filesystem::directory_iterator(std::string(VERBFRAME_REPO_DIR) + "/" + rel)) {
    out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Expectation {
  int line = 0;
  int column = 0;
  std::string code;
};

// First line of each error-corpus file: "# expect L:C Code". The parser sees
// the whole file, so positions count the directive line too.
Expectation read_expectation(const std::string& text) {
  std::istringstream first(text.substr(0, text.find('\n')));
  std::string hash, keyword, pos;
  Expectation e;
  first >> hash >> keyword >> pos >> e.code;
  REQUIRE(hash == "#");
  REQUIRE(keyword == "expect");
  size_t colon = pos.find(':');
  REQUIRE(colon != std::string::npos);
  e.line = std::stoi(pos.substr(0, colon));
  e.column = std::stoi(pos.substr(colon + 1));
  return e;
}

}  // namespace

TEST_CASE("every pipeline in the block corpus parses") {
  auto blocks = sorted_dir("tests/corpus/blocks");
  REQUIRE(blocks.size() == 8);
  for (const auto& path : blocks) {
    CAPTURE(path.filename().string());
    Script s = parse_script(slurp(path));
    CHECK_FALSE(s.statements.empty());
  }
}

TEST_CASE("every mutated script fails at its recorded position") {
  auto files = sorted_dir("tests/corpus/errors");
  REQUIRE(files.size() == 20);
  for (const auto& path : files) {
    CAPTURE(path.filename().string());
    std::string text = slurp(path);
    Expectation want = read_expectation(text);
    try {
      parse_script(text);
      FAIL("expected a diagnostic");
    } catch (const Error& e) {
      CHECK(std::string(errc_name(e.code())) == want.code);
      CHECK(e.span().line == want.line);
      CHECK(e.span().column == want.column);
    }
  }
}

TEST_CASE("pipes feed the previous step into the next verb") {
  Script s = parse_script("t %>% filter(a > 1) %>% select(a, b) %>% head()");
  REQUIRE(s.statements.size() == 1);
  const Statement& st = s.statements[0];
  CHECK(st.target.empty());
  CHECK_FALSE(st.collected);

  const auto* h = st.plan.node()->as<plan_node::Head>();
  REQUIRE(h != nullptr);
  CHECK(h->n == 6);
  const auto* sel = h->child->as<plan_node::Select>();
  REQUIRE(sel != nullptr);
  CHECK(sel->cols == std::vector<std::string>{"a", "b"});
  const auto* fil = sel->child->as<plan_node::Filter>();
  REQUIRE(fil != nullptr);
  CHECK(fil->child->as<plan_node::TableRef>()->name == "t");
}

TEST_CASE("the native pipe spelling is interchangeable") {
  std::string a = print_plan(parse_script("t %>% select(x)").statements[0].plan.node());
  std::string b = print_plan(parse_script("t |> select(x)").statements[0].plan.node());
  CHECK(a == b);
}

TEST_CASE("call-style verbs take the frame as their first argument") {
  Script s = parse_script("filter(t, a > 1)");
  const auto* fil = s.statements[0].plan.node()->as<plan_node::Filter>();
  REQUIRE(fil != nullptr);
  CHECK(fil->child->as<plan_node::TableRef>()->name == "t");
}

TEST_CASE("assignment names a pipeline and collect marks it terminal") {
  Script s = parse_script("x <- t %>% filter(a > 1) %>% collect()");
  const Statement& st = s.statements[0];
  CHECK(st.target == "x");
  CHECK(st.collected);
  // collect is a statement property, not a plan node.
  CHECK(st.plan.node()->as<plan_node::Filter>() != nullptr);
}

TEST_CASE("statements may span lines inside parens or after operators") {
  Script s = parse_script(
      "x <- t %>%\n"
      "  filter(a > 1 &\n"
      "         b < 2) %>%\n"
      "  select(a)\n");
  CHECK(s.statements.size() == 1);
  CHECK(s.statements[0].plan.node()->as<plan_node::Select>() != nullptr);

  SECTION("a newline otherwise ends the statement") {
    Script two = parse_script("t %>% head()\nu %>% head()\n");
    CHECK(two.statements.size() == 2);
  }

  SECTION("comments vanish anywhere") {
    Script c = parse_script("# leading note\nt %>% head() # trailing note\n");
    CHECK(c.statements.size() == 1);
  }
}

TEST_CASE("literal spellings") {
  Script s = parse_script(
      "t %>% mutate(a = 1) %>% mutate(b = 2.5) %>% mutate(c = 'x') %>% mutate(d = \"y\") %>% "
      "mutate(e = TRUE) %>% mutate(f = FALSE)");
  std::vector<Value> seen;
  PlanPtr p = s.statements[0].plan.node();
  while (const auto* m = p->as<plan_node::Mutate>()) {
    seen.push_back(m->expr->as<Lit>()->value);
    p = m->child;
  }
  std::reverse(seen.begin(), seen.end());
  REQUIRE(seen.size() == 6);
  CHECK(seen[0] == Value::int_(1));
  CHECK(seen[1] == Value::float_(2.5));
  CHECK(seen[2] == Value::str("x"));
  CHECK(seen[3] == Value::str("y"));
  CHECK(seen[4] == Value::boolean(true));
  CHECK(seen[5] == Value::boolean(false));
}

TEST_CASE("operator precedence matches the printed form") {
  CHECK(print_expr(parse_expr("1 + 2 * 3")) == "1 + 2 * 3");
  CHECK(print_expr(parse_expr("(1 + 2) * 3")) == "(1 + 2) * 3");
  CHECK(print_expr(parse_expr("-a + b")) == "-a + b");
  CHECK(print_expr(parse_expr("!(a > 1 & b < 2)")) == "!(a > 1 & b < 2)");
  CHECK(print_expr(parse_expr("a > 1 & b < 2 | c == 3")) == "a > 1 & b < 2 | c == 3");
  CHECK(print_expr(parse_expr("a %in% c(1, 2)")) == "a %in% c(1, 2)");
}

TEST_CASE("printing a parsed script re-parses to the same text") {
  for (const auto& path : sorted_dir("tests/corpus/blocks")) {
    CAPTURE(path.filename().string());
    std::string once = print_script(parse_script(slurp(path)));
    std::string twice = print_script(parse_script(once));
    CHECK(once == twice);
  }
}

TEST_CASE("aliases inline into later statements") {
  Script s = parse_script(
      "mid <- t %>% filter(a > 1)\n"
      "mid %>% head()\n");
  std::map<std::string, PlanPtr> aliases;
  PlanPtr first = substitute_tables(s.statements[0].plan.node(), aliases);
  aliases["mid"] = first;
  PlanPtr second = substitute_tables(s.statements[1].plan.node(), aliases);

  const auto* h = second->as<plan_node::Head>();
  REQUIRE(h != nullptr);
  CHECK(h->child.get() == first.get());

  SECTION("self-redefinition chains onto the old plan") {
    Script r = parse_script(
        "x <- t %>% head()\n"
        "x <- x %>% filter(a > 1)\n");
    std::map<std::string, PlanPtr> a2;
    PlanPtr p1 = substitute_tables(r.statements[0].plan.node(), a2);
    a2["x"] = p1;
    PlanPtr p2 = substitute_tables(r.statements[1].plan.node(), a2);
    CHECK(p2->as<plan_node::Filter>()->child.get() == p1.get());
  }
}

TEST_CASE("join syntax binds quoted key pairs") {
  Script s = parse_script("left_join(a, b, by=c(\"x\" = \"y\"))");
  const auto* j = s.statements[0].plan.node()->as<plan_node::LeftJoin>();
  REQUIRE(j != nullptr);
  REQUIRE(j->by.size() == 1);
  CHECK(j->by[0].left == "x");
  CHECK(j->by[0].right == "y");
  CHECK(j->left->as<plan_node::TableRef>()->name == "a");
  CHECK(j->right->as<plan_node::TableRef>()->name == "b");

  SECTION("a lone name joins on itself") {
    Script same = parse_script("left_join(a, b, by=c(\"k\"))");
    const auto* js = same.statements[0].plan.node()->as<plan_node::LeftJoin>();
    REQUIRE(js->by.size() == 1);
    CHECK(js->by[0].left == "k");
    CHECK(js->by[0].right == "k");
  }
}

TEST_CASE("desc wraps a sort key") {
  Script s = parse_script("t %>% arrange(desc(count), Year)");
  const auto* a = s.statements[0].plan.node()->as<plan_node::Arrange>();
  REQUIRE(a != nullptr);
  REQUIRE(a->keys.size() == 2);
  CHECK(a->keys[0].dir == SortDir::Desc);
  CHECK(a->keys[1].dir == SortDir::Asc);
}

TEST_CASE("R constructs outside the subset are called out as reserved") {
  for (const char* text : {
           "library(dplyr)",
           "require(dplyr)",
           "x <- tbl(db, \"t\")",
           "install.packages(\"dplyr\")",
           "xyplot(count ~ Date, data=airportcounts)",
       }) {
    CAPTURE(text);
    try {
      parse_script(text);
      FAIL("expected reserved diagnostic");
    } catch (const Error& e) {
      CHECK(e.code() == errc::reserved_error);
    }
  }
}

TEST_CASE("column names may collide with verb names when used as atoms") {
  // "count" is both a paper column and a plausible verb-like name.
  Script s = parse_script("t %>% filter(count > 500)");
  const auto* fil = s.statements[0].plan.node()->as<plan_node::Filter>();
  REQUIRE(fil != nullptr);
  CHECK(fil->pred->as<Binary>()->lhs->as<ColRef>()->name == "count");
}
