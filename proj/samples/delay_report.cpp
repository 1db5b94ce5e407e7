// Builds a report over the bundled fixture catalog with the fluent plan API.
// Nothing is read until collect(); the same plan also prints as SQL.
//
//   ./delay_report [catalog-dir]   (default: data)

#include <cstdio>
#include <filesystem>
#include <string>

#include "verbframe/verbframe.hpp"

using namespace verbframe;

static void load_catalog(const std::string& dir, Catalog& cat) {
  for (const auto& ent : std::filesystem::directory_iterator(dir)) {
    if (ent.path().extension() == ".csv") {
      cat.add_csv(ent.path().stem().string(), ent.path().string(), CsvOptions{});
    }
  }
}

int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "data";
  try {
    Catalog cat;
    load_catalog(dir, cat);

    Plan report = Plan::table("delays")
                      .filter(parse_expr("meandelay > 50"))
                      .mutate("Date", parse_expr("ymd(paste(Year, Month, DayofMonth, sep = \"-\"))"))
                      .select({"Date", "UniqueCarrier", "meandelay", "count"})
                      .arrange({SortKey{Expr::column("meandelay"), SortDir::Desc}});

    std::printf("plan:\n%s\n", print_plan(report.node()).c_str());
    std::printf("\nsql:\n%s\n", emit_pretty(compile(bind(report, cat))).c_str());
    std::printf("\nreads before collect: %lld\n", (long long)cat.access_count());

    Frame result = collect(report, cat);
    std::printf("reads after collect:  %lld\n\n%s", (long long)cat.access_count(),
                format_frame(result).c_str());
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
}
