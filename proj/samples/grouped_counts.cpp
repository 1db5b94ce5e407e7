// Grouped aggregation from an in-memory frame: stage a frame as CSV text,
// count rows per group, and watch summarise peel the last grouping key.
//
//   ./grouped_counts

#include <cstdio>

#include "verbframe/verbframe.hpp"

using namespace verbframe;

int main() {
  try {
    const char* csv =
        "city,year,riders\n"
        "Aurora,2023,11\n"
        "Aurora,2024,14\n"
        "Boulder,2023,9\n"
        "Aurora,2024,3\n"
        "Boulder,2024,16\n";

    std::string path = "/tmp/verbframe_sample_rides.csv";
    write_csv(read_csv_text(csv, CsvOptions{}), path);

    Catalog cat;
    cat.add_csv("rides", path, CsvOptions{});

    Plan totals = Plan::table("rides")
                      .group_by({"city", "year"})
                      .summarise({Agg{"trips", parse_expr("n()")},
                                  Agg{"riders", parse_expr("sum(riders)")}});

    BoundPlan bound = bind(totals, cat);
    std::printf("grouping after summarise:");
    for (const auto& key : bound.groups()) std::printf(" %s", key.c_str());
    std::printf("\n\n%s", format_frame(collect(totals, cat)).c_str());
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
}
