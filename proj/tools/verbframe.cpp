#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "verbframe/verbframe.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  bool emit_sql = false;
  std::string catalog_dir;
  std::string expr_text;
  std::string script_path;
  size_t max_print = 6;
  std::string out_path;
};

std::string read_script_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) verbframe::fail(verbframe::errc::io_error, "cannot read script '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void load_catalog(const std::string& dir, verbframe::Catalog& cat) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    verbframe::fail(verbframe::errc::io_error, "catalog '" + dir + "' is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) cat.add_csv(p.stem().string(), p.string());
}

int run(const Options& opt) {
  verbframe::Catalog cat;
  load_catalog(opt.catalog_dir, cat);
  std::string text = opt.expr_text.empty() ? read_script_file(opt.script_path) : opt.expr_text;

  verbframe::Script script = verbframe::parse_script(text);

  // Aliases bind to fully resolved plans, so later statements inline them.
  std::map<std::string, verbframe::PlanPtr> aliases;
  std::string output;
  verbframe::PlanPtr last;
  bool emitted = false;
  auto emit_sql_for = [&](const verbframe::PlanPtr& plan) {
    verbframe::BoundPlan bp = verbframe::bind(verbframe::Plan(plan), cat);
    if (!output.empty()) output += "\n";
    output += verbframe::emit_pretty(verbframe::compile(bp));
    if (output.back() != '\n') output += "\n";
    emitted = true;
  };
  for (const verbframe::Statement& st : script.statements) {
    verbframe::PlanPtr resolved = verbframe::substitute_tables(st.plan.node(), aliases);
    if (!st.target.empty()) aliases[st.target] = resolved;
    last = resolved;

    bool bare = st.target.empty();
    if (!opt.emit_sql) {
      if (bare) {
        verbframe::Frame f = verbframe::collect(verbframe::Plan(resolved), cat);
        if (!output.empty()) output += "\n";
        output += verbframe::format_frame(f, opt.max_print);
      } else if (st.collected) {
        (void)verbframe::collect(verbframe::Plan(resolved), cat);
      }
    } else if (bare) {
      emit_sql_for(resolved);
    }
  }
  // A script of pure assignments still has a query of interest: its last one.
  if (opt.emit_sql && !emitted && last) emit_sql_for(last);

  if (opt.out_path.empty()) {
    std::cout << output;
  } else {
    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out) verbframe::fail(verbframe::errc::io_error, "cannot write '" + opt.out_path + "'");
    out << output;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verbframe: run verb pipelines over CSV tables or emit SQL"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--catalog", opt.catalog_dir, "directory of .csv tables")->required();
    sub->add_option("-e,--expr", opt.expr_text, "inline pipeline text");
    sub->add_option("script", opt.script_path, "pipeline script file");
    sub->add_option("--max-print", opt.max_print, "rows printed per frame");
    sub->add_option("--out", opt.out_path, "write output to file instead of stdout");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "execute pipelines in memory");
  CLI::App* sql_cmd = app.add_subcommand("emit-sql", "compile pipelines to SQL");
  add_common(run_cmd);
  add_common(sql_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  opt.emit_sql = sql_cmd->parsed();

  if (opt.expr_text.empty() && opt.script_path.empty()) {
    std::cerr << "error: provide a script file or -e <text>\n";
    return 2;
  }

  try {
    return run(opt);
  } catch (const verbframe::Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == verbframe::errc::io_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
