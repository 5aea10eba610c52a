// mapf_bench: single solves, benchmark suites and result summaries.
//
//   mapf_bench solve --map m.map --scen s.scen --agents 10 --w 1.1 --solver decbs [--bc] [--tr]
//   mapf_bench suite --map m.map --scen-dir scens/ --agents 60,75 --w 1.1 --solvers ecbs,decbs --out r.csv
//   mapf_bench summarize r.csv
//
// Exit status: 0 solved / ok, 1 unsolved, 2 usage or input error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "decbs/bench.hpp"

namespace {

using namespace decbs;

constexpr int kExitUsage = 2;

std::vector<std::string> scen_files_in(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".scen") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::invalid_argument("no .scen files in " + dir);
  return out;
}

struct SolveArgs {
  std::string map, scen, w = "1", solver = "decbs", stats_out;
  int agents = 0;
  bool bc = false, tr = false, no_runtime = false;
  double time_limit = 60;
  std::optional<std::uint64_t> seed, node_limit;
};

int run_solve(const SolveArgs& a) {
  const bench::Variant variant{bench::parse_solver(a.solver), a.bc, a.tr};
  const auto w = SuboptimalityFactor::parse(a.w);
  if (!(a.time_limit > 0)) throw std::invalid_argument("time limit must be positive");
  const GridMap map = io::load_map(a.map);
  const auto entries = bench::order_entries(io::load_scen(a.scen), a.seed);
  const MapfInstance instance = io::build_instance(map, entries, a.agents);

  auto out = bench::run_instance(instance, variant, w, a.time_limit, bench::file_stem(a.map), bench::file_stem(a.scen),
                                 a.node_limit);
  const io::CsvOptions opts{!a.no_runtime};
  io::write_results({out.row}, std::cout, opts);
  if (!a.stats_out.empty()) io::write_results({out.row}, a.stats_out, opts);
  if (out.row.stats.solved && !out.row.valid) {
    std::cerr << "error: solver returned an invalid solution\n";
    return 1;
  }
  std::cerr << (out.row.stats.solved ? "solved" : "unsolved") << " (" << to_string(out.result.status) << ")\n";
  return out.row.stats.solved ? 0 : 1;
}

struct SuiteArgs {
  std::string map, scen_dir, out, summary_table;
  std::vector<std::string> scens, ws{"1.1"}, solvers{"ecbs", "decbs"}, opts{"none"};
  std::vector<int> agents;
  double time_limit = 60;
  std::optional<std::uint64_t> seed, node_limit;
  int jobs = 1;
  bool no_runtime = false, quiet = false;
};

int run_suite_cmd(const SuiteArgs& a) {
  bench::SuiteSpec spec;
  spec.map_path = a.map;
  spec.scen_paths = a.scens;
  if (!a.scen_dir.empty()) {
    auto more = scen_files_in(a.scen_dir);
    spec.scen_paths.insert(spec.scen_paths.end(), more.begin(), more.end());
  }
  spec.agent_counts = a.agents;
  for (const auto& w : a.ws) spec.ws.push_back(SuboptimalityFactor::parse(w));
  for (const auto& s : a.solvers) {
    for (const auto& o : a.opts) {
      auto [bc, tr] = bench::parse_opts(o);
      spec.variants.push_back({bench::parse_solver(s), bc, tr});
    }
  }
  spec.time_limit = a.time_limit;
  spec.node_limit = a.node_limit;
  spec.seed = a.seed;
  spec.jobs = a.jobs;

  auto report = bench::run_suite(spec, [&](std::size_t i, std::size_t n, const io::ResultRow& r) {
    if (!a.quiet) {
      std::cerr << "[" << i + 1 << "/" << n << "] " << r.scen << " n=" << r.agents << " w=" << r.w << " "
                << r.solver << (r.bc ? "+bc" : "") << (r.tr ? "+tr" : "") << (r.stats.solved ? " solved" : " unsolved")
                << "\n";
    }
  });
  for (const auto& s : report.skipped) std::cerr << "skipped: " << s << "\n";

  const io::CsvOptions opts{!a.no_runtime};
  if (a.out.empty()) {
    io::write_results(report.rows, std::cout, opts);
  } else {
    io::write_results(report.rows, a.out, opts);
  }
  if (!a.summary_table.empty()) {
    std::ofstream f(a.summary_table);
    if (!f) throw io::IoError("cannot write " + a.summary_table);
    bench::write_summary_table(f, report.rows);
  }
  std::ostream& sink = a.out.empty() ? std::cerr : std::cout;
  if (spec.seed) sink << "instances: seeded shuffle of scen entries (seed " << *spec.seed << "), first N taken\n";
  else sink << "instances: first N scen entries\n";
  bench::print_summary(sink, report.rows);
  const bool any_invalid = std::any_of(report.rows.begin(), report.rows.end(),
                                       [](const io::ResultRow& r) { return r.stats.solved && !r.valid; });
  return any_invalid ? 1 : 0;
}

int run_summarize(const std::string& path, const std::string& table) {
  const auto rows = io::read_results(path);
  if (table.empty()) {
    bench::print_summary(std::cout, rows);
  } else {
    std::ofstream f(table);
    if (!f) throw io::IoError("cannot write " + table);
    bench::write_summary_table(f, rows);
    bench::print_summary(std::cout, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded-suboptimal MAPF solvers and benchmark runner"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "solve one instance and print a result row");
  solve_cmd->add_option("--map", sa.map, "MovingAI .map file")->required();
  solve_cmd->add_option("--scen", sa.scen, "MovingAI .scen file")->required();
  solve_cmd->add_option("--agents", sa.agents, "number of agents (first N entries)")->required()->check(CLI::PositiveNumber);
  solve_cmd->add_option("--w", sa.w, "suboptimality factor (>= 1)")->capture_default_str();
  solve_cmd->add_option("--solver", sa.solver, "cbs, ecbs, decbs or bcbs")->capture_default_str();
  solve_cmd->add_flag("--bc", sa.bc, "bypass conflicts");
  solve_cmd->add_flag("--tr", sa.tr, "target reasoning");
  solve_cmd->add_option("--time-limit", sa.time_limit, "seconds")->capture_default_str();
  solve_cmd->add_option("--node-limit", sa.node_limit, "CT expansions before giving up");
  solve_cmd->add_option("--seed", sa.seed, "shuffle scen entries before taking the first N");
  solve_cmd->add_option("--stats-out", sa.stats_out, "also write the row to this file");
  solve_cmd->add_flag("--no-runtime", sa.no_runtime, "omit the runtime column");

  SuiteArgs su;
  auto* suite_cmd = app.add_subcommand("suite", "run a benchmark matrix");
  suite_cmd->add_option("--map", su.map, "MovingAI .map file")->required();
  suite_cmd->add_option("--scen", su.scens, "scen files");
  suite_cmd->add_option("--scen-dir", su.scen_dir, "directory of .scen files");
  suite_cmd->add_option("--agents", su.agents, "agent counts")->required()->delimiter(',');
  suite_cmd->add_option("--w", su.ws, "suboptimality factors")->delimiter(',')->capture_default_str();
  suite_cmd->add_option("--solvers", su.solvers, "solvers")->delimiter(',')->capture_default_str();
  suite_cmd->add_option("--opts", su.opts, "optimization sets: none, bc, tr, bc+tr")->delimiter(',')->capture_default_str();
  suite_cmd->add_option("--time-limit", su.time_limit, "seconds per run")->capture_default_str();
  suite_cmd->add_option("--node-limit", su.node_limit, "CT expansions per run before giving up");
  suite_cmd->add_option("--seed", su.seed, "shuffle scen entries before taking the first N");
  suite_cmd->add_option("--jobs", su.jobs, "parallel runs")->capture_default_str();
  suite_cmd->add_option("--out", su.out, "results file (stdout if omitted)");
  suite_cmd->add_option("--summary-table", su.summary_table, "per-configuration table for plotting");
  suite_cmd->add_flag("--no-runtime", su.no_runtime, "omit the runtime column");
  suite_cmd->add_flag("--quiet", su.quiet, "no progress lines");

  std::string results_path, table_path;
  auto* sum_cmd = app.add_subcommand("summarize", "summarize a results file");
  sum_cmd->add_option("results", results_path, "results file")->required();
  sum_cmd->add_option("--table", table_path, "write a per-configuration table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*solve_cmd) return run_solve(sa);
    if (*suite_cmd) {
      if (su.scens.empty() && su.scen_dir.empty()) throw std::invalid_argument("suite needs --scen or --scen-dir");
      return run_suite_cmd(su);
    }
    if (*sum_cmd) return run_summarize(results_path, table_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
