#pragma once

// Experiment runner: single runs, suites over (scen, agents, w, solver
// variant), and the aggregate statistics printed by the CLI.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "decbs/core.hpp"
#include "decbs/high_level.hpp"
#include "decbs/io.hpp"

namespace decbs::bench {

enum class SolverKind { Cbs, Ecbs, Decbs, Bcbs };

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Cbs:
      return "cbs";
    case SolverKind::Ecbs:
      return "ecbs";
    case SolverKind::Decbs:
      return "decbs";
    case SolverKind::Bcbs:
      return "bcbs";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& name) {
  if (name == "cbs") return SolverKind::Cbs;
  if (name == "ecbs") return SolverKind::Ecbs;
  if (name == "decbs") return SolverKind::Decbs;
  if (name == "bcbs") return SolverKind::Bcbs;
  throw std::invalid_argument("unknown solver '" + name + "' (expected cbs, ecbs, decbs or bcbs)");
}

struct Variant {
  SolverKind solver = SolverKind::Decbs;
  bool bc = false;
  bool tr = false;

  friend auto operator<=>(const Variant&, const Variant&) = default;
};

inline std::string describe(const Variant& v) {
  std::string s = to_string(v.solver);
  if (v.bc) s += "+bc";
  if (v.tr) s += "+tr";
  return s;
}

// "none", "bc", "tr", "bc+tr"
inline std::pair<bool, bool> parse_opts(const std::string& text) {
  if (text == "none" || text.empty()) return {false, false};
  if (text == "bc") return {true, false};
  if (text == "tr") return {false, true};
  if (text == "bc+tr" || text == "tr+bc") return {true, true};
  throw std::invalid_argument("unknown optimization set '" + text + "' (expected none, bc, tr or bc+tr)");
}

/// CBS ignores w. BCBS(w,1) runs w on the high level only.
inline SolverConfig make_config(const Variant& v, SuboptimalityFactor w, double time_limit,
                                std::optional<std::uint64_t> node_limit = std::nullopt) {
  SolverConfig c;
  switch (v.solver) {
    case SolverKind::Cbs:
      c = SolverConfig::cbs();
      break;
    case SolverKind::Ecbs:
      c = SolverConfig::ecbs(w);
      break;
    case SolverKind::Decbs:
      c = SolverConfig::decbs(w);
      break;
    case SolverKind::Bcbs:
      c = SolverConfig::bcbs(w);
      break;
  }
  c.enable_bc = v.bc;
  c.enable_tr = v.tr;
  c.time_limit = time_limit;
  c.node_limit = node_limit;
  return c;
}

struct RunOutcome {
  io::ResultRow row;
  SolveResult result;
};

/// Solves, validates any returned solution, and fills a result row. Unsolved
/// runs record the time limit as their runtime.
inline RunOutcome run_instance(const MapfInstance& instance, const Variant& variant, SuboptimalityFactor w,
                               double time_limit, const std::string& map_name, const std::string& scen_name,
                               std::optional<std::uint64_t> node_limit = std::nullopt) {
  RunOutcome out;
  out.result = solve(instance, make_config(variant, w, time_limit, node_limit));
  auto& row = out.row;
  row.map = map_name;
  row.scen = scen_name;
  row.agents = instance.agent_count();
  row.w = w.value();
  row.solver = to_string(variant.solver);
  row.bc = variant.bc;
  row.tr = variant.tr;
  row.stats = out.result.stats;
  if (out.result.solution) {
    try {
      row.valid = validate_solution(instance, *out.result.solution).empty();
    } catch (const InvalidSolutionError&) {
      row.valid = false;
    }
  }
  if (!row.stats.solved) {
    row.stats.runtime = time_limit;
    row.stats.solution_cost = -1;
  }
  return out;
}

/// Scenario entries in file order, or shuffled by `seed` before the prefix is taken.
inline std::vector<io::ScenarioEntry> order_entries(std::vector<io::ScenarioEntry> entries,
                                                    std::optional<std::uint64_t> seed) {
  if (!seed) return entries;
  std::mt19937_64 rng(*seed);
  // Fisher-Yates with an explicit draw so the order is stable across standard libraries.
  for (std::size_t i = entries.size(); i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(entries[i - 1], entries[j]);
  }
  return entries;
}

struct SuiteSpec {
  std::string map_path;
  std::vector<std::string> scen_paths;
  std::vector<int> agent_counts;
  std::vector<SuboptimalityFactor> ws;
  std::vector<Variant> variants;
  double time_limit = 60.0;
  // CT expansions per run; unlike the time limit this budget is reproducible
  std::optional<std::uint64_t> node_limit;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  void validate() const {
    if (map_path.empty()) throw std::invalid_argument("suite needs a map");
    if (scen_paths.empty()) throw std::invalid_argument("suite needs at least one scenario");
    if (agent_counts.empty()) throw std::invalid_argument("suite needs at least one agent count");
    if (ws.empty()) throw std::invalid_argument("suite needs at least one suboptimality factor");
    if (variants.empty()) throw std::invalid_argument("suite needs at least one solver variant");
    if (!(time_limit > 0)) throw std::invalid_argument("time limit must be positive");
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  }
};

struct SuiteReport {
  std::vector<io::ResultRow> rows;
  std::vector<std::string> skipped;  // instances rejected at construction, with the reason
};

inline std::string file_stem(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = name.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
}

/// Runs the full matrix. Inputs are all loaded before the first run. Rows are
/// ordered by (scen, agents, w, variant) in SuiteSpec order whatever `jobs` is.
template <class Progress = std::nullptr_t>
SuiteReport run_suite(const SuiteSpec& spec, Progress&& progress = nullptr) {
  spec.validate();
  const GridMap map = io::load_map(spec.map_path);
  std::vector<std::vector<io::ScenarioEntry>> scens;
  for (const auto& p : spec.scen_paths) scens.push_back(order_entries(io::load_scen(p), spec.seed));
  const std::string map_name = file_stem(spec.map_path);

  struct Job {
    std::size_t instance;
    SuboptimalityFactor w;
    Variant variant;
    std::string scen_name;
  };
  SuiteReport report;
  std::vector<MapfInstance> instances;
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scens.size(); ++s) {
    for (int n : spec.agent_counts) {
      const std::string scen_name = file_stem(spec.scen_paths[s]);
      try {
        instances.push_back(io::build_instance(map, scens[s], n));
      } catch (const std::exception& e) {
        report.skipped.push_back(scen_name + " with " + std::to_string(n) + " agents: " + e.what());
        continue;
      }
      for (const auto& w : spec.ws) {
        for (const auto& v : spec.variants) jobs.push_back({instances.size() - 1, w, v, scen_name});
      }
    }
  }

  std::vector<io::ResultRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      rows[i] = run_instance(instances[job.instance], job.variant, job.w, spec.time_limit, map_name, job.scen_name,
                             spec.node_limit)
                    .row;
      if constexpr (!std::is_same_v<std::decay_t<Progress>, std::nullptr_t>) progress(i, jobs.size(), rows[i]);
    }
  };
  if (spec.jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < spec.jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  report.rows = std::move(rows);
  return report;
}

// ---------------------------------------------------------------------------
// Aggregation

/// Relative runtime saving of B over A: (A - B) / A.
inline double improvement(double runtime_a, double runtime_b) { return (runtime_a - runtime_b) / runtime_a; }

// Conflict-ordered low-level expansions: FOCAL pops for ECBS, bounded
// best-first pops for DECBS. The shortest-path phase is reported separately.
inline double low_level_nodes(const io::ResultRow& r) {
  return static_cast<double>(r.stats.ll_focal_expanded + r.stats.ll_bfs_expanded);
}

struct ConfigSummary {
  int agents;
  double w;
  Variant variant;
  std::size_t runs = 0;
  std::size_t solved = 0;
  std::size_t invalid = 0;
  double mean_runtime_solved = 0;  // over solved runs; 0 when none solved

  double success_rate() const { return runs ? static_cast<double>(solved) / runs : 0.0; }
};

struct Comparison {
  std::string label;
  std::size_t common = 0;  // instances solved by both
  double mean_ll_a = 0, mean_ll_b = 0;
  double mean_shortest_a = 0, mean_shortest_b = 0;
  double mean_ct_a = 0, mean_ct_b = 0;
  double mean_runtime_a = 0, mean_runtime_b = 0;

  double ll_ratio() const { return mean_ll_a > 0 ? mean_ll_b / mean_ll_a : 0.0; }
  double ct_ratio() const { return mean_ct_a > 0 ? mean_ct_b / mean_ct_a : 0.0; }
  double runtime_improvement() const { return mean_runtime_a > 0 ? improvement(mean_runtime_a, mean_runtime_b) : 0.0; }
};

inline Variant variant_of(const io::ResultRow& r) { return {parse_solver(r.solver), r.bc, r.tr}; }

inline std::vector<ConfigSummary> summarize(const std::vector<io::ResultRow>& rows) {
  std::map<std::tuple<int, double, Variant>, ConfigSummary> groups;
  std::map<std::tuple<int, double, Variant>, double> runtime_sum;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.agents, r.w, variant_of(r));
    auto [it, fresh] = groups.try_emplace(key, ConfigSummary{r.agents, r.w, variant_of(r)});
    auto& g = it->second;
    ++g.runs;
    if (r.stats.solved) {
      ++g.solved;
      runtime_sum[key] += r.stats.runtime;
    }
    if (!r.valid) ++g.invalid;
  }
  std::vector<ConfigSummary> out;
  for (auto& [key, g] : groups) {
    if (g.solved) g.mean_runtime_solved = runtime_sum[key] / static_cast<double>(g.solved);
    out.push_back(g);
  }
  return out;
}

/// A vs B over instances both solved. `filter` selects which rows take part
/// (e.g. one agent count); instances are matched on (map, scen, agents, w).
template <class Filter>
Comparison compare(const std::vector<io::ResultRow>& rows, const Variant& a, const Variant& b, Filter&& filter,
                   std::string label = {}) {
  using Key = std::tuple<std::string, std::string, int, double>;
  std::map<Key, const io::ResultRow*> solved_a, solved_b;
  for (const auto& r : rows) {
    if (!r.stats.solved || !filter(r)) continue;
    const Key key{r.map, r.scen, r.agents, r.w};
    const Variant v = variant_of(r);
    if (v == a) solved_a[key] = &r;
    if (v == b) solved_b[key] = &r;
  }
  Comparison c;
  c.label = label.empty() ? describe(a) + " vs " + describe(b) : std::move(label);
  for (const auto& [key, ra] : solved_a) {
    auto it = solved_b.find(key);
    if (it == solved_b.end()) continue;
    const io::ResultRow* rb = it->second;
    ++c.common;
    c.mean_ll_a += low_level_nodes(*ra);
    c.mean_ll_b += low_level_nodes(*rb);
    c.mean_shortest_a += static_cast<double>(ra->stats.ll_shortest_expanded);
    c.mean_shortest_b += static_cast<double>(rb->stats.ll_shortest_expanded);
    c.mean_ct_a += static_cast<double>(ra->stats.ct_expanded);
    c.mean_ct_b += static_cast<double>(rb->stats.ct_expanded);
    c.mean_runtime_a += ra->stats.runtime;
    c.mean_runtime_b += rb->stats.runtime;
  }
  if (c.common) {
    const double n = static_cast<double>(c.common);
    for (double* v : {&c.mean_ll_a, &c.mean_ll_b, &c.mean_shortest_a, &c.mean_shortest_b, &c.mean_ct_a, &c.mean_ct_b,
                      &c.mean_runtime_a, &c.mean_runtime_b}) {
      *v /= n;
    }
  }
  return c;
}

inline Comparison compare(const std::vector<io::ResultRow>& rows, const Variant& a, const Variant& b) {
  return compare(rows, a, b, [](const io::ResultRow&) { return true; });
}

/// Every ECBS-vs-DECBS pairing present in the rows, per optimization set.
inline std::vector<Comparison> standard_comparisons(const std::vector<io::ResultRow>& rows) {
  std::set<std::pair<bool, bool>> opts;
  std::set<Variant> present;
  for (const auto& r : rows) {
    present.insert(variant_of(r));
    opts.insert({r.bc, r.tr});
  }
  std::vector<Comparison> out;
  for (auto [bc, tr] : opts) {
    const Variant a{SolverKind::Ecbs, bc, tr};
    const Variant b{SolverKind::Decbs, bc, tr};
    if (present.contains(a) && present.contains(b)) out.push_back(compare(rows, a, b));
  }
  return out;
}

inline void print_summary(std::ostream& os, const std::vector<io::ResultRow>& rows) {
  char buf[256];
  os << "agents  w        variant        runs  success  mean_runtime_solved  invalid\n";
  for (const auto& s : summarize(rows)) {
    std::snprintf(buf, sizeof buf, "%-7d %-8.6g %-14s %-5zu %-8.3f %-20.6g %zu\n", s.agents, s.w,
                  describe(s.variant).c_str(), s.runs, s.success_rate(), s.mean_runtime_solved, s.invalid);
    os << buf;
  }
  for (const auto& c : standard_comparisons(rows)) {
    std::snprintf(buf, sizeof buf,
                  "compare %s: common=%zu ll_nodes %.6g -> %.6g (ratio %.3f) ct_expanded %.6g -> %.6g (ratio %.3f) "
                  "runtime %.6g -> %.6g (improvement %.1f%%)\n",
                  c.label.c_str(), c.common, c.mean_ll_a, c.mean_ll_b, c.ll_ratio(), c.mean_ct_a, c.mean_ct_b,
                  c.ct_ratio(), c.mean_runtime_a, c.mean_runtime_b, 100.0 * c.runtime_improvement());
    os << buf;
  }
}

/// Plot-ready per-configuration table.
inline void write_summary_table(std::ostream& os, const std::vector<io::ResultRow>& rows) {
  os << "agents,w,variant,runs,solved,success_rate,mean_runtime_solved,invalid\n";
  char buf[256];
  for (const auto& s : summarize(rows)) {
    std::snprintf(buf, sizeof buf, "%d,%.6g,%s,%zu,%zu,%.6g,%.6g,%zu\n", s.agents, s.w, describe(s.variant).c_str(),
                  s.runs, s.solved, s.success_rate(), s.mean_runtime_solved, s.invalid);
    os << buf;
  }
}

}  // namespace decbs::bench
