// Acceptance run: one PASS/FAIL line per criterion.
//
// Exact property criteria (optimality, bounds, lower bounds, min-conflict,
// root-LB dominance, validator gate, determinism) decide the exit status.
// The desk-scale directional criteria (node reduction, runtime, strict root-LB
// share) print their verdict and measurements but do not, since they depend on
// a stand-in map, tie-breaking and hardware.
//
//   acceptance [--no-desk] [--jobs N] [--out results.csv]

#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "decbs/bench.hpp"
#include "decbs/oracle.hpp"
#include "generators.hpp"

using namespace decbs;
using namespace decbs::bench;

namespace {

// Tolerances and sizes.
constexpr int kOracleInstances = 200;
constexpr double kOracleSuiteSeconds = 120.0;
constexpr int kLbQueries = 1000;
constexpr int kMinConflictQueries = 200;
constexpr double kLlRatioMax = 0.80;
constexpr double kCtRatioMax = 1.00;
constexpr double kStrictRootShareMin = 0.10;
constexpr double kReferenceRuntimeImprovement = 0.235;
constexpr double kPerSolveGuardSeconds = 30.0;
const std::vector<int> kDeskAgents = {60, 75, 90};
constexpr int kDeskScens = 25;
constexpr double kDeskTimeLimit = 60.0;
constexpr std::uint64_t kDeterminismNodeLimit = 2000;

struct Verdicts {
  int exact_failures = 0;
  int directional_failures = 0;

  void report(bool exact, bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << (exact ? "" : " [directional]") << std::endl;
    if (!ok) ++(exact ? exact_failures : directional_failures);
  }
};

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct OracleCase {
  MapfInstance instance;
  int optimum;
};

std::vector<OracleCase> oracle_instances() {
  std::mt19937 rng(20260101);
  std::vector<OracleCase> out;
  while (static_cast<int>(out.size()) < kOracleInstances) {
    const int w = gen::uniform(rng, 3, 6);
    const int h = gen::uniform(rng, 3, 6);
    const double density = 0.05 * gen::uniform(rng, 0, 4);
    auto inst = gen::random_instance(rng, w, h, density, gen::uniform(rng, 2, 3));
    const auto truth = oracle::joint_state_astar(inst);
    if (!truth) continue;
    out.push_back({std::move(inst), static_cast<int>(truth->flowtime)});
  }
  return out;
}

bool valid(const MapfInstance& inst, const Solution& sol) {
  try {
    return validate_solution(inst, sol).empty();
  } catch (const InvalidSolutionError&) {
    return false;
  }
}

SolverConfig guarded(SolverConfig c) {
  c.time_limit = kPerSolveGuardSeconds;
  return c;
}

struct Gate {
  std::size_t solutions = 0;
  std::size_t invalid = 0;
  void check(bool ok) {
    ++solutions;
    if (!ok) ++invalid;
  }
};

void optimality_suite(const std::vector<OracleCase>& cases, Verdicts& v, Gate& gate) {
  const auto t0 = std::chrono::steady_clock::now();
  int exact = 0;
  for (const auto& c : cases) {
    auto r = solve(c.instance, guarded(SolverConfig::cbs()));
    if (!r.solution) continue;
    gate.check(valid(c.instance, *r.solution));
    if (flowtime(*r.solution) == c.optimum) ++exact;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.report(true, exact == static_cast<int>(cases.size()) && secs < kOracleSuiteSeconds, "optimality oracle suite",
           fmt("CBS flowtime equals joint A* on %.0f/%.0f instances in %.2fs (limit %.0fs)", exact,
               static_cast<double>(cases.size()), secs, kOracleSuiteSeconds));
}

void bound_and_root_suite(const std::vector<OracleCase>& cases, Verdicts& v, Gate& gate) {
  const std::vector<SuboptimalityFactor> ws = {SuboptimalityFactor::parse("1.05"), SuboptimalityFactor::parse("1.10"),
                                               SuboptimalityFactor::parse("1.50")};
  std::size_t runs = 0, violations = 0;
  std::size_t root_pairs = 0, root_dominated = 0, constrained = 0, strict = 0;
  for (const auto& c : cases) {
    for (const auto& w : ws) {
      long long ecbs_root = -1, decbs_root = -1;
      bool needs_split = false;
      for (auto kind : {SolverKind::Ecbs, SolverKind::Decbs}) {
        for (bool bc : {false, true}) {
          for (bool tr : {false, true}) {
            auto cfg = guarded(make_config({kind, bc, tr}, w, kPerSolveGuardSeconds));
            auto r = solve(c.instance, cfg);
            ++runs;
            if (!r.solution) {
              ++violations;
              continue;
            }
            gate.check(valid(c.instance, *r.solution));
            if (!w.admits(flowtime(*r.solution), c.optimum)) ++violations;
            if (!bc && !tr) {
              (kind == SolverKind::Ecbs ? ecbs_root : decbs_root) = r.stats.root_lb;
              if (kind == SolverKind::Ecbs) needs_split = r.stats.ct_expanded > 1;
            }
          }
        }
      }
      ++root_pairs;
      if (decbs_root >= ecbs_root) ++root_dominated;
      if (needs_split) {
        ++constrained;
        if (decbs_root > ecbs_root) ++strict;
      }
    }
  }
  v.report(true, violations == 0, "bound suite",
           fmt("%.0f runs (ECBS/DECBS x {none,bc,tr,bc+tr} x w {1.05,1.10,1.50}), %.0f with cost > w*opt or unsolved",
               static_cast<double>(runs), static_cast<double>(violations)));
  v.report(true, root_dominated == root_pairs, "root-LB dominance",
           fmt("DECBS root c_L >= ECBS root c_L on %.0f/%.0f (instance, w) pairs", static_cast<double>(root_dominated),
               static_cast<double>(root_pairs)));
  const double share = constrained ? static_cast<double>(strict) / static_cast<double>(constrained) : 0.0;
  v.report(false, share >= kStrictRootShareMin, "root-LB strictness",
           fmt("strict on %.0f/%.0f constrained pairs (%.1f%%, need >= %.0f%%)", static_cast<double>(strict),
               static_cast<double>(constrained), 100.0 * share, 100.0 * kStrictRootShareMin));
}

void lb_exactness(Verdicts& v) {
  std::mt19937 rng(31337);
  const auto w = SuboptimalityFactor::parse("1.1");
  int agree = 0;
  for (int q = 0; q < kLbQueries; ++q) {
    const auto map = gen::random_map(rng, gen::uniform(rng, 2, 8), gen::uniform(rng, 2, 8), 0.2);
    const Cell s = gen::random_open(rng, map);
    const Cell g = gen::random_open(rng, map);
    const auto omega = gen::random_constraints(rng, map, 0, gen::uniform(rng, 0, 6), 12);
    ConflictAvoidanceTable cat(map);
    for (int k = 0; k < 2; ++k) cat.add_path(gen::random_walk(rng, map, gen::random_open(rng, map), 10));
    const SearchProblem problem(map, s, g, 0, omega);
    const auto truth = oracle::time_expanded_bfs(map, s, g, 0, omega, problem.horizon());
    const auto r = low_level_search(LowLevelMode::Double, problem, w, cat);
    if (truth ? r.lb == *truth : r.lb == kInfiniteCost) ++agree;
  }
  v.report(true, agree == kLbQueries, "low-level LB exactness",
           fmt("DECBS phase-1 lb equals time-expanded BFS on %.0f/%.0f queries", agree, kLbQueries));
}

void min_conflict(Verdicts& v) {
  std::mt19937 rng(4242);
  const auto w = SuboptimalityFactor::parse("1.2");
  int checked = 0, agree = 0, refused = 0;
  while (checked < kMinConflictQueries) {
    const auto map = gen::random_map(rng, gen::uniform(rng, 2, 5), gen::uniform(rng, 2, 5), 0.1);
    const Cell s = gen::random_open(rng, map);
    const Cell g = gen::random_open(rng, map);
    const auto omega = gen::random_constraints(rng, map, 0, gen::uniform(rng, 0, 4), 8, false);
    std::vector<Path> others;
    for (int k = 0; k < 3; ++k) others.push_back(gen::random_walk(rng, map, gen::random_open(rng, map), 8));
    ConflictAvoidanceTable cat(map);
    for (const auto& o : others) cat.add_path(o);
    const SearchProblem problem(map, s, g, 0, omega);
    const auto lb = shortest_path_search(problem).lb;
    if (lb == kInfiniteCost) continue;
    std::vector<Path> candidates;
    try {
      candidates = oracle::enumerate_bounded_paths(map, s, g, 0, omega, static_cast<int>(w.scaled_floor(lb)));
    } catch (const oracle::OracleInfeasibleError&) {
      ++refused;
      continue;
    }
    int best = std::numeric_limits<int>::max();
    for (const auto& c : candidates) best = std::min(best, oracle::conflicts_against(c, others));
    const auto r = bounded_best_first(problem, w, lb, cat);
    ++checked;
    if (r.path && oracle::conflicts_against(*r.path, others) == best) ++agree;
  }
  v.report(true, agree == checked, "min-conflict optimality",
           fmt("bounded best-first matches enumeration minimum on %.0f/%.0f queries (w=1.2, %.0f skipped: enumeration "
               "cap)",
               agree, checked, refused));
}

std::vector<std::string> desk_scens() {
  std::vector<std::string> out;
  for (int k = 1; k <= kDeskScens; ++k) {
    out.push_back(std::string(DECBS_FIXTURES) + "/random-32-32-20/random-32-32-20-random-" + std::to_string(k) +
                  ".scen");
  }
  return out;
}

void desk_suite(int jobs, const std::string& out_path, Verdicts& v, Gate& gate) {
  SuiteSpec spec;
  spec.map_path = std::string(DECBS_FIXTURES) + "/random-32-32-20.map";
  spec.scen_paths = desk_scens();
  spec.agent_counts = kDeskAgents;
  spec.ws = {SuboptimalityFactor::parse("1.1")};
  for (auto [bc, tr] : {std::pair{false, false}, {true, false}, {true, true}}) {
    spec.variants.push_back({SolverKind::Ecbs, bc, tr});
    spec.variants.push_back({SolverKind::Decbs, bc, tr});
  }
  spec.time_limit = kDeskTimeLimit;
  spec.jobs = jobs;
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run_suite(spec);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& s : report.skipped) std::cout << "  skipped " << s << "\n";
  for (const auto& r : report.rows) {
    if (r.stats.solved) gate.check(r.valid);
  }
  if (!out_path.empty()) io::write_results(report.rows, out_path);
  std::cout << "  desk suite: " << report.rows.size() << " runs in " << fmt("%.0fs", secs) << "\n";
  for (const auto& s : summarize(report.rows)) {
    std::cout << "  " << describe(s.variant) << " agents=" << s.agents
              << fmt(" success=%.2f", s.success_rate()) << "\n";
  }

  // Low-level nodes, pooled over the optimization sets: a row pair counts when
  // ECBS and DECBS with the same set both solved the instance.
  double ll_a = 0, ll_b = 0, ct_a = 0, ct_b = 0, all_b = 0;
  std::size_t common = 0;
  for (const auto& c : standard_comparisons(report.rows)) {
    const double n = static_cast<double>(c.common);
    ll_a += c.mean_ll_a * n;
    ll_b += c.mean_ll_b * n;
    all_b += (c.mean_ll_b + c.mean_shortest_b) * n;
    ct_a += c.mean_ct_a * n;
    ct_b += c.mean_ct_b * n;
    common += c.common;
    std::cout << "  " << c.label
              << fmt(": common=%.0f ll %.6g -> %.6g (ratio %.4f)", n, c.mean_ll_a, c.mean_ll_b, c.ll_ratio())
              << fmt(" ct %.6g -> %.6g (ratio %.4f)", c.mean_ct_a, c.mean_ct_b, c.ct_ratio()) << "\n";
  }
  const double ll_ratio = ll_a > 0 ? ll_b / ll_a : 0.0;
  const double ct_ratio = ct_a > 0 ? ct_b / ct_a : 0.0;
  std::cout << "  DECBS low-level incl. shortest-path phase / ECBS focal: "
            << fmt("%.3f", ll_a > 0 ? all_b / ll_a : 0.0) << "\n";
  v.report(false, common > 0 && ll_ratio <= kLlRatioMax && ct_ratio <= kCtRatioMax, "node-reduction direction",
           fmt("%.0f common pairs; DECBS/ECBS low-level %.4f (max %.2f),", static_cast<double>(common), ll_ratio,
               kLlRatioMax) +
               fmt(" CT %.4f (max %.2f)", ct_ratio, kCtRatioMax) +
               fmt(" [reference: 212k/416k=%.3f, 291/427=%.3f]", 212.0 / 416.0, 291.0 / 427.0));

  const auto rt = compare(report.rows, {SolverKind::Ecbs, true, true}, {SolverKind::Decbs, true, true});
  v.report(false, rt.common > 0 && rt.mean_runtime_b <= rt.mean_runtime_a, "runtime direction",
           fmt("BC+TR, %.0f common: ECBS %.4gs, DECBS %.4gs, improvement %.1f%%", static_cast<double>(rt.common),
               rt.mean_runtime_a, rt.mean_runtime_b, 100.0 * rt.runtime_improvement()) +
               fmt(" [reference: %.1f%%]", 100.0 * kReferenceRuntimeImprovement));
}

void determinism(Verdicts& v, Gate& gate) {
  SuiteSpec spec;
  spec.map_path = std::string(DECBS_FIXTURES) + "/random-32-32-20.map";
  spec.scen_paths = {desk_scens()[0], desk_scens()[1], desk_scens()[2]};
  spec.agent_counts = {20, 40};
  spec.ws = {SuboptimalityFactor::parse("1.05"), SuboptimalityFactor::parse("1.1")};
  spec.variants = {{SolverKind::Ecbs}, {SolverKind::Decbs}, {SolverKind::Decbs, true, true}, {SolverKind::Bcbs}};
  spec.seed = 7;
  spec.time_limit = kDeskTimeLimit;
  // a wall-clock cutoff stops at a machine-dependent point; give unsolved runs
  // a reproducible budget instead
  spec.node_limit = kDeterminismNodeLimit;
  std::string text[2];
  std::size_t rows = 0, unsolved = 0;
  for (auto& t : text) {
    const auto report = run_suite(spec);
    rows = report.rows.size();
    unsolved = 0;
    for (const auto& r : report.rows) {
      if (r.stats.solved) gate.check(r.valid);
      unsolved += r.stats.solved ? 0 : 1;
    }
    std::ostringstream out;
    io::write_results(report.rows, out, {.include_runtime = false});
    t = out.str();
  }
  v.report(true, text[0] == text[1], "determinism",
           fmt("two runs of a seeded %.0f-run suite (%.0f stopped by the node budget) give ", static_cast<double>(rows),
               static_cast<double>(unsolved)) +
               (text[0] == text[1] ? "byte-identical results" : "different results"));
}

}  // namespace

int main(int argc, char** argv) {
  bool desk = true;
  int jobs = 1;
  std::string out_path;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--no-desk")) {
      desk = false;
    } else if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc) {
      jobs = std::max(1, std::atoi(argv[++i]));
    } else if (!std::strcmp(argv[i], "--out") && i + 1 < argc) {
      out_path = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--no-desk] [--jobs N] [--out results.csv]\n";
      return 2;
    }
  }

  Verdicts v;
  Gate gate;
  const auto cases = oracle_instances();
  optimality_suite(cases, v, gate);
  bound_and_root_suite(cases, v, gate);
  lb_exactness(v);
  min_conflict(v);
  if (desk) desk_suite(jobs, out_path, v, gate);
  determinism(v, gate);
  v.report(true, gate.invalid == 0, "validator gate",
           fmt("%.0f returned solutions checked, %.0f with conflicts", static_cast<double>(gate.solutions),
               static_cast<double>(gate.invalid)));

  std::cout << "exact failures: " << v.exact_failures << ", directional failures: " << v.directional_failures
            << std::endl;
  return v.exact_failures == 0 ? 0 : 1;
}
