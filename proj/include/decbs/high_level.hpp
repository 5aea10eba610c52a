#pragma once

// Constraint-tree search. One solver covers CBS, BCBS(w,1), ECBS and DECBS:
// the high level is either best-first on cost or focal on (c_L, c), and the
// low level is shortest / focal / double search. Bypassing conflicts and
// target reasoning are optional.

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decbs/core.hpp"
#include "decbs/focal_queue.hpp"
#include "decbs/low_level.hpp"

namespace decbs {

enum class HighLevelMode { BestFirst, Focal };

struct SolverConfig {
  SuboptimalityFactor w_high;
  SuboptimalityFactor w_low;
  HighLevelMode high_mode = HighLevelMode::Focal;
  LowLevelMode low_mode = LowLevelMode::Double;
  bool enable_bc = false;
  bool enable_tr = false;
  std::optional<int> horizon;  // absolute cap on any single path cost
  std::optional<std::uint64_t> node_limit;
  std::optional<double> time_limit;  // seconds

  static SolverConfig make(SuboptimalityFactor wh, SuboptimalityFactor wl, HighLevelMode hm, LowLevelMode lm) {
    SolverConfig c;
    c.w_high = wh;
    c.w_low = wl;
    c.high_mode = hm;
    c.low_mode = lm;
    return c;
  }
  static SolverConfig cbs() { return make({}, {}, HighLevelMode::BestFirst, LowLevelMode::Shortest); }
  static SolverConfig bcbs(SuboptimalityFactor w) { return make(w, {}, HighLevelMode::Focal, LowLevelMode::Shortest); }
  static SolverConfig ecbs(SuboptimalityFactor w) { return make(w, w, HighLevelMode::Focal, LowLevelMode::Focal); }
  static SolverConfig decbs(SuboptimalityFactor w) { return make(w, w, HighLevelMode::Focal, LowLevelMode::Double); }

  SolverConfig& with_bc(bool on = true) {
    enable_bc = on;
    return *this;
  }
  SolverConfig& with_tr(bool on = true) {
    enable_tr = on;
    return *this;
  }
};

/// (c, Omega, pi, L, c_L) plus the collision count d.
struct CTNode {
  ConstraintSet constraints;
  std::vector<std::shared_ptr<const Path>> paths;
  std::vector<int> lower_bounds;
  long long cost = 0;
  long long lb_sum = 0;
  int collisions = 0;
  std::uint64_t id = 0;

  int agent_count() const { return static_cast<int>(paths.size()); }
  const Path& path(AgentId i) const { return *paths[i]; }

  Solution solution() const {
    Solution sol;
    sol.paths.reserve(paths.size());
    for (const auto& p : paths) sol.paths.push_back(*p);
    return sol;
  }
};

/// Number of vertex and edge collisions over all agent pairs.
inline int compute_d(const CTNode& node) {
  return count_collisions(node.agent_count(), [&node](AgentId i) -> const Path& { return node.path(i); });
}

/// Earliest (t, resting agent, blocker) where an agent stands on another
/// agent's goal at or after that agent's arrival.
template <class PathAt>
std::optional<Conflict> detect_target_conflict(int agent_count, PathAt&& path_at) {
  std::optional<Conflict> best;
  for (AgentId i = 0; i < agent_count; ++i) {
    const Path& pi = path_at(i);
    const Cell goal = pi.back();
    for (AgentId j = 0; j < agent_count; ++j) {
      if (j == i) continue;
      const Path& pj = path_at(j);
      for (int t = pi.cost(); t <= pj.cost(); ++t) {
        if (best && t > best->t) break;
        if (pj.vertices[t] == goal) {
          const Conflict c = Conflict::target(i, j, goal, t);
          if (!best || c < *best) best = c;
          break;
        }
      }
    }
  }
  return best;
}

inline std::optional<Conflict> detect_target_conflict(const Solution& sol) {
  return detect_target_conflict(static_cast<int>(sol.paths.size()),
                                [&sol](AgentId i) -> const Path& { return sol.paths[i]; });
}

enum class SolveStatus { Solved, NoSolution, NodeLimit, TimeLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved:
      return "solved";
    case SolveStatus::NoSolution:
      return "no-solution";
    case SolveStatus::NodeLimit:
      return "node-limit";
    case SolveStatus::TimeLimit:
      return "time-limit";
  }
  return "?";
}

struct SolveResult {
  SolveStatus status = SolveStatus::NoSolution;
  std::optional<Solution> solution;
  RunStats stats;
};

class CbsSolver {
 public:
  CbsSolver(const MapfInstance& instance, SolverConfig config) : instance_(&instance), config_(config) {
    heuristics_.reserve(instance.agent_count());
    for (const auto& a : instance.agents()) {
      heuristics_.push_back(std::make_shared<const DistanceTable>(distances_to(instance.map(), a.goal)));
    }
  }

  const SolverConfig& config() const { return config_; }
  const RunStats& stats() const { return stats_; }

  /// Plans every agent with no constraints, in id order, each against the
  /// agents planned before it.
  std::optional<CTNode> make_root() {
    CTNode root;
    const int n = instance_->agent_count();
    root.paths.resize(n);
    root.lower_bounds.assign(n, 0);
    ConflictAvoidanceTable cat(instance_->map());
    for (AgentId k = 0; k < n; ++k) {
      LowLevelResult r = run_low_level(root.constraints, k, cat);
      if (!r.found()) return std::nullopt;
      root.paths[k] = std::make_shared<const Path>(std::move(*r.path));
      root.lower_bounds[k] = r.lb;
      root.cost += root.paths[k]->cost();
      root.lb_sum += r.lb;
      cat.add_path(*root.paths[k]);
    }
    root.collisions = compute_d(root);
    return root;
  }

  /// Target conflict when target reasoning is on and one exists, otherwise
  /// the first vertex/edge collision.
  std::optional<Conflict> choose_conflict(const CTNode& node) const {
    auto at = [&node](AgentId i) -> const Path& { return node.path(i); };
    if (config_.enable_tr) {
      if (auto c = detect_target_conflict(node.agent_count(), at)) return c;
    }
    return first_collision(node.agent_count(), at);
  }

  /// Children of `node` for `conflict`; children whose re-planned agent has
  /// no path are dropped.
  std::vector<CTNode> expand_node(const CTNode& node, const Conflict& conflict) {
    if (conflict.kind == ConflictKind::Target) return split_target_conflict(node, conflict);
    std::vector<CTNode> children;
    for (AgentId k : {conflict.first, conflict.second}) {
      CTNode child = node;
      if (conflict.kind == ConflictKind::Vertex) {
        child.constraints.emplace_back(VertexConstraint{k, conflict.cell, conflict.t});
      } else if (k == conflict.first) {
        child.constraints.emplace_back(EdgeConstraint{k, conflict.cell, conflict.to, conflict.t});
      } else {
        child.constraints.emplace_back(EdgeConstraint{k, conflict.to, conflict.cell, conflict.t});
      }
      if (replan(child, k)) children.push_back(std::move(child));
    }
    return children;
  }

  /// Child A: the resting agent is still travelling at t (cost >= t+1).
  /// Child B: it finishes by t and the blocker avoids the goal at t.
  std::vector<CTNode> split_target_conflict(const CTNode& node, const Conflict& conflict) {
    const AgentId resting = conflict.first;
    const AgentId blocker = conflict.second;
    std::vector<CTNode> children;

    CTNode a = node;
    a.constraints.emplace_back(MinLengthConstraint{resting, conflict.t + 1});
    if (replan(a, resting)) children.push_back(std::move(a));

    CTNode b = node;
    b.constraints.emplace_back(MaxLengthConstraint{resting, conflict.t});
    b.constraints.emplace_back(VertexConstraint{blocker, conflict.cell, conflict.t});
    if (replan(b, resting) && replan(b, blocker)) children.push_back(std::move(b));
    return children;
  }

  /// Adopts the child solution into `parent` when it has strictly fewer
  /// collisions and its cost stays within w_high * parent.c_L. Constraints and
  /// lower bounds of the parent are kept.
  bool try_bypass(CTNode& parent, const std::vector<CTNode>& children) const {
    const CTNode* best = nullptr;
    for (const auto& child : children) {
      if (child.collisions >= parent.collisions) continue;
      if (!bound_factor().admits(child.cost, parent_lower(parent))) continue;
      if (!best || std::tie(child.collisions, child.cost) < std::tie(best->collisions, best->cost)) best = &child;
    }
    if (!best) return false;
    parent.paths = best->paths;
    parent.cost = best->cost;
    parent.collisions = best->collisions;
    return true;
  }

  SolveResult solve() {
    using Clock = std::chrono::steady_clock;
    const auto started = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - started).count(); };

    SolveResult result;
    stats_ = RunStats{};
    auto finish = [&](SolveStatus status) {
      result.status = status;
      stats_.runtime = elapsed();
      stats_.solved = status == SolveStatus::Solved;
      result.stats = stats_;
      return result;
    };

    auto root = make_root();
    if (!root) return finish(SolveStatus::NoSolution);
    stats_.root_lb = root->lb_sum;
    root->id = next_id_++;
    ++stats_.ct_generated;

    FocalQueue<CTNode> queue(bound_factor(), TieBreak::Fifo);
    auto push = [&](CTNode&& n) {
      const auto lower = parent_lower(n);
      const auto cost = n.cost;
      const auto d = n.collisions;
      queue.push(std::move(n), lower, cost, d);
    };
    push(std::move(*root));

    [[maybe_unused]] std::int64_t last_front = 0;
    while (!queue.empty()) {
      if (config_.time_limit && elapsed() >= *config_.time_limit) return finish(SolveStatus::TimeLimit);
      if (config_.node_limit && stats_.ct_expanded >= *config_.node_limit) return finish(SolveStatus::NodeLimit);

      auto popped = queue.pop();
      DECBS_INVARIANT(popped.lower_bound >= last_front, "OPEN front lower bound decreased");
      last_front = popped.lower_bound;
      CTNode node = std::move(popped.payload);
      ++stats_.ct_expanded;

      const auto conflict = choose_conflict(node);
      if (!conflict) {
        result.solution = node.solution();
        stats_.solution_cost = node.cost;
        return finish(SolveStatus::Solved);
      }
      auto children = expand_node(node, *conflict);
      if (config_.enable_bc && try_bypass(node, children)) {
        node.id = next_id_++;
        ++stats_.ct_generated;
        push(std::move(node));
        continue;
      }
      for (auto& child : children) {
        child.id = next_id_++;
        ++stats_.ct_generated;
        push(std::move(child));
      }
    }
    return finish(SolveStatus::NoSolution);
  }

 private:
  // Best-first ranks by cost with w = 1; focal admits cost <= w_high * c_L.
  SuboptimalityFactor bound_factor() const {
    return config_.high_mode == HighLevelMode::BestFirst ? SuboptimalityFactor{} : config_.w_high;
  }
  long long parent_lower(const CTNode& n) const {
    return config_.high_mode == HighLevelMode::BestFirst ? n.cost : n.lb_sum;
  }

  LowLevelResult run_low_level(const ConstraintSet& constraints, AgentId k, const ConflictAvoidanceTable& cat) {
    const Agent& a = instance_->agent(k);
    SearchProblem problem(instance_->map(), a.start, a.goal, k, constraints, heuristics_[k], horizon_for(constraints, k));
    LowLevelResult r = low_level_search(config_.low_mode, problem, config_.w_low, cat);
    stats_.ll_shortest_expanded += r.shortest_expanded;
    stats_.ll_focal_expanded += r.focal_expanded;
    stats_.ll_bfs_expanded += r.bfs_expanded;
    return r;
  }

  std::optional<int> horizon_for(const ConstraintSet& constraints, AgentId k) const {
    if (!config_.horizon) return std::nullopt;
    int latest = 0;
    for (const auto& c : constraints) {
      if (constraint_agent(c) == k) latest = std::max(latest, constraint_time(c));
    }
    return std::min(*config_.horizon, instance_->map().passable_count() + 1 + latest);
  }

  // Re-plans agent k under node.constraints against every other agent's path.
  bool replan(CTNode& node, AgentId k) {
    ConflictAvoidanceTable cat(instance_->map());
    if (config_.low_mode != LowLevelMode::Shortest) {
      for (AgentId j = 0; j < node.agent_count(); ++j) {
        if (j != k) cat.add_path(node.path(j));
      }
    }
    LowLevelResult r = run_low_level(node.constraints, k, cat);
    if (!r.found()) return false;

    auto at = [&node](AgentId i) -> const Path& { return node.path(i); };
    node.collisions -= count_agent_collisions(node.agent_count(), k, at);
    node.cost -= node.path(k).cost();
    node.paths[k] = std::make_shared<const Path>(std::move(*r.path));
    node.cost += node.path(k).cost();
    node.collisions += count_agent_collisions(node.agent_count(), k, at);

    // The parent's bound stays valid: the child's constraint set is a superset.
    const int lb = std::max(node.lower_bounds[k], r.lb);
    node.lb_sum += lb - node.lower_bounds[k];
    node.lower_bounds[k] = lb;
    return true;
  }

  const MapfInstance* instance_;
  SolverConfig config_;
  std::vector<std::shared_ptr<const DistanceTable>> heuristics_;
  RunStats stats_;
  std::uint64_t next_id_ = 0;
};

inline SolveResult solve(const MapfInstance& instance, const SolverConfig& config) {
  CbsSolver solver(instance, config);
  return solver.solve();
}

}  // namespace decbs
