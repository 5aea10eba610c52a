#pragma once

// Single-agent space-time search under a constraint set.
//
// Three searches share one node layout and successor generator:
//   shortest_path_search  A* on (cell, t); returns the exact constrained optimum.
//   focal_search_low      OPEN/FOCAL focal search (the ECBS low level).
//   bounded_best_first    conflict-ordered search pruned at w * lb (the second
//                         phase of double search).
// Secondary key d is the number of collisions with the conflict-avoidance
// table accumulated along the partial path.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "decbs/core.hpp"
#include "decbs/focal_queue.hpp"

#ifdef DECBS_CHECK_INVARIANTS
#define DECBS_INVARIANT(cond, msg) \
  do {                             \
    if (!(cond)) throw std::logic_error(msg); \
  } while (0)
#else
#define DECBS_INVARIANT(cond, msg) \
  do {                             \
  } while (0)
#endif

namespace decbs {

using DistanceTable = std::vector<int>;

/// Reverse breadth-first sweep: unit-cost distance from every location to
/// `goal`, kInfiniteCost where unreachable.
inline DistanceTable distances_to(const GridMap& map, Cell goal) {
  DistanceTable dist(map.cell_count(), kInfiniteCost);
  if (!map.passable(goal)) return dist;
  std::vector<int> frontier{map.index(goal)};
  dist[frontier.front()] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const int loc = frontier[head];
    for (int nb : map.neighbours(loc)) {
      if (nb >= 0 && dist[nb] == kInfiniteCost) {
        dist[nb] = dist[loc] + 1;
        frontier.push_back(nb);
      }
    }
  }
  return dist;
}

/// One agent's constraints compiled for O(1) lookups.
class ConstraintTable {
 public:
  ConstraintTable() = default;

  ConstraintTable(const GridMap& map, AgentId agent, std::span<const Constraint> constraints) {
    for (const auto& c : constraints) {
      if (constraint_agent(c) != agent) continue;
      latest_time_ = std::max(latest_time_, constraint_time(c));
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, VertexConstraint>) {
              if (!map.in_bounds(v.cell)) return;
              const int loc = map.index(v.cell);
              vertex_.insert(vertex_key(loc, v.t));
              auto& last = last_block_[loc];
              last = std::max(last, v.t);
            } else if constexpr (std::is_same_v<T, EdgeConstraint>) {
              if (!map.in_bounds(v.from) || !map.in_bounds(v.to)) return;
              edge_.insert(edge_key(map.index(v.from), map.index(v.to), v.t));
            } else if constexpr (std::is_same_v<T, MaxLengthConstraint>) {
              max_length_ = std::min(max_length_, v.t);
            } else {
              min_length_ = std::max(min_length_, v.t);
            }
          },
          c);
    }
  }

  bool vertex_blocked(int loc, int t) const { return !vertex_.empty() && vertex_.contains(vertex_key(loc, t)); }
  bool edge_blocked(int from, int to, int t) const { return !edge_.empty() && edge_.contains(edge_key(from, to, t)); }

  int min_length() const { return min_length_; }
  int max_length() const { return max_length_; }  // kInfiniteCost when unbounded
  int latest_time() const { return latest_time_; }

  // Latest timestep at which `loc` is blocked by a vertex constraint, -1 if never.
  int last_block(int loc) const {
    auto it = last_block_.find(loc);
    return it == last_block_.end() ? -1 : it->second;
  }

 private:
  static std::uint64_t vertex_key(int loc, int t) {
    return (static_cast<std::uint64_t>(t) << 32) | static_cast<std::uint32_t>(loc);
  }
  static std::uint64_t edge_key(int from, int to, int t) {
    return (static_cast<std::uint64_t>(t) << 42) | (static_cast<std::uint64_t>(from) << 21) |
           static_cast<std::uint64_t>(to);
  }

  std::unordered_set<std::uint64_t> vertex_;
  std::unordered_set<std::uint64_t> edge_;
  std::unordered_map<int, int> last_block_;
  int min_length_ = 0;
  int max_length_ = kInfiniteCost;
  int latest_time_ = 0;
};

/// Index of other agents' planned occupancy. Occupancy after an agent's last
/// timestep is its goal ("rest" occupancy); everything before is "moving".
class ConflictAvoidanceTable {
 public:
  ConflictAvoidanceTable() = default;
  explicit ConflictAvoidanceTable(const GridMap& map)
      : width_(map.width()), cells_(map.cell_count()), rest_(map.cell_count()) {}

  void add_path(const Path& path) {
    if (path.empty() || cells_ == 0) return;
    const int cost = path.cost();
    if (cost > last_time_) {
      moving_.resize(static_cast<std::size_t>(cost + 1) * cells_, 0);
      last_time_ = cost;
    }
    for (int t = 0; t <= cost; ++t) ++moving_[slot(loc(path.vertices[t]), t)];
    for (int t = 1; t <= cost; ++t) {
      const int from = loc(path.vertices[t - 1]);
      const int to = loc(path.vertices[t]);
      if (from != to) ++edges_[edge_key(from, to, t)];
    }
    rest_[loc(path.back())].push_back(cost);
    ++paths_;
  }

  bool empty() const { return paths_ == 0; }
  int last_moving_time() const { return last_time_; }

  int vertex_hits(int l, int t) const {
    if (cells_ == 0) return 0;
    int hits = t <= last_time_ ? moving_[slot(l, t)] : 0;
    for (int end : rest_[l]) hits += end < t ? 1 : 0;
    return hits;
  }

  // Agents crossing the same edge the other way: moving to->from arriving at t.
  int edge_hits(int from, int to, int t) const {
    if (edges_.empty() || from == to) return 0;
    auto it = edges_.find(edge_key(to, from, t));
    return it == edges_.end() ? 0 : it->second;
  }

  // Moving occupancy of `l` strictly after `after_t`; collisions an agent
  // resting at `l` from `after_t` on would still suffer.
  int tail_hits(int l, int after_t) const {
    int hits = 0;
    for (int t = std::max(after_t + 1, 0); t <= last_time_; ++t) hits += moving_[slot(l, t)];
    return hits;
  }

  int query(Cell c, int t) const { return vertex_hits(loc(c), t); }
  int query_edge(Cell from, Cell to, int t) const { return edge_hits(loc(from), loc(to), t); }

  /// Collisions a complete path would have against the table.
  int path_conflicts(const Path& path) const {
    if (path.empty()) return 0;
    int n = 0;
    for (int t = 0; t <= path.cost(); ++t) {
      n += vertex_hits(loc(path.vertices[t]), t);
      if (t > 0) n += edge_hits(loc(path.vertices[t - 1]), loc(path.vertices[t]), t);
    }
    return n + tail_hits(loc(path.back()), path.cost());
  }

 private:
  int loc(Cell c) const { return c.y * width_ + c.x; }
  std::size_t slot(int l, int t) const { return static_cast<std::size_t>(t) * cells_ + l; }
  static std::uint64_t edge_key(int from, int to, int t) {
    return (static_cast<std::uint64_t>(t) << 42) | (static_cast<std::uint64_t>(from) << 21) |
           static_cast<std::uint64_t>(to);
  }

  int width_ = 0;
  int cells_ = 0;
  int last_time_ = -1;
  int paths_ = 0;
  std::vector<std::uint16_t> moving_;
  std::vector<std::vector<int>> rest_;
  std::unordered_map<std::uint64_t, int> edges_;
};

inline ConflictAvoidanceTable build_cat(const GridMap& map, const Solution& sol,
                                        std::optional<AgentId> excluded = std::nullopt) {
  ConflictAvoidanceTable cat(map);
  for (std::size_t i = 0; i < sol.paths.size(); ++i) {
    if (excluded && static_cast<AgentId>(i) == *excluded) continue;
    cat.add_path(sol.paths[i]);
  }
  return cat;
}

/// A single-agent query: endpoints, the agent's constraints, heuristic and horizon.
class SearchProblem {
 public:
  SearchProblem(const GridMap& map, Cell start, Cell goal, AgentId agent, std::span<const Constraint> constraints,
                std::shared_ptr<const DistanceTable> heuristic = nullptr, std::optional<int> horizon = std::nullopt)
      : map_(&map),
        start_(map.index(start)),
        goal_(map.index(goal)),
        agent_(agent),
        table_(map, agent, constraints),
        heuristic_(heuristic ? std::move(heuristic) : std::make_shared<const DistanceTable>(distances_to(map, goal))) {
    if (!map.passable(start) || !map.passable(goal)) throw std::invalid_argument("start or goal is not passable");
    earliest_finish_ = std::max(table_.min_length(), table_.last_block(goal_) + 1);
    horizon_ = horizon.value_or(map.passable_count() + 1 + table_.latest_time());
  }

  const GridMap& map() const { return *map_; }
  int start() const { return start_; }
  int goal() const { return goal_; }
  AgentId agent() const { return agent_; }
  const ConstraintTable& constraints() const { return table_; }
  int horizon() const { return horizon_; }
  int earliest_finish() const { return earliest_finish_; }

  // Static distance to goal; constraints are left to the search.
  int h(int loc, int /*t*/) const { return (*heuristic_)[loc]; }

  // The agent may stop at the goal at t and rest there forever.
  bool accepts_finish(int t) const { return t >= earliest_finish_ && t <= table_.max_length(); }

 private:
  const GridMap* map_;
  int start_;
  int goal_;
  AgentId agent_;
  ConstraintTable table_;
  std::shared_ptr<const DistanceTable> heuristic_;
  int earliest_finish_ = 0;
  int horizon_ = 0;
};

struct LowLevelResult {
  int lb = kInfiniteCost;  // c^g; kInfiniteCost when no path exists
  std::optional<Path> path;
  std::uint64_t shortest_expanded = 0;
  std::uint64_t focal_expanded = 0;
  std::uint64_t bfs_expanded = 0;

  bool found() const { return path.has_value(); }
  int cost() const { return path ? path->cost() : kInfiniteCost; }
};

namespace detail {

struct SearchNode {
  int loc;
  int t;
  int g;
  int f;
  int d;
  int parent;
  bool terminal;
};

inline Path reconstruct(const GridMap& map, const std::vector<SearchNode>& nodes, int idx) {
  if (nodes[idx].terminal) idx = nodes[idx].parent;
  Path p;
  for (int i = idx; i >= 0; i = nodes[i].parent) p.vertices.push_back(map.cell(nodes[i].loc));
  std::reverse(p.vertices.begin(), p.vertices.end());
  return p;
}

// Generated-node bookkeeping keyed by (loc, min(t, static_from)). Past
// `static_from` nothing is time-dependent any more, so such states only
// differ by g.
class DominanceTable {
 public:
  DominanceTable(int cells, int static_from)
      : cells_(cells), static_from_(static_from), best_d_(static_cast<std::size_t>(cells) * static_from, kUnset) {}

  int static_from() const { return static_from_; }

  // Records (g, d) unless an entry at the same key is at least as good in both.
  bool try_insert(int loc, int t, int g, int d) {
    if (t < static_from_) {
      int& best = best_d_[static_cast<std::size_t>(t) * cells_ + loc];
      if (best != kUnset && best <= d) return false;
      best = d;
      return true;
    }
    auto& front = late_[loc];
    for (const auto& [pg, pd] : front) {
      if (pg <= g && pd <= d) return false;
    }
    std::erase_if(front, [&](const auto& e) { return g <= e.first && d <= e.second; });
    front.emplace_back(g, d);
    return true;
  }

  // A popped node is stale if a strictly better node for its key was generated later.
  bool superseded(int loc, int t, int g, int d) const {
    if (t < static_from_) return best_d_[static_cast<std::size_t>(t) * cells_ + loc] < d;
    auto it = late_.find(loc);
    if (it == late_.end()) return false;
    for (const auto& [pg, pd] : it->second) {
      if (pg <= g && pd <= d && (pg < g || pd < d)) return true;
    }
    return false;
  }

 private:
  static constexpr int kUnset = std::numeric_limits<int>::max();
  int cells_;
  int static_from_;
  std::vector<int> best_d_;
  std::unordered_map<int, std::vector<std::pair<int, int>>> late_;
};

inline int static_from(const SearchProblem& problem, const ConflictAvoidanceTable* cat) {
  int latest = std::max(problem.constraints().latest_time(), problem.earliest_finish());
  if (cat) latest = std::max(latest, cat->last_moving_time());
  return std::min(latest + 1, problem.horizon() + 1);
}

// Calls emit(loc, t, g, f, extra_d) for every successor of `n` that satisfies
// the constraints and can still reach the goal within the horizon.
template <class Emit>
void for_each_successor(const SearchProblem& problem, const ConflictAvoidanceTable* cat, const SearchNode& n,
                        Emit&& emit) {
  const GridMap& map = problem.map();
  const ConstraintTable& table = problem.constraints();
  const int t1 = n.t + 1;
  const int g1 = n.g + 1;
  if (g1 > problem.horizon()) return;
  auto consider = [&](int next) {
    if (table.vertex_blocked(next, t1)) return;
    if (next != n.loc && table.edge_blocked(n.loc, next, t1)) return;
    const int h1 = problem.h(next, t1);
    if (h1 == kInfiniteCost) return;
    const int f1 = g1 + h1;
    if (f1 > problem.horizon() || f1 > table.max_length()) return;
    int extra = 0;
    if (cat) extra = cat->vertex_hits(next, t1) + cat->edge_hits(n.loc, next, t1);
    emit(next, t1, g1, f1, extra);
  };
  consider(n.loc);
  for (int nb : map.neighbours(n.loc)) {
    if (nb >= 0) consider(nb);
  }
}

// Shared driver for the two conflict-ordered searches. `queue` is a
// FocalQueue<int> over node indices.
template <class Queue>
LowLevelResult conflict_ordered_search(const SearchProblem& problem, const ConflictAvoidanceTable& cat, Queue& queue,
                                       std::uint64_t LowLevelResult::*counter) {
  LowLevelResult result;
  const GridMap& map = problem.map();
  if (problem.constraints().vertex_blocked(problem.start(), 0)) return result;
  const int h0 = problem.h(problem.start(), 0);
  if (h0 == kInfiniteCost || h0 > problem.horizon()) return result;

  std::vector<SearchNode> nodes;
  DominanceTable seen(map.cell_count(), static_from(problem, &cat));

  auto push = [&](const SearchNode& n) {
    if (!seen.try_insert(n.loc, n.t, n.g, n.d)) return;
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(n);
    if (!queue.push(idx, n.f, n.f, n.d)) return;
    if (n.loc == problem.goal() && problem.accepts_finish(n.t)) {
      SearchNode done = n;
      done.terminal = true;
      done.parent = idx;
      done.d = n.d + cat.tail_hits(n.loc, n.t);
      const int didx = static_cast<int>(nodes.size());
      nodes.push_back(done);
      queue.push(didx, done.f, done.f, done.d);
    }
  };

  push(SearchNode{problem.start(), 0, 0, h0, cat.vertex_hits(problem.start(), 0), -1, false});
  while (!queue.empty()) {
    auto popped = queue.pop();
    const SearchNode cur = nodes[popped.payload];
    if (!cur.terminal && seen.superseded(cur.loc, cur.t, cur.g, cur.d)) continue;
    ++(result.*counter);
    if (cur.terminal) {
      result.lb = static_cast<int>(popped.lower_bound);
      result.path = reconstruct(map, nodes, popped.payload);
      return result;
    }
    const int parent = popped.payload;
    for_each_successor(problem, &cat, cur, [&](int loc, int t, int g, int f, int extra) {
      DECBS_INVARIANT(f >= cur.f, "f decreased along an expansion");
      DECBS_INVARIANT(extra >= 0, "d decreased along an expansion");
      push(SearchNode{loc, t, g, f, cur.d + extra, parent, false});
    });
  }
  return result;
}

}  // namespace detail

/// A* over (cell, t). lb is the minimum cost of any constraint-satisfying path
/// within the horizon, kInfiniteCost if none.
inline LowLevelResult shortest_path_search(const SearchProblem& problem) {
  using detail::SearchNode;
  LowLevelResult result;
  const GridMap& map = problem.map();
  if (problem.constraints().vertex_blocked(problem.start(), 0)) return result;
  const int h0 = problem.h(problem.start(), 0);
  if (h0 == kInfiniteCost || h0 > problem.horizon()) return result;

  const int static_from = detail::static_from(problem, nullptr);
  auto key = [&](int loc, int t) {
    return static_cast<std::size_t>(std::min(t, static_from)) * map.cell_count() + loc;
  };
  std::vector<int> best_g(static_cast<std::size_t>(static_from + 1) * map.cell_count(), kInfiniteCost);
  std::vector<SearchNode> nodes;

  // (f, -g, -index): smallest f, deeper first, newest first.
  using Entry = std::tuple<int, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  auto push = [&](const SearchNode& n) {
    int& best = best_g[key(n.loc, n.t)];
    if (n.g >= best) return;
    best = n.g;
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(n);
    open.emplace(n.f, -n.g, -idx);
  };

  push(SearchNode{problem.start(), 0, 0, h0, 0, -1, false});
  while (!open.empty()) {
    const int idx = -std::get<2>(open.top());
    open.pop();
    const SearchNode cur = nodes[idx];
    if (cur.g > best_g[key(cur.loc, cur.t)]) continue;
    ++result.shortest_expanded;
    if (cur.loc == problem.goal() && problem.accepts_finish(cur.t)) {
      result.lb = cur.g;
      result.path = detail::reconstruct(map, nodes, idx);
      return result;
    }
    detail::for_each_successor(problem, nullptr, cur, [&](int loc, int t, int g, int f, int) {
      DECBS_INVARIANT(f >= cur.f, "f decreased along an expansion");
      push(SearchNode{loc, t, g, f, 0, idx, false});
    });
  }
  return result;
}

/// Focal search: FOCAL = {n in OPEN : f(n) <= w * f_min}, ordered by d, then f,
/// then newest first. lb is f_min when the goal is popped, so
/// lb <= optimum <= cost(path) <= w * lb.
inline LowLevelResult focal_search_low(const SearchProblem& problem, SuboptimalityFactor w,
                                       const ConflictAvoidanceTable& cat) {
  FocalQueue<int> queue(w, TieBreak::Lifo);
  return detail::conflict_ordered_search(problem, cat, queue, &LowLevelResult::focal_expanded);
}

/// Conflict-ordered best-first search given the exact optimum `lb`: nodes with
/// f > floor(w * lb) are discarded on generation, everything else is ordered by
/// d, then f, then newest first. Returns the path with the fewest collisions
/// among constraint-satisfying paths of cost <= floor(w * lb).
inline LowLevelResult bounded_best_first(const SearchProblem& problem, SuboptimalityFactor w, int lb,
                                         const ConflictAvoidanceTable& cat) {
  if (lb == kInfiniteCost) return {};
  auto queue = FocalQueue<int>::with_fixed_bound(w, lb, TieBreak::Lifo);
  auto result = detail::conflict_ordered_search(problem, cat, queue, &LowLevelResult::bfs_expanded);
  result.lb = result.found() ? lb : kInfiniteCost;
  return result;
}

enum class LowLevelMode { Shortest, Focal, Double };

/// Dispatches on mode. `Double` runs shortest_path_search to fix the exact
/// lower bound, then bounded_best_first under that bound.
inline LowLevelResult low_level_search(LowLevelMode mode, const SearchProblem& problem, SuboptimalityFactor w,
                                       const ConflictAvoidanceTable& cat) {
  switch (mode) {
    case LowLevelMode::Shortest:
      return shortest_path_search(problem);
    case LowLevelMode::Focal:
      return focal_search_low(problem, w, cat);
    case LowLevelMode::Double: {
      LowLevelResult first = shortest_path_search(problem);
      if (!first.found()) return first;
      LowLevelResult second = bounded_best_first(problem, w, first.lb, cat);
      second.shortest_expanded = first.shortest_expanded;
      if (!second.found()) {
        // Unreachable when lb is exact; fall back to the optimal path.
        second.path = std::move(first.path);
        second.lb = first.lb;
      }
      return second;
    }
  }
  return {};
}

}  // namespace decbs
