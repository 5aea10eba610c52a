#pragma once

// Independent ground truth for small instances. Nothing here shares code
// with the solvers beyond the domain types: constraints are checked by
// scanning the raw constraint list, collisions by an occupancy table, and
// optimal flowtime by a coupled search over joint states.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "decbs/core.hpp"

namespace decbs::oracle {

class OracleInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks one agent's path against every constraint addressed to it, with
/// rest-at-goal occupancy after the path ends.
inline bool satisfies_constraints(const Path& path, AgentId agent, std::span<const Constraint> constraints) {
  for (const auto& c : constraints) {
    const bool ok = std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if (v.agent != agent) return true;
          if constexpr (std::is_same_v<T, VertexConstraint>) {
            return path.at(v.t) != v.cell;
          } else if constexpr (std::is_same_v<T, EdgeConstraint>) {
            if (v.t < 1 || v.t > path.cost()) return true;
            return !(path.vertices[v.t - 1] == v.from && path.vertices[v.t] == v.to);
          } else if constexpr (std::is_same_v<T, MaxLengthConstraint>) {
            return path.cost() <= v.t;
          } else {
            return path.cost() >= v.t;
          }
        },
        c);
    if (!ok) return false;
  }
  return true;
}

inline int latest_constraint_time(AgentId agent, std::span<const Constraint> constraints) {
  int latest = 0;
  for (const auto& c : constraints) {
    if (constraint_agent(c) == agent) latest = std::max(latest, constraint_time(c));
  }
  return latest;
}

inline int default_horizon(const GridMap& map, AgentId agent, std::span<const Constraint> constraints) {
  return map.passable_count() + 1 + latest_constraint_time(agent, constraints);
}

namespace detail {

inline bool vertex_forbidden(AgentId agent, Cell c, int t, std::span<const Constraint> constraints) {
  for (const auto& k : constraints) {
    if (const auto* v = std::get_if<VertexConstraint>(&k); v && v->agent == agent && v->t == t && v->cell == c) {
      return true;
    }
  }
  return false;
}

inline bool edge_forbidden(AgentId agent, Cell from, Cell to, int t, std::span<const Constraint> constraints) {
  for (const auto& k : constraints) {
    if (const auto* e = std::get_if<EdgeConstraint>(&k);
        e && e->agent == agent && e->t == t && e->from == from && e->to == to) {
      return true;
    }
  }
  return false;
}

// The agent may stop at `goal` at time t and rest there.
inline bool finish_allowed(AgentId agent, Cell goal, int t, std::span<const Constraint> constraints) {
  for (const auto& k : constraints) {
    if (constraint_agent(k) != agent) continue;
    if (const auto* v = std::get_if<VertexConstraint>(&k); v && v->cell == goal && v->t >= t) return false;
    if (const auto* m = std::get_if<MaxLengthConstraint>(&k); m && t > m->t) return false;
    if (const auto* m = std::get_if<MinLengthConstraint>(&k); m && t < m->t) return false;
  }
  return true;
}

inline std::vector<Cell> moves(const GridMap& map, Cell c) {
  std::vector<Cell> out{c};
  for (Cell n : {Cell{c.x, c.y - 1}, Cell{c.x + 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x - 1, c.y}}) {
    if (map.passable(n)) out.push_back(n);
  }
  return out;
}

}  // namespace detail

/// Layered breadth-first search over the time-expanded graph: the minimum
/// cost of a constraint-satisfying path with cost <= horizon.
inline std::optional<int> time_expanded_bfs(const GridMap& map, Cell start, Cell goal, AgentId agent,
                                            std::span<const Constraint> constraints, int horizon) {
  if (detail::vertex_forbidden(agent, start, 0, constraints)) return std::nullopt;
  std::set<Cell> layer{start};
  for (int t = 0; t <= horizon && !layer.empty(); ++t) {
    if (layer.contains(goal) && detail::finish_allowed(agent, goal, t, constraints)) return t;
    std::set<Cell> next;
    for (Cell c : layer) {
      for (Cell n : detail::moves(map, c)) {
        if (detail::vertex_forbidden(agent, n, t + 1, constraints)) continue;
        if (n != c && detail::edge_forbidden(agent, c, n, t + 1, constraints)) continue;
        next.insert(n);
      }
    }
    layer = std::move(next);
  }
  return std::nullopt;
}

/// Every constraint-satisfying start->goal path with cost <= cost_bound
/// (including ones that wait at the goal before finishing).
inline std::vector<Path> enumerate_bounded_paths(const GridMap& map, Cell start, Cell goal, AgentId agent,
                                                 std::span<const Constraint> constraints, int cost_bound,
                                                 std::size_t max_paths = 200000) {
  std::vector<Path> out;
  if (cost_bound < 0 || detail::vertex_forbidden(agent, start, 0, constraints)) return out;
  Path prefix{{start}};
  std::size_t visited = 0;
  auto dfs = [&](auto&& self) -> void {
    if (++visited > 50 * max_paths) throw OracleInfeasibleError("path enumeration exceeded its search cap");
    const Cell here = prefix.back();
    const int t = prefix.cost();
    if (here == goal && detail::finish_allowed(agent, goal, t, constraints)) {
      if (out.size() >= max_paths) throw OracleInfeasibleError("path enumeration exceeded its output cap");
      out.push_back(prefix);
    }
    if (t == cost_bound) return;
    for (Cell n : detail::moves(map, here)) {
      if (t + 1 + std::abs(n.x - goal.x) + std::abs(n.y - goal.y) > cost_bound) continue;
      if (detail::vertex_forbidden(agent, n, t + 1, constraints)) continue;
      if (n != here && detail::edge_forbidden(agent, here, n, t + 1, constraints)) continue;
      prefix.vertices.push_back(n);
      self(self);
      prefix.vertices.pop_back();
    }
  };
  dfs(dfs);
  return out;
}

/// Collisions found with a (t, cell) occupancy table rather than pairwise
/// path scans. Same conflict multiset contract as find_collisions.
inline std::vector<Conflict> occupancy_table_collisions(const Solution& sol) {
  const int n = static_cast<int>(sol.paths.size());
  int last = 0;
  for (const auto& p : sol.paths) last = std::max(last, p.cost());
  std::vector<Conflict> out;
  for (int t = 0; t <= last; ++t) {
    std::map<Cell, std::vector<AgentId>> occupants;
    std::map<std::pair<Cell, Cell>, std::vector<AgentId>> moves;
    for (AgentId i = 0; i < n; ++i) {
      const Path& p = sol.paths[i];
      occupants[p.at(t)].push_back(i);
      if (t >= 1 && t <= p.cost() && p.vertices[t - 1] != p.vertices[t]) {
        moves[{p.vertices[t - 1], p.vertices[t]}].push_back(i);
      }
    }
    // A pair only counts while at least one of the two is still moving.
    auto active = [&](AgentId i, AgentId j) { return t <= std::max(sol.paths[i].cost(), sol.paths[j].cost()); };
    for (const auto& [cell, agents] : occupants) {
      for (std::size_t a = 0; a < agents.size(); ++a) {
        for (std::size_t b = a + 1; b < agents.size(); ++b) {
          const AgentId i = std::min(agents[a], agents[b]);
          const AgentId j = std::max(agents[a], agents[b]);
          if (active(i, j)) out.push_back(Conflict::vertex(i, j, cell, t));
        }
      }
    }
    for (const auto& [edge, agents] : moves) {
      auto rev = moves.find({edge.second, edge.first});
      if (rev == moves.end()) continue;
      for (AgentId i : agents) {
        for (AgentId j : rev->second) {
          if (i < j) out.push_back(Conflict::edge(i, j, edge.first, edge.second, t));
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Collisions between `path` and each of `others`, counted on the occupancy table.
inline int conflicts_against(const Path& path, const std::vector<Path>& others) {
  Solution sol;
  sol.paths = others;
  sol.paths.push_back(path);
  const AgentId me = static_cast<AgentId>(others.size());
  int n = 0;
  for (const auto& c : occupancy_table_collisions(sol)) n += (c.first == me || c.second == me) ? 1 : 0;
  return n;
}

struct JointSolution {
  long long flowtime;
  Solution solution;
};

/// Optimal flowtime by A* over joint states (cells of every agent plus a
/// "finished" flag per agent). An unfinished agent pays 1 per timestep,
/// waiting on its goal included; finishing is a free action that fixes the
/// agent on its goal forever. The joint space is finite and time-free, so
/// `nullopt` proves that no solution exists at any horizon.
inline std::optional<JointSolution> joint_state_astar(const MapfInstance& instance,
                                                      std::size_t max_states = 4'000'000) {
  const GridMap& map = instance.map();
  const int n = instance.agent_count();
  const int cells = map.cell_count();
  if (n == 0) return JointSolution{0, {}};
  if (n > 6) throw OracleInfeasibleError("joint-state oracle supports at most 6 agents");

  std::vector<std::vector<int>> dist(n);
  for (int i = 0; i < n; ++i) {
    // Plain BFS; kept local so the oracle does not depend on the solver heuristic.
    auto& d = dist[i];
    d.assign(cells, -1);
    const Cell g = instance.agent(i).goal;
    std::queue<Cell> q;
    q.push(g);
    d[map.index(g)] = 0;
    while (!q.empty()) {
      const Cell c = q.front();
      q.pop();
      for (Cell nb : detail::moves(map, c)) {
        if (d[map.index(nb)] < 0) {
          d[map.index(nb)] = d[map.index(c)] + 1;
          q.push(nb);
        }
      }
    }
    if (d[map.index(instance.agent(i).start)] < 0) return std::nullopt;
  }

  struct State {
    std::vector<int> locs;
    unsigned finished;
  };
  auto encode = [&](const State& s) {
    std::uint64_t key = 0;
    for (int i = 0; i < n; ++i) key = key * static_cast<std::uint64_t>(cells) + s.locs[i];
    return (key << n) | s.finished;
  };
  auto heuristic = [&](const State& s) {
    long long h = 0;
    for (int i = 0; i < n; ++i) {
      if (!(s.finished >> i & 1U)) h += dist[i][s.locs[i]];
    }
    return h;
  };

  struct Record {
    State state;
    long long g;
    std::int64_t parent;
  };
  std::vector<Record> records;
  std::unordered_map<std::uint64_t, long long> best_g;
  using Entry = std::tuple<long long, long long, std::int64_t>;  // f, -g, record
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  State init{std::vector<int>(n), 0};
  for (int i = 0; i < n; ++i) init.locs[i] = map.index(instance.agent(i).start);
  records.push_back({init, 0, -1});
  best_g[encode(init)] = 0;
  open.emplace(heuristic(init), 0, 0);
  const unsigned all = (1U << n) - 1;

  auto relax = [&](State s, long long g, std::int64_t parent) {
    const auto key = encode(s);
    auto it = best_g.find(key);
    if (it != best_g.end() && it->second <= g) return;
    best_g[key] = g;
    if (best_g.size() > max_states) throw OracleInfeasibleError("joint-state oracle exceeded its state cap");
    records.push_back({std::move(s), g, parent});
    const auto idx = static_cast<std::int64_t>(records.size() - 1);
    open.emplace(g + heuristic(records.back().state), -g, idx);
  };

  std::int64_t goal_record = -1;
  while (!open.empty()) {
    const auto [f, neg_g, idx] = open.top();
    open.pop();
    const State cur = records[idx].state;
    const long long g = records[idx].g;
    if (best_g[encode(cur)] < g) continue;
    if (cur.finished == all) {
      goal_record = idx;
      break;
    }
    // Finishing an agent that stands on its goal costs nothing.
    for (int i = 0; i < n; ++i) {
      if (!(cur.finished >> i & 1U) && cur.locs[i] == map.index(instance.agent(i).goal)) {
        State s = cur;
        s.finished |= 1U << i;
        relax(std::move(s), g, idx);
      }
    }
    // Joint step: every unfinished agent waits or moves.
    std::vector<std::vector<int>> options(n);
    int moving = 0;
    for (int i = 0; i < n; ++i) {
      if (cur.finished >> i & 1U) {
        options[i] = {cur.locs[i]};
      } else {
        ++moving;
        for (Cell c : detail::moves(map, map.cell(cur.locs[i]))) options[i].push_back(map.index(c));
      }
    }
    if (moving == 0) continue;
    std::vector<int> choice(n, 0);
    while (true) {
      State s{std::vector<int>(n), cur.finished};
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        s.locs[i] = options[i][choice[i]];
        for (int j = 0; j < i && ok; ++j) {
          if (s.locs[i] == s.locs[j]) ok = false;
          if (s.locs[i] == cur.locs[j] && s.locs[j] == cur.locs[i] && s.locs[i] != cur.locs[i]) ok = false;
        }
      }
      if (ok) relax(std::move(s), g + moving, idx);
      int k = 0;
      while (k < n && ++choice[k] == static_cast<int>(options[k].size())) choice[k++] = 0;
      if (k == n) break;
    }
  }
  if (goal_record < 0) return std::nullopt;

  std::vector<std::int64_t> chain;
  for (auto i = goal_record; i >= 0; i = records[i].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());
  Solution sol;
  sol.paths.resize(n);
  for (int i = 0; i < n; ++i) sol.paths[i].vertices.push_back(map.cell(records[chain[0]].state.locs[i]));
  for (std::size_t k = 1; k < chain.size(); ++k) {
    const State& prev = records[chain[k - 1]].state;
    const State& s = records[chain[k]].state;
    if (s.finished != prev.finished) continue;  // finish action, no time passes
    for (int i = 0; i < n; ++i) {
      if (!(s.finished >> i & 1U)) sol.paths[i].vertices.push_back(map.cell(s.locs[i]));
    }
  }
  return JointSolution{records[goal_record].g, std::move(sol)};
}

}  // namespace decbs::oracle
