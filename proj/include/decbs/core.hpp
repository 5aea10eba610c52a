#pragma once

// Domain types shared by every solver: grid graph, instances, paths,
// constraints, conflicts, run statistics, and solution validation.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace decbs {

using AgentId = int;

inline constexpr int kInfiniteCost = std::numeric_limits<int>::max();

class InvalidInstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a path does not start/end where it must or uses a non-edge.
// Collisions are never reported through this error.
class InvalidSolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// x is the column, y the row; row 0 is the first line of a map file.
struct Cell {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(Cell, Cell) = default;
  friend constexpr auto operator<=>(Cell, Cell) = default;
};

inline std::ostream& operator<<(std::ostream& os, Cell c) {
  return os << '(' << c.x << ',' << c.y << ')';
}

// Same cell (wait) or 4-neighbours.
constexpr bool is_move_or_wait(Cell a, Cell b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y) <= 1;
}

/// 4-connected grid graph. Every passable cell is a vertex with an implicit
/// wait self-loop; edges join passable 4-neighbours.
class GridMap {
 public:
  GridMap() = default;

  GridMap(int width, int height, std::vector<bool> passable)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw InvalidInstanceError("grid dimensions must be positive");
    }
    if (passable.size() != static_cast<std::size_t>(width) * height) {
      throw InvalidInstanceError("grid cell count does not match width*height");
    }
    passable_.assign(passable.begin(), passable.end());
    passable_count_ = static_cast<int>(std::count(passable_.begin(), passable_.end(), 1));
    build_neighbours();
  }

  // All cells passable.
  static GridMap open(int width, int height) {
    return GridMap(width, height, std::vector<bool>(static_cast<std::size_t>(width) * height, true));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }
  int passable_count() const { return passable_count_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool passable(Cell c) const { return in_bounds(c) && passable_[index(c)] != 0; }
  bool passable(int loc) const { return passable_[loc] != 0; }

  int index(Cell c) const { return c.y * width_ + c.x; }
  Cell cell(int loc) const { return Cell{loc % width_, loc / width_}; }

  // Passable 4-neighbours of a location, -1 padded.
  const std::array<int, 4>& neighbours(int loc) const { return neighbours_[loc]; }

  std::size_t move_edge_count() const {
    std::size_t n = 0;
    for (int loc = 0; loc < cell_count(); ++loc) {
      if (!passable(loc)) continue;
      for (int nb : neighbours_[loc]) n += nb > loc ? 1 : 0;
    }
    return n;
  }

  friend bool operator==(const GridMap& a, const GridMap& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.passable_ == b.passable_;
  }

 private:
  void build_neighbours() {
    neighbours_.assign(cell_count(), {-1, -1, -1, -1});
    static constexpr int kDx[4] = {0, 1, 0, -1};
    static constexpr int kDy[4] = {-1, 0, 1, 0};
    for (int loc = 0; loc < cell_count(); ++loc) {
      if (!passable(loc)) continue;
      const Cell c = cell(loc);
      int k = 0;
      for (int dir = 0; dir < 4; ++dir) {
        const Cell n{c.x + kDx[dir], c.y + kDy[dir]};
        if (passable(n)) neighbours_[loc][k++] = index(n);
      }
    }
  }

  int width_ = 0;
  int height_ = 0;
  int passable_count_ = 0;
  std::vector<std::uint8_t> passable_;
  std::vector<std::array<int, 4>> neighbours_;
};

struct Agent {
  Cell start;
  Cell goal;
};

class MapfInstance {
 public:
  MapfInstance(GridMap map, std::vector<Agent> agents) : map_(std::move(map)), agents_(std::move(agents)) {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const auto& a = agents_[i];
      if (!map_.passable(a.start) || !map_.passable(a.goal)) {
        throw InvalidInstanceError("agent " + std::to_string(i) + " has a blocked start or goal");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (agents_[j].start == a.start) {
          throw InvalidInstanceError("agents " + std::to_string(j) + " and " + std::to_string(i) +
                                     " share a start");
        }
        if (agents_[j].goal == a.goal) {
          throw InvalidInstanceError("agents " + std::to_string(j) + " and " + std::to_string(i) +
                                     " share a goal");
        }
      }
    }
  }

  const GridMap& map() const { return map_; }
  const std::vector<Agent>& agents() const { return agents_; }
  const Agent& agent(AgentId i) const { return agents_[i]; }
  int agent_count() const { return static_cast<int>(agents_.size()); }

 private:
  GridMap map_;
  std::vector<Agent> agents_;
};

/// Sequence of cells v_0..v_T; after T the agent rests on v_T.
struct Path {
  std::vector<Cell> vertices;

  int cost() const { return static_cast<int>(vertices.size()) - 1; }
  bool empty() const { return vertices.empty(); }
  Cell at(int t) const { return vertices[std::min<std::size_t>(t, vertices.size() - 1)]; }
  Cell back() const { return vertices.back(); }

  friend bool operator==(const Path&, const Path&) = default;
};

struct Solution {
  std::vector<Path> paths;
};

inline long long flowtime(const Solution& sol) {
  long long total = 0;
  for (const auto& p : sol.paths) total += p.cost();
  return total;
}

// ---------------------------------------------------------------------------
// Constraints

struct VertexConstraint {
  AgentId agent;
  Cell cell;
  int t;
  friend bool operator==(const VertexConstraint&, const VertexConstraint&) = default;
};

// Forbids occupying `from` at t-1 and `to` at t.
struct EdgeConstraint {
  AgentId agent;
  Cell from;
  Cell to;
  int t;
  friend bool operator==(const EdgeConstraint&, const EdgeConstraint&) = default;
};

// Path cost must be <= t.
struct MaxLengthConstraint {
  AgentId agent;
  int t;
  friend bool operator==(const MaxLengthConstraint&, const MaxLengthConstraint&) = default;
};

// Path cost must be >= t.
struct MinLengthConstraint {
  AgentId agent;
  int t;
  friend bool operator==(const MinLengthConstraint&, const MinLengthConstraint&) = default;
};

using Constraint = std::variant<VertexConstraint, EdgeConstraint, MaxLengthConstraint, MinLengthConstraint>;
using ConstraintSet = std::vector<Constraint>;

inline AgentId constraint_agent(const Constraint& c) {
  return std::visit([](const auto& v) { return v.agent; }, c);
}

inline int constraint_time(const Constraint& c) {
  return std::visit([](const auto& v) { return v.t; }, c);
}

inline std::ostream& operator<<(std::ostream& os, const Constraint& c) {
  std::visit(
      [&os](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, VertexConstraint>) {
          os << "V(" << v.agent << ',' << v.cell << ',' << v.t << ')';
        } else if constexpr (std::is_same_v<T, EdgeConstraint>) {
          os << "E(" << v.agent << ',' << v.from << "->" << v.to << ',' << v.t << ')';
        } else if constexpr (std::is_same_v<T, MaxLengthConstraint>) {
          os << "Len<=(" << v.agent << ',' << v.t << ')';
        } else {
          os << "Len>=(" << v.agent << ',' << v.t << ')';
        }
      },
      c);
  return os;
}

// ---------------------------------------------------------------------------
// Conflicts

enum class ConflictKind { Vertex = 0, Edge = 1, Target = 2 };

/// Vertex: both agents at `cell` at t.
/// Edge: `first` moves cell->to arriving at t while `second` moves to->cell.
/// Target: `second` occupies `cell` (the goal of `first`) at t >= cost of `first`.
struct Conflict {
  ConflictKind kind = ConflictKind::Vertex;
  AgentId first = 0;
  AgentId second = 0;
  int t = 0;
  Cell cell;
  Cell to;

  static Conflict vertex(AgentId i, AgentId j, Cell c, int t) { return {ConflictKind::Vertex, i, j, t, c, c}; }
  static Conflict edge(AgentId i, AgentId j, Cell from, Cell to, int t) {
    return {ConflictKind::Edge, i, j, t, from, to};
  }
  static Conflict target(AgentId resting, AgentId blocker, Cell goal, int t) {
    return {ConflictKind::Target, resting, blocker, t, goal, goal};
  }

  friend bool operator==(const Conflict&, const Conflict&) = default;

  // Earliest first; at equal t vertex before edge, then the smaller agent pair.
  friend bool operator<(const Conflict& a, const Conflict& b) {
    return std::tie(a.t, a.kind, a.first, a.second, a.cell, a.to) <
           std::tie(b.t, b.kind, b.first, b.second, b.cell, b.to);
  }
};

inline std::ostream& operator<<(std::ostream& os, const Conflict& c) {
  static constexpr const char* kNames[] = {"vertex", "edge", "target"};
  os << kNames[static_cast<int>(c.kind)] << '(' << c.first << ',' << c.second << ",t=" << c.t << ',' << c.cell;
  if (c.kind == ConflictKind::Edge) os << "->" << c.to;
  return os << ')';
}

struct RunStats {
  std::uint64_t ct_expanded = 0;
  std::uint64_t ct_generated = 0;
  std::uint64_t ll_shortest_expanded = 0;
  std::uint64_t ll_focal_expanded = 0;
  std::uint64_t ll_bfs_expanded = 0;
  double runtime = 0.0;
  bool solved = false;
  long long solution_cost = -1;  // -1 when unsolved
  long long root_lb = 0;
};

// ---------------------------------------------------------------------------
// Collision detection

namespace detail {

// Collisions between two paths over the window where at least one still moves.
// Appends in increasing t.
template <class Out>
void pair_collisions(const Path& a, const Path& b, AgentId i, AgentId j, Out&& out) {
  const int horizon = std::max(a.cost(), b.cost());
  for (int t = 0; t <= horizon; ++t) {
    const Cell ai = a.at(t);
    const Cell bj = b.at(t);
    if (ai == bj) {
      if (!out(Conflict::vertex(i, j, ai, t))) return;
    } else if (t > 0) {
      const Cell ap = a.at(t - 1);
      if (ap != ai && ap == bj && b.at(t - 1) == ai) {
        if (!out(Conflict::edge(i, j, ap, ai, t))) return;
      }
    }
  }
}

inline int pair_collision_count(const Path& a, const Path& b) {
  int n = 0;
  pair_collisions(a, b, 0, 1, [&n](const Conflict&) {
    ++n;
    return true;
  });
  return n;
}

inline std::optional<Conflict> pair_first_collision(const Path& a, const Path& b, AgentId i, AgentId j) {
  std::optional<Conflict> found;
  pair_collisions(a, b, i, j, [&found](const Conflict& c) {
    found = c;
    return false;
  });
  return found;
}

}  // namespace detail

/// All pairwise collisions of `paths`, sorted by (t, kind, agents).
/// `PathAt` maps an agent id to a const Path&.
template <class PathAt>
std::vector<Conflict> find_collisions(int agent_count, PathAt&& path_at) {
  std::vector<Conflict> out;
  for (AgentId i = 0; i < agent_count; ++i) {
    for (AgentId j = i + 1; j < agent_count; ++j) {
      detail::pair_collisions(path_at(i), path_at(j), i, j, [&out](const Conflict& c) {
        out.push_back(c);
        return true;
      });
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <class PathAt>
std::optional<Conflict> first_collision(int agent_count, PathAt&& path_at) {
  std::optional<Conflict> best;
  for (AgentId i = 0; i < agent_count; ++i) {
    for (AgentId j = i + 1; j < agent_count; ++j) {
      auto c = detail::pair_first_collision(path_at(i), path_at(j), i, j);
      if (c && (!best || *c < *best)) best = c;
    }
  }
  return best;
}

template <class PathAt>
int count_collisions(int agent_count, PathAt&& path_at) {
  int n = 0;
  for (AgentId i = 0; i < agent_count; ++i) {
    for (AgentId j = i + 1; j < agent_count; ++j) n += detail::pair_collision_count(path_at(i), path_at(j));
  }
  return n;
}

// Collisions between agent k and every other agent.
template <class PathAt>
int count_agent_collisions(int agent_count, AgentId k, PathAt&& path_at) {
  int n = 0;
  for (AgentId j = 0; j < agent_count; ++j) {
    if (j != k) n += detail::pair_collision_count(path_at(k), path_at(j));
  }
  return n;
}

inline std::vector<Conflict> find_collisions(const Solution& sol) {
  return find_collisions(static_cast<int>(sol.paths.size()), [&sol](AgentId i) -> const Path& { return sol.paths[i]; });
}

inline std::optional<Conflict> get_first_collision(const Solution& sol) {
  return first_collision(static_cast<int>(sol.paths.size()), [&sol](AgentId i) -> const Path& { return sol.paths[i]; });
}

inline int count_collisions(const Solution& sol) {
  return count_collisions(static_cast<int>(sol.paths.size()), [&sol](AgentId i) -> const Path& { return sol.paths[i]; });
}

/// Throws InvalidSolutionError on structural problems (wrong path count, empty
/// path, wrong endpoints, blocked cell, non-edge step).
inline void check_structure(const MapfInstance& instance, const Solution& sol) {
  if (sol.paths.size() != static_cast<std::size_t>(instance.agent_count())) {
    throw InvalidSolutionError("expected " + std::to_string(instance.agent_count()) + " paths, got " +
                               std::to_string(sol.paths.size()));
  }
  const auto& map = instance.map();
  for (AgentId i = 0; i < instance.agent_count(); ++i) {
    const Path& p = sol.paths[i];
    const std::string who = "agent " + std::to_string(i);
    if (p.empty()) throw InvalidSolutionError(who + " has an empty path");
    if (p.vertices.front() != instance.agent(i).start) throw InvalidSolutionError(who + " does not start at its start");
    if (p.back() != instance.agent(i).goal) throw InvalidSolutionError(who + " does not end at its goal");
    for (std::size_t t = 0; t < p.vertices.size(); ++t) {
      if (!map.passable(p.vertices[t])) {
        throw InvalidSolutionError(who + " visits a blocked cell at t=" + std::to_string(t));
      }
      if (t > 0 && !is_move_or_wait(p.vertices[t - 1], p.vertices[t])) {
        throw InvalidSolutionError(who + " jumps between non-adjacent cells at t=" + std::to_string(t));
      }
    }
  }
}

/// Every vertex and edge collision, including those against agents resting at
/// their goals. Empty result means the solution is valid.
inline std::vector<Conflict> validate_solution(const MapfInstance& instance, const Solution& sol) {
  check_structure(instance, sol);
  return find_collisions(sol);
}

}  // namespace decbs
