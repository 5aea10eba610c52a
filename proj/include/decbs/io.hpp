#pragma once

// MovingAI-style .map / .scen readers and the comma-separated results format.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "decbs/core.hpp"

namespace decbs::io {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline int to_int(const std::string& s, int line, const char* field) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ParseError(line, std::string("bad integer for ") + field + ": '" + s + "'");
  return v;
}

inline double to_double(const std::string& s, int line, const char* field) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ParseError(line, std::string("bad number for ") + field + ": '" + s + "'");
  return v;
}

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Header `type octile`, `height H`, `width W`, `map`, then H rows of W glyphs.
/// '.' and 'G' are passable; '@', 'O' and 'T' are blocked.
inline GridMap parse_map(std::string_view text) {
  const auto lines = detail::split_lines(text);
  auto header = [&](std::size_t idx, std::string_view key) -> std::vector<std::string> {
    const int line = static_cast<int>(idx) + 1;
    if (idx >= lines.size()) throw ParseError(line, "missing '" + std::string(key) + "' header");
    auto toks = detail::split_ws(lines[idx]);
    if (toks.empty() || toks[0] != key) throw ParseError(line, "expected '" + std::string(key) + "' header");
    return toks;
  };
  auto type = header(0, "type");
  if (type.size() != 2 || type[1] != "octile") throw ParseError(1, "expected 'type octile'");
  auto h = header(1, "height");
  auto w = header(2, "width");
  if (h.size() != 2) throw ParseError(2, "expected 'height H'");
  if (w.size() != 2) throw ParseError(3, "expected 'width W'");
  const int height = detail::to_int(h[1], 2, "height");
  const int width = detail::to_int(w[1], 3, "width");
  if (height <= 0 || width <= 0) throw ParseError(height <= 0 ? 2 : 3, "dimensions must be positive");
  auto m = header(3, "map");
  if (m.size() != 1) throw ParseError(4, "expected 'map'");

  std::vector<bool> passable;
  passable.reserve(static_cast<std::size_t>(width) * height);
  for (int row = 0; row < height; ++row) {
    const std::size_t idx = 4 + row;
    const int line = static_cast<int>(idx) + 1;
    if (idx >= lines.size()) throw ParseError(line, "grid truncated: expected " + std::to_string(height) + " rows");
    const std::string& body = lines[idx];
    if (static_cast<int>(body.size()) != width) {
      throw ParseError(line, "row has " + std::to_string(body.size()) + " cells, expected " + std::to_string(width));
    }
    for (char ch : body) {
      switch (ch) {
        case '.':
        case 'G':
          passable.push_back(true);
          break;
        case '@':
        case 'O':
        case 'T':
          passable.push_back(false);
          break;
        default:
          throw ParseError(line, std::string("unknown map glyph '") + ch + "'");
      }
    }
  }
  if (lines.size() > static_cast<std::size_t>(4 + height)) {
    throw ParseError(5 + height, "more rows than the declared height");
  }
  return GridMap(width, height, std::move(passable));
}

inline std::string render_map(const GridMap& map) {
  std::string out = "type octile\nheight " + std::to_string(map.height()) + "\nwidth " + std::to_string(map.width()) +
                    "\nmap\n";
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) out += map.passable(Cell{x, y}) ? '.' : '@';
    out += '\n';
  }
  return out;
}

inline GridMap load_map(const std::string& path) { return parse_map(read_file(path)); }

struct ScenarioEntry {
  int bucket = 0;
  std::string map_name;
  int map_width = 0;
  int map_height = 0;
  Cell start;
  Cell goal;
  double reference_length = 0.0;  // octile distance from the benchmark; not used by the solvers
};

/// `version 1`, then one tab-separated entry per line:
/// bucket map width height start_x start_y goal_x goal_y reference_length.
inline std::vector<ScenarioEntry> parse_scen(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError(1, "empty scenario");
  const auto head = detail::split_ws(lines[0]);
  if (head.size() != 2 || head[0] != "version") throw ParseError(1, "expected 'version 1'");
  detail::to_double(head[1], 1, "version");

  std::vector<ScenarioEntry> entries;
  for (std::size_t idx = 1; idx < lines.size(); ++idx) {
    const int line = static_cast<int>(idx) + 1;
    if (lines[idx].find_first_not_of(" \t") == std::string::npos) continue;
    const auto f = detail::split_ws(lines[idx]);
    if (f.size() != 9) throw ParseError(line, "expected 9 fields, got " + std::to_string(f.size()));
    ScenarioEntry e;
    e.bucket = detail::to_int(f[0], line, "bucket");
    e.map_name = f[1];
    e.map_width = detail::to_int(f[2], line, "width");
    e.map_height = detail::to_int(f[3], line, "height");
    e.start = {detail::to_int(f[4], line, "start x"), detail::to_int(f[5], line, "start y")};
    e.goal = {detail::to_int(f[6], line, "goal x"), detail::to_int(f[7], line, "goal y")};
    e.reference_length = detail::to_double(f[8], line, "reference length");
    auto inside = [&e](Cell c) { return c.x >= 0 && c.y >= 0 && c.x < e.map_width && c.y < e.map_height; };
    if (!inside(e.start)) throw ParseError(line, "start outside the declared map");
    if (!inside(e.goal)) throw ParseError(line, "goal outside the declared map");
    if (e.start == e.goal) throw ParseError(line, "start equals goal");
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<ScenarioEntry> load_scen(const std::string& path) { return parse_scen(read_file(path)); }

/// First `agents` entries as an instance. Throws InvalidInstanceError on
/// duplicate starts/goals or blocked cells, std::invalid_argument when the
/// scenario is too short or made for another grid size.
inline MapfInstance build_instance(const GridMap& map, const std::vector<ScenarioEntry>& entries, int agents) {
  if (agents < 0 || static_cast<std::size_t>(agents) > entries.size()) {
    throw std::invalid_argument("requested " + std::to_string(agents) + " agents but the scenario has " +
                                std::to_string(entries.size()) + " entries");
  }
  std::vector<Agent> out;
  out.reserve(agents);
  for (int i = 0; i < agents; ++i) {
    const auto& e = entries[i];
    if (e.map_width != map.width() || e.map_height != map.height()) {
      throw std::invalid_argument("scenario entry " + std::to_string(i) + " was made for a " +
                                  std::to_string(e.map_width) + "x" + std::to_string(e.map_height) + " map");
    }
    out.push_back({e.start, e.goal});
  }
  return MapfInstance(map, std::move(out));
}

// ---------------------------------------------------------------------------
// Results

struct ResultRow {
  std::string map;
  std::string scen;
  int agents = 0;
  double w = 1.0;
  std::string solver;
  bool bc = false;
  bool tr = false;
  bool valid = true;  // solution passed validate_solution (true for unsolved rows)
  RunStats stats;
};

struct CsvOptions {
  bool include_runtime = true;
};

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "map",          "scen",         "agents",          "w",
      "solver",       "bc",           "tr",              "solved",
      "valid",        "cost",         "root_lb",         "ct_expanded",
      "ct_generated", "ll_shortest_expanded", "ll_focal_expanded", "ll_bfs_expanded",
      "runtime"};
  return cols;
}

namespace detail {

inline std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv(const std::string& line, int lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(lineno, "unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

inline std::uint64_t to_u64(const std::string& s, int line) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ParseError(line, "bad counter '" + s + "'");
  return v;
}

inline bool to_flag(const std::string& s, int line) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ParseError(line, "bad flag '" + s + "'");
}

}  // namespace detail

/// Fixed header, one row per run, columns in result_columns() order. Floats
/// use 6 significant digits; an unsolved cost is written as "inf".
inline void write_results(const std::vector<ResultRow>& rows, std::ostream& out, CsvOptions opts = {}) {
  const auto& cols = result_columns();
  const std::size_t ncols = opts.include_runtime ? cols.size() : cols.size() - 1;
  for (std::size_t i = 0; i < ncols; ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : rows) {
    const auto& s = r.stats;
    out << detail::quote(r.map) << ',' << detail::quote(r.scen) << ',' << r.agents << ','
        << detail::format_float(r.w) << ',' << detail::quote(r.solver) << ',' << int(r.bc) << ',' << int(r.tr)
        << ',' << int(s.solved) << ',' << int(r.valid) << ','
        << (s.solved ? std::to_string(s.solution_cost) : std::string("inf")) << ',' << s.root_lb << ','
        << s.ct_expanded << ',' << s.ct_generated << ',' << s.ll_shortest_expanded << ',' << s.ll_focal_expanded
        << ',' << s.ll_bfs_expanded;
    if (opts.include_runtime) out << ',' << detail::format_float(s.runtime);
    out << '\n';
  }
}

inline void write_results(const std::vector<ResultRow>& rows, const std::string& path, CsvOptions opts = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_results(rows, out, opts);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

/// Reads what write_results produced (with or without the runtime column).
inline std::vector<ResultRow> read_results(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing results header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv(line, lineno);
  const auto& cols = result_columns();
  const bool with_runtime = header.size() == cols.size();
  if ((header.size() != cols.size() && header.size() + 1 != cols.size()) ||
      !std::equal(header.begin(), header.end(), cols.begin())) {
    throw ParseError(1, "unexpected results header");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv(line, lineno);
    if (f.size() != header.size()) throw ParseError(lineno, "wrong column count");
    ResultRow r;
    r.map = f[0];
    r.scen = f[1];
    r.agents = ::decbs::io::detail::to_int(f[2], lineno, "agents");
    r.w = ::decbs::io::detail::to_double(f[3], lineno, "w");
    r.solver = f[4];
    r.bc = detail::to_flag(f[5], lineno);
    r.tr = detail::to_flag(f[6], lineno);
    r.stats.solved = detail::to_flag(f[7], lineno);
    r.valid = detail::to_flag(f[8], lineno);
    r.stats.solution_cost = f[9] == "inf" ? -1 : static_cast<long long>(detail::to_u64(f[9], lineno));
    r.stats.root_lb = static_cast<long long>(detail::to_u64(f[10], lineno));
    r.stats.ct_expanded = detail::to_u64(f[11], lineno);
    r.stats.ct_generated = detail::to_u64(f[12], lineno);
    r.stats.ll_shortest_expanded = detail::to_u64(f[13], lineno);
    r.stats.ll_focal_expanded = detail::to_u64(f[14], lineno);
    r.stats.ll_bfs_expanded = detail::to_u64(f[15], lineno);
    if (with_runtime) r.stats.runtime = ::decbs::io::detail::to_double(f[16], lineno, "runtime");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_results(in);
}

}  // namespace decbs::io
