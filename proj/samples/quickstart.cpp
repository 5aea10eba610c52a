// Solve a small instance with DECBS(w = 1.1) and print each agent's path.

#include <iostream>

#include "decbs/high_level.hpp"
#include "decbs/io.hpp"

int main() {
  const auto map = decbs::io::parse_map(
      "type octile\n"
      "height 4\n"
      "width 5\n"
      "map\n"
      ".....\n"
      ".@.@.\n"
      ".....\n"
      "..@..\n");
  // start and goal per agent, {x, y}
  decbs::MapfInstance instance(map, {{{0, 0}, {4, 2}}, {{4, 0}, {0, 2}}, {{2, 0}, {2, 2}}});

  auto config = decbs::SolverConfig::decbs(decbs::SuboptimalityFactor::parse("1.1")).with_bc().with_tr();
  const auto result = decbs::solve(instance, config);
  if (!result.solution) {
    std::cout << "no solution: " << decbs::to_string(result.status) << "\n";
    return 1;
  }
  for (std::size_t i = 0; i < result.solution->paths.size(); ++i) {
    std::cout << "agent " << i << ":";
    for (const auto& c : result.solution->paths[i].vertices) std::cout << " (" << c.x << "," << c.y << ")";
    std::cout << "\n";
  }
  std::cout << "flowtime " << decbs::flowtime(*result.solution) << ", lower bound " << result.stats.root_lb
            << ", CT nodes expanded " << result.stats.ct_expanded << "\n";
}
