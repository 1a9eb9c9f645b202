#include <catch2/catch_amalgamated.hpp>

#include "dopf/oracle.hpp"

using namespace dopf;

namespace {

CaseData symmetric_two_bus() {
  CaseData cd;
  for (int i = 1; i <= 2; ++i) {
    Bus b;
    b.id = i;
    b.is_generator = true;
    b.p_min = 0.0;
    b.p_max = 1.0;
    b.q_min = -1.0;
    b.q_max = 1.0;
    b.v_min = 0.9;
    b.v_max = 1.1;
    b.cost_c2 = 0.0;
    b.cost_c1 = 2.0;
    cd.buses.push_back(b);
  }
  Branch br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.series_admittance = {1.0, -4.0};
  cd.branches.push_back(br);
  return cd;
}

Graph complete_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  return Graph::from_edges(n, edges);
}

}  // namespace

TEST_CASE("grid search on tiny networks") {
  SECTION("zero demand with positive marginal cost idles the generators") {
    BruteForceResult res = brute_force_opf(symmetric_two_bus());
    REQUIRE(res.objective == Catch::Approx(0.0).margin(1e-4));
  }
  SECTION("demand above the generation box has no feasible point") {
    CaseData cd = symmetric_two_bus();
    for (auto& b : cd.buses) {
      b.p_demand = 5.0;  // the line cannot carry this within the boxes
      b.p_max = 1.0;
    }
    REQUIRE_THROWS_AS(brute_force_opf(cd), NoFeasiblePointError);
  }
  SECTION("more than three buses is refused") {
    CaseData cd = symmetric_two_bus();
    for (int id = 3; id <= 4; ++id) {
      Bus b = cd.buses[0];
      b.id = id;
      cd.buses.push_back(b);
      Branch br = cd.branches[0];
      br.from_bus = id - 1;
      br.to_bus = id;
      cd.branches.push_back(br);
    }
    REQUIRE_THROWS_AS(brute_force_opf(cd), std::invalid_argument);
  }
}

TEST_CASE("chromatic number by backtracking") {
  REQUIRE(exhaustive_chromatic(complete_graph(3)) == 3);
  REQUIRE(exhaustive_chromatic(complete_graph(5)) == 5);
  REQUIRE(exhaustive_chromatic(
              Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}})) == 2);
  // odd cycle
  REQUIRE(exhaustive_chromatic(Graph::from_edges(
              5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}})) == 3);
}

TEST_CASE("chromatic number equals one plus the best orientation depth") {
  // a wheel over a five-cycle, chi = 4
  Graph wheel = Graph::from_edges(
      6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0},
          {5, 0}, {5, 1}, {5, 2}, {5, 3}, {5, 4}});
  REQUIRE(exhaustive_chromatic(wheel) ==
          1 + min_orientation_longest_path(wheel));
  // Petersen-like fixture: the 8-node cube graph, chi = 2
  Graph cube = Graph::from_edges(
      8, {{0, 1}, {1, 2}, {2, 3}, {3, 0},
          {4, 5}, {5, 6}, {6, 7}, {7, 4},
          {0, 4}, {1, 5}, {2, 6}, {3, 7}});
  REQUIRE(exhaustive_chromatic(cube) == 2);
  REQUIRE(min_orientation_longest_path(cube) == 1);
}
