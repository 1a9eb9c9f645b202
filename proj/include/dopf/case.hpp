#pragma once

#include <algorithm>
#include <complex>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dopf {

/// Raised on malformed input files or on case data violating a structural
/// invariant (duplicate ids, disconnected graph, inverted bounds, ...).
class CaseError : public std::runtime_error {
 public:
  explicit CaseError(const std::string& what) : std::runtime_error(what) {}
};

struct Bus {
  int id = 0;  // positive, unique
  bool is_generator = false;
  double p_demand = 0.0;  // p.u.
  double q_demand = 0.0;
  double p_min = 0.0, p_max = 0.0;  // generation box, p.u.
  double q_min = 0.0, q_max = 0.0;
  double v_min = 0.0, v_max = 0.0;  // voltage magnitude box, p.u.
  double cost_c2 = 0.0;             // quadratic cost coefficient, >= 0
  double cost_c1 = 0.0;

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  std::complex<double> series_admittance;  // y_ik, p.u.
  double shunt_susceptance = 0.0;          // total line charging, p.u.
  // Squared-magnitude bound on the voltage difference; +inf means no limit.
  double vdiff_max = std::numeric_limits<double>::infinity();

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct CaseData {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;

  friend bool operator==(const CaseData&, const CaseData&) = default;

  const Bus& bus_by_id(int id) const {
    for (const auto& b : buses)
      if (b.id == id) return b;
    throw CaseError("unknown bus id " + std::to_string(id));
  }
};

/// Undirected simple graph over 0-based node indices, with the mapping back
/// to bus ids. Edge lists and adjacencies are sorted, so everything derived
/// from a Graph is deterministic.
struct Graph {
  std::vector<int> bus_ids;                  // index -> bus id, ascending
  std::vector<std::pair<int, int>> edges;    // (u,v) with u < v, sorted
  std::vector<std::vector<int>> adj;         // sorted neighbor indices

  int num_nodes() const { return static_cast<int>(bus_ids.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  int index_of(int bus_id) const {
    auto it = std::lower_bound(bus_ids.begin(), bus_ids.end(), bus_id);
    if (it == bus_ids.end() || *it != bus_id)
      throw CaseError("unknown bus id " + std::to_string(bus_id));
    return static_cast<int>(it - bus_ids.begin());
  }

  int degree(int v) const { return static_cast<int>(adj[v].size()); }

  int edge_index(int u, int v) const {
    if (u > v) std::swap(u, v);
    auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(u, v));
    if (it == edges.end() || *it != std::make_pair(u, v))
      throw CaseError("no such edge");
    return static_cast<int>(it - edges.begin());
  }

  double average_degree() const {
    return num_nodes() ? 2.0 * num_edges() / num_nodes() : 0.0;
  }

  bool connected() const {
    if (bus_ids.empty()) return true;
    std::vector<char> seen(bus_ids.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
    }
    return count == num_nodes();
  }

  static Graph from_edges(int n, std::vector<std::pair<int, int>> edge_list) {
    Graph g;
    g.bus_ids.resize(n);
    for (int i = 0; i < n; ++i) g.bus_ids[i] = i + 1;
    for (auto& [u, v] : edge_list)
      if (u > v) std::swap(u, v);
    std::sort(edge_list.begin(), edge_list.end());
    edge_list.erase(std::unique(edge_list.begin(), edge_list.end()), edge_list.end());
    g.edges = std::move(edge_list);
    g.adj.assign(n, {});
    for (auto [u, v] : g.edges) {
      g.adj[u].push_back(v);
      g.adj[v].push_back(u);
    }
    for (auto& a : g.adj) std::sort(a.begin(), a.end());
    return g;
  }
};

inline Graph build_graph(const CaseData& cd) {
  Graph g;
  g.bus_ids.reserve(cd.buses.size());
  for (const auto& b : cd.buses) g.bus_ids.push_back(b.id);
  std::sort(g.bus_ids.begin(), g.bus_ids.end());
  for (const auto& br : cd.branches) {
    int u = g.index_of(br.from_bus);
    int v = g.index_of(br.to_bus);
    if (u > v) std::swap(u, v);
    g.edges.emplace_back(u, v);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.adj.assign(g.num_nodes(), {});
  for (auto [u, v] : g.edges) {
    g.adj[u].push_back(v);
    g.adj[v].push_back(u);
  }
  for (auto& a : g.adj) std::sort(a.begin(), a.end());
  return g;
}

/// Checks every structural invariant of CaseData; throws CaseError on the
/// first violation. Planarity is assumed, not checked.
inline void validate_case(const CaseData& cd) {
  if (cd.base_mva <= 0) throw CaseError("base_mva must be positive");
  std::map<int, int> id_count;
  for (const auto& b : cd.buses) {
    if (b.id <= 0) throw CaseError("bus ids must be positive");
    if (++id_count[b.id] > 1)
      throw CaseError("duplicate bus id " + std::to_string(b.id));
    if (b.p_min > b.p_max)
      throw CaseError("bus " + std::to_string(b.id) + ": p_min > p_max");
    if (b.q_min > b.q_max)
      throw CaseError("bus " + std::to_string(b.id) + ": q_min > q_max");
    if (!(0 < b.v_min && b.v_min <= b.v_max))
      throw CaseError("bus " + std::to_string(b.id) + ": need 0 < v_min <= v_max");
    if (b.cost_c2 < 0)
      throw CaseError("bus " + std::to_string(b.id) + ": cost_c2 < 0");
  }
  for (const auto& br : cd.branches) {
    if (br.from_bus == br.to_bus)
      throw CaseError("self-loop at bus " + std::to_string(br.from_bus));
    for (int id : {br.from_bus, br.to_bus})
      if (!id_count.count(id))
        throw CaseError("branch references unknown bus " + std::to_string(id));
  }
  // Simplicity after aggregation: no two branches over the same bus pair.
  std::map<std::pair<int, int>, int> pair_count;
  for (const auto& br : cd.branches) {
    auto key = std::minmax(br.from_bus, br.to_bus);
    if (++pair_count[{key.first, key.second}] > 1)
      throw CaseError("parallel branches between " + std::to_string(br.from_bus) +
                      " and " + std::to_string(br.to_bus));
  }
  if (!cd.buses.empty() && !build_graph(cd).connected())
    throw CaseError("network graph is not connected");
}

}  // namespace dopf
