#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "dopf/case.hpp"

namespace dopf {

/// Directed graph over the same node set as a Graph; edges as (tail, head).
struct Dag {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;

  std::vector<std::vector<int>> out_adj() const {
    std::vector<std::vector<int>> out(num_nodes);
    for (auto [t, h] : edges) out[t].push_back(h);
    return out;
  }
};

struct AcyclicityResult {
  bool acyclic = true;
  std::vector<int> topo_order;   // valid when acyclic
  std::vector<int> witness_cycle;  // node sequence of one cycle otherwise
};

inline AcyclicityResult check_acyclic(const Dag& d) {
  AcyclicityResult res;
  auto out = d.out_adj();
  std::vector<int> indeg(d.num_nodes, 0);
  for (auto [t, h] : d.edges) ++indeg[h];
  std::vector<int> q;
  for (int v = 0; v < d.num_nodes; ++v)
    if (indeg[v] == 0) q.push_back(v);
  for (size_t qi = 0; qi < q.size(); ++qi) {
    int v = q[qi];
    res.topo_order.push_back(v);
    for (int w : out[v])
      if (--indeg[w] == 0) q.push_back(w);
  }
  if (static_cast<int>(res.topo_order.size()) == d.num_nodes) return res;
  // walk forward inside the residual (all-cycles) subgraph until a repeat
  res.acyclic = false;
  res.topo_order.clear();
  std::vector<char> residual(d.num_nodes, 0);
  for (int v = 0; v < d.num_nodes; ++v) residual[v] = indeg[v] > 0;
  int v = 0;
  while (!residual[v]) ++v;
  std::vector<int> pos(d.num_nodes, -1);
  std::vector<int> walk;
  while (pos[v] < 0) {
    pos[v] = static_cast<int>(walk.size());
    walk.push_back(v);
    for (int w : out[v])
      if (residual[w]) {
        v = w;
        break;
      }
  }
  res.witness_cycle.assign(walk.begin() + pos[v], walk.end());
  return res;
}

/// Length in edges of the longest directed path.
inline int longest_path(const Dag& d) {
  auto ac = check_acyclic(d);
  if (!ac.acyclic) throw std::invalid_argument("longest_path: graph has a cycle");
  auto out = d.out_adj();
  std::vector<int> len(d.num_nodes, 0);
  int best = 0;
  for (auto it = ac.topo_order.rbegin(); it != ac.topo_order.rend(); ++it) {
    for (int w : out[*it]) len[*it] = std::max(len[*it], 1 + len[w]);
    best = std::max(best, len[*it]);
  }
  return best;
}

/// Orientation induced by distinct priorities: tail has the smaller priority.
inline Dag orient_by_priority(const Graph& g, const std::vector<int>& eta) {
  Dag d;
  d.num_nodes = g.num_nodes();
  for (auto [u, v] : g.edges) {
    if (eta[u] == eta[v])
      throw std::invalid_argument("priority tie on edge " + std::to_string(u) +
                                  "-" + std::to_string(v));
    if (eta[u] < eta[v])
      d.edges.emplace_back(u, v);
    else
      d.edges.emplace_back(v, u);
  }
  return d;
}

struct DegeneracyResult {
  int degeneracy = 0;
  std::vector<int> elimination_order;  // repeated minimum-degree removal
};

inline DegeneracyResult graph_degeneracy(const Graph& g) {
  DegeneracyResult res;
  const int n = g.num_nodes();
  std::vector<int> deg(n);
  std::vector<char> gone(n, 0);
  for (int v = 0; v < n; ++v) deg[v] = g.degree(v);
  for (int step = 0; step < n; ++step) {
    int v = -1;
    for (int u = 0; u < n; ++u)
      if (!gone[u] && (v < 0 || deg[u] < deg[v])) v = u;
    res.degeneracy = std::max(res.degeneracy, deg[v]);
    gone[v] = 1;
    res.elimination_order.push_back(v);
    for (int w : g.adj[v])
      if (!gone[w]) --deg[w];
  }
  return res;
}

constexpr int kUnboundedM = -1;  // no cap-raising: caps stay pinned at h0

struct OrientationState {
  std::vector<int> eta;
  std::vector<int> hbar;
  std::vector<int> m;
  std::vector<long> update_count;  // eta updates per node
  bool converged = false;
  long ticks = 0;

  int final_hbar() const {
    return *std::max_element(hbar.begin(), hbar.end());
  }
};

namespace detail {

inline std::vector<int> out_neighbors(const Graph& g, const std::vector<int>& eta,
                                      int i) {
  std::vector<int> out;
  for (int k : g.adj[i])
    if (eta[k] > eta[i]) out.push_back(k);
  return out;
}

}  // namespace detail

/// Distributed out-degree bounding: each activated node whose out-degree
/// reached its cap jumps above all its out-neighbors (becoming a sink), and
/// raises the cap after mbar consecutive jumps. Nodes activate round-robin in
/// a seeded random order, one per tick. With mbar == kUnboundedM the caps are
/// pinned at h0 and a non-convergence certificate is issued once any node has
/// updated more than n*(|E|+1) times.
inline OrientationState run_outdegree_bounding(const Graph& g, int mbar, int h0,
                                               std::vector<int> eta0,
                                               unsigned seed = 0) {
  const int n = g.num_nodes();
  if (h0 < 2 || h0 > 6) throw std::invalid_argument("h0 must be in [2,6]");
  if (mbar != kUnboundedM && mbar < 1)
    throw std::invalid_argument("mbar must be >= 1");
  for (auto [u, v] : g.edges)
    if (eta0[u] == eta0[v])
      throw std::invalid_argument("initial priorities tie on an edge");

  OrientationState st;
  st.eta = std::move(eta0);
  st.hbar.assign(n, h0);
  st.m.assign(n, 0);
  st.update_count.assign(n, 0);

  const long cert_threshold = static_cast<long>(n) * (g.num_edges() + 1);
  std::mt19937 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  bool any_over_threshold = false;
  while (!any_over_threshold) {
    std::shuffle(order.begin(), order.end(), rng);
    bool changed = false;
    for (int i : order) {
      ++st.ticks;
      auto out = detail::out_neighbors(g, st.eta, i);
      if (static_cast<int>(out.size()) < st.hbar[i]) continue;
      if (st.hbar[i] == 6 || mbar == kUnboundedM || st.m[i] <= mbar) {
        int mx = st.eta[i];
        for (int k : out) mx = std::max(mx, st.eta[k]);
        st.eta[i] = mx + 1;
        ++st.m[i];
        ++st.update_count[i];
        changed = true;
        if (!detail::out_neighbors(g, st.eta, i).empty())
          throw std::logic_error("priority jump did not produce a sink");
        if (mbar == kUnboundedM && st.update_count[i] > cert_threshold)
          any_over_threshold = true;
      } else {
        st.m[i] = 0;
        ++st.hbar[i];
        changed = true;
      }
    }
    if (!changed) {
      st.converged = true;
      break;
    }
    if (mbar != kUnboundedM && st.ticks > 1000 * (cert_threshold + 1))
      throw std::runtime_error("out-degree bounding exceeded its tick budget");
  }
  return st;
}

struct ColoringResult {
  std::vector<int> zeta;  // in {1..hbar_i}
  Dag dag;                // edges directed from smaller to larger color
  long ticks = 0;
};

/// Distributed coloring over a converged orientation state: an activated
/// node in conflict with a higher-priority neighbor moves to the smallest
/// color not used by any of its higher-priority neighbors. A free color
/// exists because out-degree <= hbar_i - 1.
inline ColoringResult run_coloring(const Graph& g, const OrientationState& st,
                                   unsigned seed = 0) {
  const int n = g.num_nodes();
  ColoringResult res;
  res.zeta.assign(n, 1);
  std::mt19937 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const long budget = 100L * n * (g.num_edges() + 1) + 100;
  while (true) {
    std::shuffle(order.begin(), order.end(), rng);
    bool changed = false;
    for (int i : order) {
      ++res.ticks;
      auto out = detail::out_neighbors(g, st.eta, i);
      bool conflict = std::any_of(out.begin(), out.end(), [&](int k) {
        return res.zeta[k] == res.zeta[i];
      });
      if (!conflict) continue;
      std::vector<char> used(st.hbar[i] + 2, 0);
      for (int k : out)
        if (res.zeta[k] <= st.hbar[i]) used[res.zeta[k]] = 1;
      int c = 1;
      while (used[c]) ++c;
      if (c > st.hbar[i])
        throw std::logic_error("no free color within cap");
      res.zeta[i] = c;
      changed = true;
    }
    if (!changed) break;
    if (res.ticks > budget)
      throw std::runtime_error("coloring did not stabilize within budget");
  }
  res.dag.num_nodes = n;
  for (auto [u, v] : g.edges) {
    if (res.zeta[u] == res.zeta[v])
      throw std::logic_error("coloring left a monochromatic edge");
    if (res.zeta[u] < res.zeta[v])
      res.dag.edges.emplace_back(u, v);
    else
      res.dag.edges.emplace_back(v, u);
  }
  return res;
}

/// Algorithms 2+3 back to back with eta0 = bus id; the standard automatic
/// orientation pipeline.
inline ColoringResult auto_orient(const Graph& g, int mbar, int h0,
                                  unsigned seed, OrientationState* state_out =
                                                    nullptr) {
  OrientationState st =
      run_outdegree_bounding(g, mbar, h0, g.bus_ids, seed);
  if (!st.converged)
    throw std::runtime_error("out-degree bounding did not converge");
  ColoringResult col = run_coloring(g, st, seed + 1);
  if (state_out) *state_out = st;
  return col;
}

/// Random distinct priorities; used for the arbitrary-orientation ablation.
inline Dag random_orientation(const Graph& g, unsigned seed) {
  std::vector<int> eta(g.num_nodes());
  std::iota(eta.begin(), eta.end(), 0);
  std::mt19937 rng(seed);
  std::shuffle(eta.begin(), eta.end(), rng);
  return orient_by_priority(g, eta);
}

}  // namespace dopf
