#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "dopf/case.hpp"
#include "dopf/network_matrices.hpp"
#include "dopf/orientation.hpp"

namespace dopf {

struct BruteForceResult {
  Eigen::VectorXcd V;
  double objective = 0.0;
};

class NoFeasiblePointError : public std::runtime_error {
 public:
  explicit NoFeasiblePointError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Exhaustive coarse-to-fine grid search over per-bus voltage phasors
/// (magnitude and angle, bus-1 angle pinned to zero) for the rank-1 problem.
/// Independent of all solver code paths: power flows come straight from
/// S = V .* conj(YV).
inline BruteForceResult brute_force_opf(const CaseData& cd,
                                        int points_per_dim = 15,
                                        int levels = 3) {
  const Graph g = build_graph(cd);
  const int n = g.num_nodes();
  if (n > 3) throw std::invalid_argument("brute force oracle limited to 3 buses");
  const Eigen::MatrixXcd Y = build_admittance(cd, g);
  std::vector<Bus> bus(n);
  for (int i = 0; i < n; ++i) bus[i] = cd.bus_by_id(g.bus_ids[i]);
  struct Lim {
    int u, v;
    double vd;
  };
  std::vector<Lim> lims;
  for (const auto& br : cd.branches)
    if (!std::isinf(br.vdiff_max))
      lims.push_back({g.index_of(br.from_bus), g.index_of(br.to_bus),
                      br.vdiff_max});

  auto evaluate = [&](const Eigen::VectorXcd& V, double* obj) {
    for (int i = 0; i < n; ++i) {
      double m = std::abs(V(i));
      if (m < bus[i].v_min - 1e-12 || m > bus[i].v_max + 1e-12) return false;
    }
    for (const auto& l : lims)
      if (std::norm(V(l.u) - V(l.v)) > l.vd + 1e-12) return false;
    Eigen::VectorXcd I = Y * V;
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
      Complex S = V(i) * std::conj(I(i));
      double pg = S.real() + bus[i].p_demand;
      double qg = S.imag() + bus[i].q_demand;
      if (pg < bus[i].p_min - 1e-9 || pg > bus[i].p_max + 1e-9) return false;
      if (qg < bus[i].q_min - 1e-9 || qg > bus[i].q_max + 1e-9) return false;
      if (bus[i].is_generator)
        cost += bus[i].cost_c2 * pg * pg + bus[i].cost_c1 * pg;
    }
    *obj = cost;
    return true;
  };

  // search coordinates: E_0..E_{n-1}, theta_1..theta_{n-1}
  const int dims = 2 * n - 1;
  std::vector<double> lo(dims), hi(dims), best(dims);
  for (int i = 0; i < n; ++i) {
    lo[i] = bus[i].v_min;
    hi[i] = bus[i].v_max;
  }
  for (int i = 1; i < n; ++i) {
    lo[n + i - 1] = -M_PI / 2;
    hi[n + i - 1] = M_PI / 2;
  }
  bool found = false;
  double best_obj = 0.0;
  std::vector<double> coord(dims);
  for (int level = 0; level < levels; ++level) {
    std::vector<int> idx(dims, 0);
    bool done = false;
    while (!done) {
      for (int d = 0; d < dims; ++d)
        coord[d] = points_per_dim == 1
                       ? (lo[d] + hi[d]) / 2
                       : lo[d] + (hi[d] - lo[d]) * idx[d] / (points_per_dim - 1);
      Eigen::VectorXcd V(n);
      V(0) = coord[0];
      for (int i = 1; i < n; ++i) V(i) = std::polar(coord[i], coord[n + i - 1]);
      double obj;
      if (evaluate(V, &obj) && (!found || obj < best_obj)) {
        found = true;
        best_obj = obj;
        best = coord;
      }
      int d = 0;
      while (d < dims && ++idx[d] == points_per_dim) idx[d++] = 0;
      done = d == dims;
    }
    if (!found) break;
    for (int d = 0; d < dims; ++d) {
      double radius = (hi[d] - lo[d]) / (points_per_dim - 1);
      double l = best[d] - radius, h = best[d] + radius;
      if (d < n) {  // keep magnitudes inside their boxes
        l = std::max(l, bus[d].v_min);
        h = std::min(h, bus[d].v_max);
      }
      lo[d] = l;
      hi[d] = h;
    }
  }
  if (!found) throw NoFeasiblePointError("no feasible grid point");
  // compass-search polish: the zoomed grid can stall a few grid cells from
  // the minimizer when coordinates are strongly coupled
  {
    auto coords_to_V = [&](const std::vector<double>& c) {
      Eigen::VectorXcd V(n);
      V(0) = c[0];
      for (int i = 1; i < n; ++i) V(i) = std::polar(c[i], c[n + i - 1]);
      return V;
    };
    double step = 0.05;
    while (step > 1e-10) {
      bool improved = false;
      for (int d = 0; d < dims; ++d)
        for (double sgn : {1.0, -1.0}) {
          std::vector<double> cand = best;
          cand[d] += sgn * step;
          if (d < n)
            cand[d] = std::min(std::max(cand[d], bus[d].v_min), bus[d].v_max);
          double obj;
          if (evaluate(coords_to_V(cand), &obj) && obj < best_obj) {
            best = cand;
            best_obj = obj;
            improved = true;
          }
        }
      if (!improved) step *= 0.5;
    }
  }
  BruteForceResult res;
  res.V.resize(n);
  res.V(0) = best[0];
  for (int i = 1; i < n; ++i) res.V(i) = std::polar(best[i], best[n + i - 1]);
  res.objective = best_obj;
  return res;
}

namespace detail {

inline bool colorable(const Graph& g, int k) {
  const int n = g.num_nodes();
  std::vector<int> color(n, 0);
  int v = 0;
  while (v >= 0) {
    if (v == n) return true;
    bool placed = false;
    for (int c = color[v] + 1; c <= k; ++c) {
      bool ok = true;
      for (int w : g.adj[v])
        if (w < v && color[w] == c) {
          ok = false;
          break;
        }
      if (ok) {
        color[v] = c;
        placed = true;
        break;
      }
    }
    if (placed) {
      ++v;
      if (v < n) color[v] = 0;
    } else {
      color[v] = 0;
      --v;
    }
  }
  return false;
}

}  // namespace detail

/// Exact chromatic number by backtracking; small graphs only.
inline int exhaustive_chromatic(const Graph& g) {
  if (g.num_nodes() > 8)
    throw std::invalid_argument("chromatic oracle limited to 8 nodes");
  if (g.num_nodes() == 0) return 0;
  for (int k = 1; k <= g.num_nodes(); ++k)
    if (detail::colorable(g, k)) return k;
  return g.num_nodes();
}

/// min over all acyclic orientations of the longest directed path, computed
/// by enumerating linear orders (every acyclic orientation is induced by at
/// least one of them).
inline int min_orientation_longest_path(const Graph& g) {
  const int n = g.num_nodes();
  if (n > 8) throw std::invalid_argument("orientation oracle limited to 8 nodes");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int best = g.num_edges();
  do {
    std::vector<int> eta(n);
    for (int pos = 0; pos < n; ++pos) eta[perm[pos]] = pos;
    best = std::min(best, longest_path(orient_by_priority(g, eta)));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace dopf
