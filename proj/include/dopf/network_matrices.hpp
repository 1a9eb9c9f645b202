#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dopf/case.hpp"
#include "dopf/hermitian.hpp"

namespace dopf {

/// Bus admittance matrix in graph (bus-id ascending) node order.
inline Eigen::MatrixXcd build_admittance(const CaseData& cd, const Graph& g) {
  const int n = g.num_nodes();
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : cd.branches) {
    int u = g.index_of(br.from_bus);
    int v = g.index_of(br.to_bus);
    Complex y = br.series_admittance;
    Complex sh(0.0, br.shunt_susceptance / 2.0);
    Y(u, u) += y + sh;
    Y(v, v) += y + sh;
    Y(u, v) -= y;
    Y(v, u) -= y;
  }
  return Y;
}

inline Eigen::MatrixXcd build_admittance(const CaseData& cd) {
  return build_admittance(cd, build_graph(cd));
}

struct BusMatrices {
  Eigen::MatrixXcd Y_full;
  std::vector<HermitianMat> Y;     // Y_i per node
  std::vector<HermitianMat> Ybar;  // per node
  std::vector<HermitianMat> M;     // e_i e_i^T per node
  // M_ik per undirected edge, aligned with the edge list used to build it.
  std::vector<std::pair<int, int>> edges;
  std::vector<HermitianMat> M_edge;
};

/// Per-bus injection matrices and per-edge voltage-difference matrices.
/// Edges are recovered from the nonzero off-diagonal pattern of Y.
inline BusMatrices build_bus_matrices(const Eigen::MatrixXcd& Y) {
  const int n = static_cast<int>(Y.rows());
  BusMatrices bm;
  bm.Y_full = Y;
  bm.Y.reserve(n);
  for (int i = 0; i < n; ++i) {
    // rows e_i e_i^T Y: row i of Y in row i, zero elsewhere
    Eigen::MatrixXcd Ri = Eigen::MatrixXcd::Zero(n, n);
    Ri.row(i) = Y.row(i);
    bm.Y.push_back(HermitianMat::from_dense((Ri.adjoint() + Ri) / 2.0));
    bm.Ybar.push_back(
        HermitianMat::from_dense((Ri.adjoint() - Ri) / Complex(0.0, 2.0)));
    HermitianMat Mi(n);
    Mi.set(i, i, 1.0);
    bm.M.push_back(Mi);
  }
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      if (Y(i, k) != 0.0) {
        bm.edges.emplace_back(i, k);
        HermitianMat Mik(n);
        Mik.set(i, i, 1.0);
        Mik.set(k, k, 1.0);
        Mik.set(i, k, -1.0);
        bm.M_edge.push_back(Mik);
      }
  return bm;
}

/// Principal submatrix on the (0-based) index set nbhd.
inline HermitianMat reduce(const HermitianMat& full, const std::vector<int>& nbhd) {
  HermitianMat r(static_cast<int>(nbhd.size()));
  for (size_t a = 0; a < nbhd.size(); ++a) {
    if (nbhd[a] < 0 || nbhd[a] >= full.dim())
      throw std::out_of_range("reduce: index outside matrix");
    for (size_t b = a; b < nbhd.size(); ++b)
      r.set(static_cast<int>(a), static_cast<int>(b), full(nbhd[a], nbhd[b]));
  }
  return r;
}

/// Coordinate chart for the "star" entries of a local Hermitian matrix:
/// the real diagonal plus the row/column of the center index. These are the
/// decision variables of every local subproblem; all other entries are held
/// at zero.
struct StarFrame {
  int n = 0;
  int center = 0;

  int num_coords() const { return 3 * n - 2; }

  int pair_slot(int a) const { return a < center ? a : a - 1; }
  int re_index(int a) const { return n + 2 * pair_slot(a); }
  int im_index(int a) const { return n + 2 * pair_slot(a) + 1; }

  Eigen::VectorXd from_matrix(const HermitianMat& W) const {
    Eigen::VectorXd x(num_coords());
    for (int a = 0; a < n; ++a) x(a) = W(a, a).real();
    for (int a = 0; a < n; ++a) {
      if (a == center) continue;
      Complex w = W(center, a);
      x(re_index(a)) = w.real();
      x(im_index(a)) = w.imag();
    }
    return x;
  }

  HermitianMat to_matrix(const Eigen::VectorXd& x) const {
    HermitianMat W(n);
    for (int a = 0; a < n; ++a) W.set(a, a, x(a));
    for (int a = 0; a < n; ++a) {
      if (a == center) continue;
      W.set(center, a, Complex(x(re_index(a)), x(im_index(a))));
    }
    return W;
  }

  /// Inverse of functional(): the star-supported A with tr{A W(x)} == c.dot(x).
  HermitianMat functional_matrix(const Eigen::VectorXd& c) const {
    HermitianMat A(n);
    for (int a = 0; a < n; ++a) A.set(a, a, c(a));
    for (int a = 0; a < n; ++a) {
      if (a == center) continue;
      A.set(a, center, Complex(c(re_index(a)) / 2.0, -c(im_index(a)) / 2.0));
    }
    return A;
  }

  /// Functional c with c.dot(x) == tr{A W(x)} for any A supported on the star.
  Eigen::VectorXd functional(const HermitianMat& A) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(num_coords());
    for (int a = 0; a < n; ++a) c(a) = A(a, a).real();
    for (int a = 0; a < n; ++a) {
      if (a == center) continue;
      Complex alpha = A(a, center);
      c(re_index(a)) = 2.0 * alpha.real();
      c(im_index(a)) = -2.0 * alpha.imag();
    }
    return c;
  }
};

/// Interval constraint lo <= tr{A W} <= hi, kept both as the Hermitian
/// matrix A and as a functional over star coordinates.
struct Slab {
  HermitianMat A;
  double A_fro2 = 0.0;  // tr{A A}
  Eigen::VectorXd a;
  double lo = 0.0, hi = 0.0;
  double a_norm2 = 0.0;
  std::string name;
};

/// Everything agent i needs about its own bus: the reduced constraint
/// matrices, box bounds, cost coefficients, and the star chart.
struct LocalProblem {
  int bus_id = 0;
  int node = 0;                  // graph index
  std::vector<int> nbhd;         // graph indices, ascending, includes node
  StarFrame frame;

  HermitianMat Y_r, Ybar_r, M_r;
  std::vector<int> edge_nbrs;            // neighbor graph index per incident edge
  std::vector<HermitianMat> M_edge_r;    // reduced M_ik per incident edge
  std::vector<double> vdiff_max;         // per incident edge

  Bus bus;

  // Derived functionals over star coordinates.
  Eigen::VectorXd f_p, f_q, f_v;
  std::vector<Slab> slabs;  // the active (finite-bound) constraints of W_i

  int local_of(int graph_node) const {
    auto it = std::lower_bound(nbhd.begin(), nbhd.end(), graph_node);
    if (it == nbhd.end() || *it != graph_node)
      throw std::out_of_range("node not in neighborhood");
    return static_cast<int>(it - nbhd.begin());
  }
};

inline std::vector<LocalProblem> build_local_problems(const CaseData& cd,
                                                      const Graph& g) {
  const Eigen::MatrixXcd Y = build_admittance(cd, g);
  const BusMatrices bm = build_bus_matrices(Y);
  // vdiff limits per undirected node pair
  std::map<std::pair<int, int>, double> vdmax;
  for (const auto& br : cd.branches) {
    int u = g.index_of(br.from_bus);
    int v = g.index_of(br.to_bus);
    if (u > v) std::swap(u, v);
    vdmax[{u, v}] = br.vdiff_max;
  }
  std::vector<LocalProblem> out;
  out.reserve(g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i) {
    LocalProblem lp;
    lp.node = i;
    lp.bus_id = g.bus_ids[i];
    lp.bus = cd.bus_by_id(lp.bus_id);
    lp.nbhd = g.adj[i];
    lp.nbhd.push_back(i);
    std::sort(lp.nbhd.begin(), lp.nbhd.end());
    lp.frame.n = static_cast<int>(lp.nbhd.size());
    lp.frame.center = lp.local_of(i);

    lp.Y_r = reduce(bm.Y[i], lp.nbhd);
    lp.Ybar_r = reduce(bm.Ybar[i], lp.nbhd);
    lp.M_r = reduce(bm.M[i], lp.nbhd);
    for (int k : g.adj[i]) {
      HermitianMat Mik(g.num_nodes());
      Mik.set(i, i, 1.0);
      Mik.set(k, k, 1.0);
      Mik.set(i, k, -1.0);
      lp.edge_nbrs.push_back(k);
      lp.M_edge_r.push_back(reduce(Mik, lp.nbhd));
      lp.vdiff_max.push_back(vdmax.at({std::min(i, k), std::max(i, k)}));
    }

    lp.f_p = lp.frame.functional(lp.Y_r);
    lp.f_q = lp.frame.functional(lp.Ybar_r);
    lp.f_v = lp.frame.functional(lp.M_r);
    auto add_slab = [&](const HermitianMat& A, double lo, double hi,
                        std::string name) {
      Slab s;
      s.A = A;
      s.A_fro2 = A.inner(A);
      s.a = lp.frame.functional(A);
      s.lo = lo;
      s.hi = hi;
      s.a_norm2 = s.a.squaredNorm();
      s.name = std::move(name);
      lp.slabs.push_back(std::move(s));
    };
    const Bus& b = lp.bus;
    add_slab(lp.Y_r, b.p_min - b.p_demand, b.p_max - b.p_demand, "P");
    add_slab(lp.Ybar_r, b.q_min - b.q_demand, b.q_max - b.q_demand, "Q");
    add_slab(lp.M_r, b.v_min * b.v_min, b.v_max * b.v_max, "V");
    for (size_t e = 0; e < lp.edge_nbrs.size(); ++e) {
      if (std::isinf(lp.vdiff_max[e])) continue;  // inactive constraint
      add_slab(lp.M_edge_r[e], -std::numeric_limits<double>::infinity(),
               lp.vdiff_max[e],
               "Vdiff_" + std::to_string(g.bus_ids[lp.edge_nbrs[e]]));
    }
    out.push_back(std::move(lp));
  }
  return out;
}

/// Net active-power injection functional value: tr{Y_r W} + Pd = P_i.
inline double active_injection(const LocalProblem& lp, const HermitianMat& W_i) {
  return lp.f_p.dot(lp.frame.from_matrix(W_i)) + lp.bus.p_demand;
}

/// f_i of the distributed objective; identically zero for non-generator buses.
inline double eval_cost(const LocalProblem& lp, const HermitianMat& W_i) {
  if (!lp.bus.is_generator) return 0.0;
  double p = active_injection(lp, W_i);
  return lp.bus.cost_c2 * p * p + lp.bus.cost_c1 * p;
}

inline double eval_cost_coords(const LocalProblem& lp, const Eigen::VectorXd& x) {
  if (!lp.bus.is_generator) return 0.0;
  double p = lp.f_p.dot(x) + lp.bus.p_demand;
  return lp.bus.cost_c2 * p * p + lp.bus.cost_c1 * p;
}

struct Violation {
  std::string constraint;
  double amount;  // positive = infeasibility magnitude
};

struct ViolationReport {
  std::vector<Violation> violations;
  bool feasible() const { return violations.empty(); }
  double worst() const {
    double w = 0.0;
    for (const auto& v : violations) w = std::max(w, v.amount);
    return w;
  }
};

/// Signed slack check of all active constraints of W_i plus PSD.
inline ViolationReport check_feasible(const LocalProblem& lp,
                                      const HermitianMat& W_i, double tol) {
  ViolationReport rep;
  Eigen::VectorXd x = lp.frame.from_matrix(W_i);
  for (const auto& s : lp.slabs) {
    double v = s.a.dot(x);
    if (v < s.lo - tol)
      rep.violations.push_back({s.name + "_lower", s.lo - v});
    if (v > s.hi + tol)
      rep.violations.push_back({s.name + "_upper", v - s.hi});
  }
  double lam = W_i.min_eigenvalue();
  if (lam < -tol) rep.violations.push_back({"PSD", -lam});
  return rep;
}

struct RecoveredVoltages {
  Eigen::VectorXcd voltage;        // per graph node
  Eigen::VectorXd rank_indicator;  // lambda_2 / lambda_1 of each W_i
};

/// Per-bus voltage estimate from a consistent set of local solutions, with a
/// rank-1 quality indicator. Magnitudes come from the local diagonals; phases
/// are propagated over a spanning tree from the smallest bus id.
inline RecoveredVoltages recover_voltages(const Graph& g,
                                          const std::vector<LocalProblem>& lps,
                                          const std::vector<HermitianMat>& W) {
  const int n = g.num_nodes();
  RecoveredVoltages rv;
  rv.voltage.resize(n);
  rv.rank_indicator.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W[i].dense(),
                                                       Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    double l1 = ev(ev.size() - 1);
    double l2 = ev.size() > 1 ? std::abs(ev(ev.size() - 2)) : 0.0;
    rv.rank_indicator(i) = l1 > 0 ? l2 / l1 : 1.0;
  }
  std::vector<double> phase(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int k : g.adj[i]) {
      if (seen[k]) continue;
      seen[k] = 1;
      // W_i(i,k) ~ V_i conj(V_k)
      Complex w = W[i](lps[i].frame.center, lps[i].local_of(k));
      phase[k] = phase[i] - std::arg(w);
      stack.push_back(k);
    }
  }
  for (int i = 0; i < n; ++i) {
    double mag = std::sqrt(std::max(0.0, W[i](lps[i].frame.center,
                                              lps[i].frame.center).real()));
    rv.voltage(i) = std::polar(mag, phase[i]);
  }
  return rv;
}

}  // namespace dopf
