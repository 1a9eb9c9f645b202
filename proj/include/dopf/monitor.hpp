#pragma once

#include <cmath>
#include <vector>

#include "dopf/edge_ops.hpp"
#include "dopf/local_solver.hpp"
#include "dopf/scheduler.hpp"

namespace dopf {

/// Per-edge directed bookkeeping shared by all diagnostics: tail/head nodes
/// and the shared-entry selectors in each endpoint's frame.
struct MonitorContext {
  const Graph* g = nullptr;
  const std::vector<LocalProblem>* lps = nullptr;
  std::vector<int> tail, head;         // per graph edge
  std::vector<StarSelector> sel_tail;  // in the tail frame
  std::vector<StarSelector> sel_head;  // in the head frame
  std::vector<double> rho;

  static MonitorContext build(const Graph& g,
                              const std::vector<LocalProblem>& lps,
                              const Dag& dag, const std::vector<double>& rho) {
    MonitorContext ctx;
    ctx.g = &g;
    ctx.lps = &lps;
    ctx.rho = rho;
    ctx.tail.resize(g.num_edges());
    ctx.head.resize(g.num_edges());
    ctx.sel_tail.resize(g.num_edges());
    ctx.sel_head.resize(g.num_edges());
    for (auto [t, h] : dag.edges) {
      int e = g.edge_index(t, h);
      ctx.tail[e] = t;
      ctx.head[e] = h;
      ctx.sel_tail[e] = detail::shared_entry_selector(
          lps[t].frame, lps[t].frame.center, lps[t].local_of(h));
      ctx.sel_head[e] = detail::shared_entry_selector(
          lps[h].frame, lps[h].local_of(t), lps[h].frame.center);
    }
    return ctx;
  }

  Eigen::Vector4d residual(int e, const std::vector<Eigen::VectorXd>& x) const {
    return sel_head[e].apply(x[head[e]]) - sel_tail[e].apply(x[tail[e]]);
  }
};

/// All agents' n-th iterates with the matched duals and residuals.
struct EpochSnapshot {
  long epoch = 0;
  std::vector<Eigen::VectorXd> x;     // star coordinates per node
  std::vector<HermitianMat> W;        // full matrix iterates per node
  std::vector<Eigen::Vector4d> p;     // per edge
  std::vector<Eigen::Vector4d> r;     // G at this epoch, per edge
};

/// Epochs 0..min_i n_i assembled from a history-recording run.
inline std::vector<EpochSnapshot> assemble_epochs(const RunTrace& tr,
                                                  const MonitorContext& ctx) {
  if (tr.x_history.empty())
    throw std::invalid_argument("run was not recorded with history");
  long epochs = std::numeric_limits<long>::max();
  for (const auto& h : tr.x_history)
    epochs = std::min(epochs, static_cast<long>(h.size()));
  std::vector<EpochSnapshot> out;
  const int ne = ctx.g->num_edges();
  for (long n = 0; n < epochs; ++n) {
    EpochSnapshot s;
    s.epoch = n;
    for (const auto& h : tr.x_history) s.x.push_back(h[n]);
    for (const auto& h : tr.W_history) s.W.push_back(h[n]);
    for (int e = 0; e < ne; ++e) {
      const auto& ph = tr.p_history[e];
      s.p.push_back(n < static_cast<long>(ph.size()) ? ph[n] : ph.back());
      s.r.push_back(ctx.residual(e, s.x));
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct ReferenceSolution {
  std::vector<Eigen::VectorXd> x;
  std::vector<HermitianMat> W;
  std::vector<Eigen::Vector4d> p;
  double objective = 0.0;
  double max_gamma = 0.0;
};

/// Exact-consensus polish: every copy of a global matrix entry (a diagonal is
/// held by the bus and all its neighbors, an off-diagonal by the two
/// endpoints) is replaced by the average over its holders.
inline void average_shared_entries(const Graph& g,
                                   const std::vector<LocalProblem>& lps,
                                   std::vector<Eigen::VectorXd>& x) {
  const int n = g.num_nodes();
  std::vector<double> diag(n, 0.0);
  for (int u = 0; u < n; ++u) {
    double sum = x[u](lps[u].frame.center);
    int holders = 1;
    for (int j : g.adj[u]) {
      sum += x[j](lps[j].local_of(u));
      ++holders;
    }
    diag[u] = sum / holders;
  }
  for (int u = 0; u < n; ++u) {
    x[u](lps[u].frame.center) = diag[u];
    for (int j : g.adj[u]) x[j](lps[j].local_of(u)) = diag[u];
  }
  for (auto [u, v] : g.edges) {
    const StarFrame& fu = lps[u].frame;
    const StarFrame& fv = lps[v].frame;
    int a = lps[u].local_of(v);  // W(u,v) = x_u(c,a)
    int b = lps[v].local_of(u);  // W(v,u) = x_v(c,b) = conj(W(u,v))
    double re = (x[u](fu.re_index(a)) + x[v](fv.re_index(b))) / 2.0;
    double im = (x[u](fu.im_index(a)) - x[v](fv.im_index(b))) / 2.0;
    x[u](fu.re_index(a)) = re;
    x[u](fu.im_index(a)) = im;
    x[v](fv.re_index(b)) = re;
    x[v](fv.im_index(b)) = -im;
  }
}

/// Runs the engine itself far past the diagnostic threshold so the reference
/// is a numerically exact saddle point, then polishes the remaining
/// shared-entry disagreement by averaging. The LaSalle and Lemma checks are
/// linearly sensitive to reference error, so the default gamma target is far
/// tighter than the thresholds those checks use.
inline ReferenceSolution compute_reference(const CaseData& cd, const Graph& g,
                                           const std::vector<LocalProblem>& lps,
                                           const Dag& dag,
                                           const std::vector<double>& rho,
                                           double eps = 1e-22,
                                           long max_updates = 500000) {
  SimConfig sim;
  sim.eps = eps;
  sim.max_updates_per_bus = max_updates;
  RunTrace tr = run(cd, g, lps, dag, rho, sim);
  if (tr.status != RunStatus::Converged &&
      tr.status != RunStatus::BudgetExhausted)
    throw std::runtime_error("reference run failed");
  ReferenceSolution ref;
  for (int i = 0; i < g.num_nodes(); ++i)
    ref.x.push_back(lps[i].frame.from_matrix(tr.W[i]));
  average_shared_entries(g, lps, ref.x);
  ref.W = tr.W;
  // merge the polished star entries back into the full matrices
  for (int i = 0; i < g.num_nodes(); ++i) {
    const StarFrame& f = lps[i].frame;
    HermitianMat star = f.to_matrix(ref.x[i]);
    for (int a = 0; a < f.n; ++a) {
      ref.W[i].set(a, a, star(a, a));
      if (a != f.center) ref.W[i].set(f.center, a, star(f.center, a));
    }
  }
  ref.p = tr.p_final;
  ref.max_gamma = tr.max_gamma;
  ref.objective = 0.0;
  for (int i = 0; i < g.num_nodes(); ++i)
    ref.objective += eval_cost_coords(lps[i], ref.x[i]);
  return ref;
}

/// Candidate LaSalle function: squared dual distance plus the head-side
/// primal distance over the directed edges.
inline double lasalle_V(const EpochSnapshot& s, const ReferenceSolution& ref,
                        const MonitorContext& ctx) {
  double V = 0.0;
  for (size_t e = 0; e < ctx.rho.size(); ++e) {
    V += (s.p[e] - ref.p[e]).squaredNorm() / ctx.rho[e];
    int h = ctx.head[e];
    Eigen::Vector4d d = ctx.sel_head[e].apply(s.x[h] - ref.x[h]);
    V += ctx.rho[e] * d.squaredNorm();
  }
  return V;
}

struct MonotonicityCheck {
  bool pass = false;
  double V_n = 0.0, V_next = 0.0;
  double rhs = 0.0;   // the certified decrease bound (non-positive)
  double slack = 0.0; // rhs - (V_next - V_n); pass iff >= -tol*(1+|V_n|)
};

inline MonotonicityCheck check_monotonicity(const EpochSnapshot& sn,
                                            const EpochSnapshot& snext,
                                            const ReferenceSolution& ref,
                                            const MonitorContext& ctx,
                                            double tol = 1e-9) {
  MonotonicityCheck c;
  c.V_n = lasalle_V(sn, ref, ctx);
  c.V_next = lasalle_V(snext, ref, ctx);
  double rhs = 0.0;
  for (size_t e = 0; e < ctx.rho.size(); ++e) {
    int h = ctx.head[e];
    Eigen::Vector4d d = ctx.sel_head[e].apply(snext.x[h] - sn.x[h]);
    rhs -= ctx.rho[e] * (snext.r[e] - d).squaredNorm();
  }
  c.rhs = rhs;
  c.slack = rhs - (c.V_next - c.V_n);
  c.pass = c.slack >= -tol * (1.0 + std::abs(c.V_n));
  return c;
}

struct LemmaA2Check {
  double slack_a = 0.0;  // p*^T r - sum(f* - f^{n+1})
  double slack_b = 0.0;  // rhs_b - sum(f^{n+1} - f*)
  bool pass(double tol = 1e-8) const {
    return slack_a >= -tol && slack_b >= -tol;
  }
};

inline LemmaA2Check check_lemma_A2(const EpochSnapshot& snext,
                                   const EpochSnapshot& sn,
                                   const ReferenceSolution& ref,
                                   const MonitorContext& ctx) {
  LemmaA2Check c;
  const auto& lps = *ctx.lps;
  double df = 0.0;  // sum f_i(W^{n+1}) - f_i(W*)
  for (size_t i = 0; i < lps.size(); ++i)
    df += eval_cost_coords(lps[i], snext.x[i]) -
          eval_cost_coords(lps[i], ref.x[i]);
  double pstar_r = 0.0, p_r = 0.0, cross = 0.0;
  for (size_t e = 0; e < ctx.rho.size(); ++e) {
    pstar_r += ref.p[e].dot(snext.r[e]);
    p_r += snext.p[e].dot(snext.r[e]);
    int h = ctx.head[e], t = ctx.tail[e];
    Eigen::Vector4d dki = ctx.sel_head[e].apply(sn.x[h] - snext.x[h]);
    Eigen::Vector4d dik = -ctx.sel_tail[e].apply(
        Eigen::VectorXd(ref.x[t] - snext.x[t]));
    cross += ctx.rho[e] * dki.dot(dik);
  }
  c.slack_a = pstar_r - (-df);
  c.slack_b = (-p_r + cross) - df;
  return c;
}

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
};

/// KKT-style residual blocks of the distributed problem at a candidate
/// primal-dual pair. Stationarity is the per-agent projected-gradient mapping
/// of the edge-dual Lagrangian; feasibility covers local-set violations plus
/// consensus residuals; complementarity is the duality pairing |p^T r|.
inline KktResiduals kkt_residuals(const std::vector<HermitianMat>& W,
                                  const std::vector<Eigen::Vector4d>& p,
                                  const MonitorContext& ctx,
                                  const SolverConfig& cfg = {}) {
  const auto& lps = *ctx.lps;
  KktResiduals res;
  double stat2 = 0.0, feas2 = 0.0, comp = 0.0;
  // per-agent Lagrangian gradients from cost plus edge duals, as matrices
  std::vector<HermitianMat> grad;
  for (size_t i = 0; i < lps.size(); ++i) {
    const LocalProblem& lp = lps[i];
    HermitianMat gi(lp.frame.n);
    if (lp.bus.is_generator) {
      double P = lp.Y_r.inner(W[i]) + lp.bus.p_demand;
      double c = 2.0 * lp.bus.cost_c2 * P + lp.bus.cost_c1;
      for (int a = 0; a < lp.frame.n; ++a)
        for (int b = a; b < lp.frame.n; ++b)
          gi.set(a, b, gi(a, b) + c * lp.Y_r(a, b));
    }
    grad.push_back(gi);
  }
  for (size_t e = 0; e < ctx.rho.size(); ++e) {
    int t = ctx.tail[e], h = ctx.head[e];
    auto Bt = shared_entry_matrices(lps[t].frame, lps[t].frame.center,
                                    lps[t].local_of(h));
    auto Bh = shared_entry_matrices(lps[h].frame, lps[h].local_of(t),
                                    lps[h].frame.center);
    for (int r = 0; r < 4; ++r) {
      for (int a = 0; a < lps[t].frame.n; ++a)
        for (int b = a; b < lps[t].frame.n; ++b)
          grad[t].set(a, b, grad[t](a, b) - p[e](r) * Bt[r](a, b));
      for (int a = 0; a < lps[h].frame.n; ++a)
        for (int b = a; b < lps[h].frame.n; ++b)
          grad[h].set(a, b, grad[h](a, b) + p[e](r) * Bh[r](a, b));
    }
  }
  for (size_t i = 0; i < lps.size(); ++i) {
    const LocalProblem& lp = lps[i];
    // gradient step in the Frobenius metric, then projection onto W_i
    HermitianMat Z = W[i] - grad[i];
    HermitianMat P = project_onto_feasible(lp, Z, cfg);
    HermitianMat d = W[i] - P;
    stat2 += d.inner(d);
    feas2 += std::pow(check_feasible(lp, W[i], 0.0).worst(), 2);
  }
  for (size_t e = 0; e < ctx.rho.size(); ++e) {
    int t = ctx.tail[e], h = ctx.head[e];
    Eigen::Vector4d st, sh;
    auto Bt = shared_entry_matrices(lps[t].frame, lps[t].frame.center,
                                    lps[t].local_of(h));
    auto Bh = shared_entry_matrices(lps[h].frame, lps[h].local_of(t),
                                    lps[h].frame.center);
    for (int r = 0; r < 4; ++r) {
      st(r) = Bt[r].inner(W[t]);
      sh(r) = Bh[r].inner(W[h]);
    }
    Eigen::Vector4d r = sh - st;
    feas2 += r.squaredNorm();
    comp += p[e].dot(r);
  }
  res.stationarity = std::sqrt(stat2);
  res.feasibility = std::sqrt(feas2);
  res.complementarity = std::abs(comp);
  return res;
}

}  // namespace dopf
