#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dopf/case.hpp"
#include "dopf/local_solver.hpp"
#include "dopf/network_matrices.hpp"
#include "dopf/orientation.hpp"

namespace dopf {

struct SimConfig {
  unsigned seed = 0;
  double drop_q = 0.0;        // conditional drop probability per channel
  double eps = 1e-4;          // stopping threshold on gamma
  long max_updates_per_bus = 100000;
  long max_ticks = 10000000;
  bool record_history = false;  // per-epoch iterates and duals for diagnostics
};

enum class RunStatus { Converged, BudgetExhausted, Deadlock, Infeasible };

struct TraceRow {
  long tick = 0;
  long global_iter = 0;  // completed epochs (min over agents)
  double norm_r = 0.0;
  double max_gamma = 0.0;
  double objective = 0.0;
};

struct RunTrace {
  RunStatus status = RunStatus::BudgetExhausted;
  std::string message;
  std::vector<TraceRow> rows;
  std::vector<long> n_per_agent;
  long total_updates = 0;
  long ticks = 0;
  double objective = 0.0;
  double max_gamma = 0.0;
  std::vector<HermitianMat> W;  // final iterates per node
  std::vector<Eigen::Vector4d> p_final;  // per graph edge, latest-stamped copy
  std::vector<double> rho;      // per graph edge
  Dag dag;
  // history (only when record_history): x_history[i][n] = agent i's n-th
  // iterate in star coordinates, W_history[i][n] the full matrix iterate;
  // p_history[e][n] = edge dual after the (n,n)-stamped update,
  // p_history[e][0] = 0.
  std::vector<std::vector<Eigen::VectorXd>> x_history;
  std::vector<std::vector<HermitianMat>> W_history;
  std::vector<std::vector<Eigen::Vector4d>> p_history;

  double iterations_per_bus() const {
    long mx = 0;
    for (long n : n_per_agent) mx = std::max(mx, n);
    return static_cast<double>(mx);
  }
};

namespace detail {

struct Payload {
  Eigen::Vector4d s;  // sender's four shared entries for this edge
  double gamma = 0.0;
  long count = 0;
};

struct Channel {
  std::optional<Payload> pending;
  long send_tick = 0;
  bool last_success = true;
};

struct Incident {
  int edge = 0;       // index into graph.edges
  int nbr = 0;        // neighbor graph node
  bool is_tail = false;  // this agent is the tail of the directed edge
  EdgeState es;
  std::array<HermitianMat, 4> B;  // agent-side extractor matrices
  bool have_snap = false;
  Payload snap;
};

struct Agent {
  long n = 0;
  HermitianMat W;
  double gamma = 0.0;
  std::vector<Incident> inc;
  AssembledProgram prog;  // curvature cached; p/other refreshed per step
};

}  // namespace detail

/// Deterministic discrete-event engine running the alternating edge-update
/// scheme over per-bus agents on a directed acyclic orientation.
class Engine {
 public:
  Engine(const CaseData& cd, const Graph& g,
         const std::vector<LocalProblem>& lps, const Dag& dag,
         std::vector<double> rho, SimConfig sim, SolverConfig solver = {})
      : g_(g), lps_(lps), dag_(dag), rho_(std::move(rho)), sim_(sim),
        solver_(solver), rng_(sim.seed) {
    (void)cd;
    if (static_cast<int>(rho_.size()) != g_.num_edges())
      throw std::invalid_argument("rho vector size mismatch");
    if (dag_.num_nodes != g_.num_nodes() ||
        static_cast<int>(dag_.edges.size()) != g_.num_edges())
      throw std::invalid_argument("orientation does not cover the graph");
    head_of_.assign(g_.num_edges(), -1);
    for (auto [t, h] : dag_.edges) head_of_[g_.edge_index(t, h)] = h;
    init_agents();
  }

  RunTrace run() {
    RunTrace tr;
    tr.rho = rho_;
    tr.dag = dag_;
    if (sim_.record_history) {
      tr.x_history.resize(g_.num_nodes());
      tr.W_history.resize(g_.num_nodes());
      tr.p_history.assign(g_.num_edges(), {Eigen::Vector4d::Zero()});
      for (int i = 0; i < g_.num_nodes(); ++i) {
        tr.x_history[i].push_back(lps_[i].frame.from_matrix(agents_[i].W));
        tr.W_history[i].push_back(agents_[i].W);
      }
    }
    try {
      broadcast_all(0);
      for (tick_ = 1; tick_ <= sim_.max_ticks; ++tick_) {
        deliver_phase();
        if (max_own_gamma() <= sim_.eps) {
          tr.status = RunStatus::Converged;
          break;
        }
        std::vector<int> ready;
        for (int i = 0; i < g_.num_nodes(); ++i)
          if (is_ready(i)) ready.push_back(i);  // ascending bus-id order
        if (ready.empty() && !in_flight()) {
          // Stale neighbor gammas can quiet a region that another region is
          // count-blocked on. Liveness fallback: while some agent still sees
          // its own gamma above threshold, step the count-ready agents even
          // if their local gamma view is quiet. A cyclically oriented graph
          // never becomes count-ready, so true deadlocks are still caught.
          for (int i = 0; i < g_.num_nodes(); ++i)
            if (counts_ready(i)) ready.push_back(i);
          if (ready.empty()) {
            tr.status = RunStatus::Deadlock;
            tr.message = "no agent ready and no message in flight";
            break;
          }
        }
        for (int i : ready) step_agent(i, tr);
        record_row(tr);
        if (max_updates() >= sim_.max_updates_per_bus) {
          tr.status = RunStatus::BudgetExhausted;
          tr.message = "per-bus iteration budget exhausted";
          break;
        }
      }
    } catch (const InfeasibleError& e) {
      tr.status = RunStatus::Infeasible;
      tr.message = e.what();
    }
    if (tick_ > sim_.max_ticks) tr.message = "tick budget exhausted";
    finalize(tr);
    return tr;
  }

 private:
  const Graph& g_;
  const std::vector<LocalProblem>& lps_;
  Dag dag_;
  std::vector<double> rho_;
  SimConfig sim_;
  SolverConfig solver_;
  std::mt19937_64 rng_;
  std::vector<int> head_of_;
  std::vector<detail::Agent> agents_;
  // channel per directed (sender, receiver) pair of each edge
  std::map<std::pair<int, int>, detail::Channel> channels_;
  long tick_ = 0;

  void init_agents() {
    const int n = g_.num_nodes();
    agents_.resize(n);
    // globally known flat voltage profile, used only for initialization
    std::vector<double> vflat(n);
    for (int i = 0; i < n; ++i)
      vflat[i] = (lps_[i].bus.v_min + lps_[i].bus.v_max) / 2.0;
    for (int i = 0; i < n; ++i) {
      detail::Agent& a = agents_[i];
      a.gamma = 2.0 * sim_.eps;
      const LocalProblem& lp = lps_[i];
      SubproblemSpec spec;
      spec.lp = &lp;
      for (size_t e = 0; e < lp.edge_nbrs.size(); ++e) {
        int k = lp.edge_nbrs[e];
        int ge = g_.edge_index(i, k);
        detail::Incident inc;
        inc.edge = ge;
        inc.nbr = k;
        inc.is_tail = head_of_[ge] == k;
        inc.es.tail_node = inc.is_tail ? i : k;
        inc.es.head_node = inc.is_tail ? k : i;
        inc.es.rho = rho_[ge];
        int t_local = lp.local_of(inc.es.tail_node);
        int h_local = lp.local_of(inc.es.head_node);
        inc.B = shared_entry_matrices(lp.frame, t_local, h_local);
        a.inc.push_back(inc);

        EdgeTerm term;
        term.sign = inc.is_tail ? -1.0 : 1.0;
        term.B = inc.B;
        term.rho = rho_[ge];
        spec.edges.push_back(term);
        channels_[{i, k}];
      }
      // flat-profile warm start; the zero-dual solve below projects it into
      // the feasible set
      Eigen::VectorXcd v(lp.frame.n);
      for (int l = 0; l < lp.frame.n; ++l) v(l) = vflat[lp.nbhd[l]];
      spec.warm = HermitianMat::outer(v);
      for (size_t e = 0; e < a.inc.size(); ++e)
        spec.edges[e].other =
            spec.edges[e].sign < 0
                ? Eigen::Vector4d(neighbor_flat_s(i, a.inc[e], vflat))
                : Eigen::Vector4d(-neighbor_flat_s(i, a.inc[e], vflat));
      a.prog = assemble_subproblem(spec);
      a.W = solve_subproblem(a.prog, solver_).W;
    }
  }

  // the four shared entries of the flat profile, as the neighbor would send
  Eigen::Vector4d neighbor_flat_s(int i, const detail::Incident& inc,
                                  const std::vector<double>& vflat) const {
    int t = inc.es.tail_node, h = inc.es.head_node;
    Eigen::Vector4d s;
    s(0) = vflat[h] * vflat[h];
    s(1) = vflat[t] * vflat[t];
    s(2) = 2.0 * vflat[t] * vflat[h];
    s(3) = 0.0;
    (void)i;
    return s;
  }

  Eigen::Vector4d own_s(int i, const detail::Incident& inc) const {
    Eigen::Vector4d s;
    for (int r = 0; r < 4; ++r) s(r) = inc.B[r].inner(agents_[i].W);
    return s;
  }

  void broadcast_all(long tick) {
    for (int i = 0; i < g_.num_nodes(); ++i) emit(i, tick);
  }

  void emit(int i, long tick) {
    for (const auto& inc : agents_[i].inc) {
      detail::Channel& ch = channels_.at({i, inc.nbr});
      detail::Payload pl;
      pl.s = own_s(i, inc);
      pl.gamma = agents_[i].gamma;
      pl.count = agents_[i].n;
      ch.pending = pl;
      ch.send_tick = tick;
    }
  }

  void deliver_phase() {
    for (auto& [key, ch] : channels_) {  // deterministic map order
      if (!ch.pending || ch.send_tick >= tick_) continue;
      bool drop = false;
      if (sim_.drop_q > 0.0 && ch.last_success) {
        drop = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) <
               sim_.drop_q;
      }
      if (drop) {
        ch.last_success = false;
        continue;  // retransmitted on the next tick
      }
      ch.last_success = true;
      auto [sender, receiver] = key;
      for (auto& inc : agents_[receiver].inc)
        if (inc.nbr == sender) {
          inc.snap = *ch.pending;
          inc.have_snap = true;
        }
      ch.pending.reset();
    }
  }

  bool in_flight() const {
    for (const auto& [key, ch] : channels_)
      if (ch.pending) return true;
    return false;
  }

  bool counts_ready(int i) const {
    const detail::Agent& a = agents_[i];
    for (const auto& inc : a.inc) {
      if (!inc.have_snap) return false;
      if (inc.is_tail) {
        if (inc.snap.count != a.n) return false;
      } else {
        if (inc.snap.count <= a.n) return false;
      }
    }
    return true;
  }

  bool is_ready(int i) const {
    const detail::Agent& a = agents_[i];
    if (!counts_ready(i)) return false;
    if (a.gamma > sim_.eps) return true;
    for (const auto& inc : a.inc)
      if (inc.snap.gamma > sim_.eps) return true;
    return false;
  }

  void step_agent(int i, RunTrace& tr) {
    detail::Agent& a = agents_[i];
    // dual updates on tail edges, from the previous matched iterate pair
    for (auto& inc : a.inc) {
      if (!inc.is_tail || a.n == 0) continue;
      Eigen::Vector4d G = inc.snap.s - own_s(i, inc);
      dual_update(inc.es, G, a.n, a.n);
      if (sim_.record_history) record_dual(tr, inc, a.n);
    }
    // refresh the cached program and solve
    for (size_t e = 0; e < a.inc.size(); ++e) {
      a.prog.edges[e].p = a.inc[e].es.p;
      a.prog.edges[e].other = a.inc[e].is_tail
                                  ? Eigen::Vector4d(a.inc[e].snap.s)
                                  : Eigen::Vector4d(-a.inc[e].snap.s);
    }
    a.prog.warm = a.W;
    a.W = solve_subproblem(a.prog, solver_).W;
    // dual updates on head edges, from the fresh pair, then gamma
    double gamma = 0.0;
    for (auto& inc : a.inc) {
      Eigen::Vector4d G = inc.is_tail ? Eigen::Vector4d(inc.snap.s - own_s(i, inc))
                                      : Eigen::Vector4d(own_s(i, inc) - inc.snap.s);
      if (!inc.is_tail) {
        dual_update(inc.es, G, a.n + 1, a.n + 1);
        if (sim_.record_history) record_dual(tr, inc, a.n + 1);
      }
      gamma += G.squaredNorm();
    }
    a.gamma = gamma;
    ++a.n;
    for (const auto& inc : a.inc) {
      long skew = a.n - agents_[inc.nbr].n;
      if (skew < -1 || skew > 1)
        throw ProtocolError("iteration skew above one on an edge");
    }
    if (sim_.record_history) {
      tr.x_history[i].push_back(lps_[i].frame.from_matrix(a.W));
      tr.W_history[i].push_back(a.W);
    }
    emit(i, tick_);
  }

  void record_dual(RunTrace& tr, const detail::Incident& inc, long stamp) {
    auto& hist = tr.p_history[inc.edge];
    // both endpoints apply the same update; store it once
    if (static_cast<long>(hist.size()) == stamp) hist.push_back(inc.es.p);
  }

  double max_own_gamma() const {
    double m = 0.0;
    for (const auto& a : agents_) m = std::max(m, a.gamma);
    return m;
  }

  long max_updates() const {
    long m = 0;
    for (const auto& a : agents_) m = std::max(m, a.n);
    return m;
  }

  void record_row(RunTrace& tr) {
    TraceRow row;
    row.tick = tick_;
    long mn = std::numeric_limits<long>::max();
    for (const auto& a : agents_) mn = std::min(mn, a.n);
    row.global_iter = mn;
    double r2 = 0.0;
    for (int e = 0; e < g_.num_edges(); ++e) {
      auto [u, v] = g_.edges[e];
      int head = head_of_[e];
      int tail = head == v ? u : v;
      r2 += edge_residual(tail, head).squaredNorm();
    }
    row.norm_r = std::sqrt(r2);
    row.max_gamma = max_own_gamma();
    double obj = 0.0;
    for (int i = 0; i < g_.num_nodes(); ++i)
      obj += eval_cost(lps_[i], agents_[i].W);
    row.objective = obj;
    tr.rows.push_back(row);
  }

  Eigen::Vector4d edge_residual(int tail, int head) const {
    auto s_of = [&](int node) {
      for (const auto& inc : agents_[node].inc)
        if (inc.nbr == (node == tail ? head : tail)) return own_s(node, inc);
      throw std::logic_error("edge incidence missing");
    };
    return s_of(head) - s_of(tail);
  }

  void finalize(RunTrace& tr) {
    tr.ticks = std::min(tick_, sim_.max_ticks);
    tr.n_per_agent.clear();
    tr.total_updates = 0;
    tr.W.clear();
    for (const auto& a : agents_) {
      tr.n_per_agent.push_back(a.n);
      tr.total_updates += a.n;
      tr.W.push_back(a.W);
    }
    tr.p_final.assign(g_.num_edges(), Eigen::Vector4d::Zero());
    std::vector<std::pair<long, long>> best(g_.num_edges(), {-2, -2});
    for (const auto& a : agents_)
      for (const auto& inc : a.inc) {
        std::pair<long, long> st{inc.es.stamp_tail, inc.es.stamp_head};
        if (st > best[inc.edge]) {
          best[inc.edge] = st;
          tr.p_final[inc.edge] = inc.es.p;
        }
      }
    tr.max_gamma = max_own_gamma();
    double obj = 0.0;
    for (int i = 0; i < g_.num_nodes(); ++i)
      obj += eval_cost(lps_[i], agents_[i].W);
    tr.objective = obj;
  }
};

inline RunTrace run(const CaseData& cd, const Graph& g,
                    const std::vector<LocalProblem>& lps, const Dag& dag,
                    const std::vector<double>& rho, const SimConfig& sim,
                    const SolverConfig& solver = {}) {
  Engine engine(cd, g, lps, dag, rho, sim, solver);
  return engine.run();
}

}  // namespace dopf
