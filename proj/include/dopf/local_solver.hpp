#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dopf/edge_ops.hpp"
#include "dopf/network_matrices.hpp"

namespace dopf {

class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

class ProtocolError : public std::logic_error {
 public:
  explicit ProtocolError(const std::string& what) : std::logic_error(what) {}
};

/// One undirected edge's coupling state. The dual p and penalty rho are
/// logically shared by both endpoints; each endpoint keeps a copy and the
/// stamps record which iterate pair the copy reflects.
struct EdgeState {
  int tail_node = 0;
  int head_node = 0;
  Eigen::Vector4d p = Eigen::Vector4d::Zero();
  double rho = 1.0;
  Eigen::Vector4d r = Eigen::Vector4d::Zero();  // last residual G
  long stamp_tail = -1;
  long stamp_head = -1;
};

/// p <- p + rho * G, recording which iterate stamps produced G. Re-applying
/// at an already-recorded stamp pair, or regressing a stamp, is a protocol
/// violation.
inline void dual_update(EdgeState& e, const Eigen::Vector4d& G, long tail_stamp,
                        long head_stamp) {
  if (tail_stamp < e.stamp_tail || head_stamp < e.stamp_head)
    throw ProtocolError("dual update with regressed iteration stamp");
  if (tail_stamp == e.stamp_tail && head_stamp == e.stamp_head)
    throw ProtocolError("duplicate dual update for the same iterate pair");
  e.p += e.rho * G;
  e.r = G;
  e.stamp_tail = tail_stamp;
  e.stamp_head = head_stamp;
}

/// gamma_i: the sum of squared coupling violations over incident edges.
inline double local_residual(const std::vector<Eigen::Vector4d>& tail_G,
                             const std::vector<Eigen::Vector4d>& head_G) {
  double s = 0.0;
  for (const auto& g : tail_G) s += g.squaredNorm();
  for (const auto& g : head_G) s += g.squaredNorm();
  return s;
}

enum class RhoMode { Uniform, Admittance };

/// Per-edge penalty, aligned with g.edges. Admittance mode sets each edge's
/// penalty proportional to its line admittance norm: rho_e = rho0 * |y_e|.
inline std::vector<double> weighted_rho(const CaseData& cd, const Graph& g,
                                        double rho0, RhoMode mode) {
  std::vector<double> rho(g.num_edges(), rho0);
  if (mode == RhoMode::Uniform || g.num_edges() == 0) return rho;
  for (const auto& br : cd.branches) {
    int e = g.edge_index(g.index_of(br.from_bus), g.index_of(br.to_bus));
    rho[e] = rho0 * std::abs(br.series_admittance);
  }
  return rho;
}

/// One coupling term of the subproblem objective:
///   p^T G(W) + (rho/2) ||G(W)||^2  with  G(W) = sign * s(W) + other,
/// where s extracts the four shared entries in this agent's frame, sign is
/// -1 on tail edges and +1 on head edges, and `other` is the neighbor
/// snapshot's contribution (already signed).
struct EdgeTerm {
  double sign = 1.0;
  std::array<HermitianMat, 4> B;  // tr{B_r W} = r-th shared entry
  Eigen::Vector4d p = Eigen::Vector4d::Zero();
  double rho = 1.0;
  Eigen::Vector4d other = Eigen::Vector4d::Zero();
};

/// Agent-side matrices of the shared-entry extractor for a directed edge, in
/// the frame of the agent, with tail/head at local indices t and h.
inline std::array<HermitianMat, 4> shared_entry_matrices(const StarFrame& f,
                                                         int t, int h) {
  std::array<HermitianMat, 4> B{HermitianMat(f.n), HermitianMat(f.n),
                                HermitianMat(f.n), HermitianMat(f.n)};
  B[0].set(h, h, 1.0);
  B[1].set(t, t, 1.0);
  B[2].set(t, h, 1.0);             // tr = 2 Re W(t,h)
  B[3].set(t, h, Complex(0, 1));   // tr = 2 Im W(t,h)
  return B;
}

struct SubproblemSpec {
  const LocalProblem* lp = nullptr;
  std::vector<EdgeTerm> edges;
  HermitianMat warm;  // starting iterate
};

struct SolverConfig {
  double tol_inner = 1e-9;  // optimality residual of the inner solver
  int max_inner = 50000;
  double dykstra_tol = 1e-12;
  int dykstra_max_cycles = 20000;
  double feas_tol = 1e-8;
};

namespace detail {

/// Coordinates of a Hermitian A in an orthonormal (Frobenius) basis of the
/// star subspace of frame f: diagonal entries, then sqrt(2)-scaled real and
/// imaginary parts of the center row.
inline Eigen::VectorXd star_orthocoords(const StarFrame& f, const HermitianMat& A) {
  const double s2 = std::sqrt(2.0);
  Eigen::VectorXd v(f.num_coords());
  for (int a = 0; a < f.n; ++a) v(a) = A(a, a).real();
  for (int a = 0; a < f.n; ++a) {
    if (a == f.center) continue;
    Complex w = A(f.center, a);
    v(f.re_index(a)) = s2 * w.real();
    v(f.im_index(a)) = s2 * w.imag();
  }
  return v;
}

inline HermitianMat star_of_orthocoords(const StarFrame& f,
                                        const Eigen::VectorXd& v) {
  const double inv_s2 = 1.0 / std::sqrt(2.0);
  HermitianMat A(f.n);
  for (int a = 0; a < f.n; ++a) A.set(a, a, v(a));
  for (int a = 0; a < f.n; ++a) {
    if (a == f.center) continue;
    A.set(f.center, a, Complex(inv_s2 * v(f.re_index(a)),
                               inv_s2 * v(f.im_index(a))));
  }
  return A;
}

/// Coordinates of a Hermitian A in an orthonormal (Frobenius) basis of the
/// whole space H^n: diagonal entries, then sqrt(2)-scaled real and imaginary
/// parts of the strict upper triangle in row-major order. The entries between
/// two neighbors of an agent carry no cost and no constraint other than the
/// semidefinite cone, but they are genuine decision variables: without them
/// the cone cuts off every consensus point at buses of degree two or more.
inline Eigen::VectorXd full_orthocoords(const HermitianMat& A) {
  const int n = A.dim();
  const double s2 = std::sqrt(2.0);
  Eigen::VectorXd v(n * n);
  for (int a = 0; a < n; ++a) v(a) = A(a, a).real();
  int idx = n;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      Complex w = A(a, b);
      v(idx++) = s2 * w.real();
      v(idx++) = s2 * w.imag();
    }
  return v;
}

inline HermitianMat full_of_orthocoords(int n, const Eigen::VectorXd& v) {
  const double inv_s2 = 1.0 / std::sqrt(2.0);
  HermitianMat A(n);
  for (int a = 0; a < n; ++a) A.set(a, a, v(a));
  int idx = n;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      A.set(a, b, Complex(inv_s2 * v(idx), inv_s2 * v(idx + 1)));
      idx += 2;
    }
  return A;
}

inline HermitianMat psd_clamp(const HermitianMat& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.dense());
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return HermitianMat::from_dense(es.eigenvectors() * ev.asDiagonal() *
                                  es.eigenvectors().adjoint());
}

/// Dykstra alternating projection onto (slabs) ∩ (PSD) in the Frobenius
/// metric. Utility for initialization and diagnostics, not on the solver hot
/// path. Throws InfeasibleError when the sets cannot be met.
inline HermitianMat project_feasible(const LocalProblem& lp, HermitianMat W,
                                     const SolverConfig& cfg) {
  const StarFrame& f = lp.frame;
  for (const auto& s : lp.slabs)
    if (s.lo > s.hi)
      throw InfeasibleError("empty constraint interval " + s.name);

  auto max_violation = [&](const HermitianMat& M) {
    double v = std::max(0.0, -M.min_eigenvalue());
    for (const auto& s : lp.slabs) {
      double t = s.A.inner(M);
      v = std::max(v, std::max(s.lo - t, t - s.hi));
    }
    return v;
  };
  if (max_violation(W) <= cfg.feas_tol) return W;

  const int nsets = static_cast<int>(lp.slabs.size()) + 1;  // slabs + PSD
  std::vector<HermitianMat> corr(nsets, HermitianMat(f.n));
  HermitianMat X = W;
  for (int cycle = 0; cycle < cfg.dykstra_max_cycles; ++cycle) {
    HermitianMat prev = X;
    for (int j = 0; j < nsets; ++j) {
      HermitianMat Y = X;
      Y += corr[j];
      HermitianMat P(f.n);
      if (j < static_cast<int>(lp.slabs.size())) {
        const Slab& s = lp.slabs[j];
        double t = s.A.inner(Y);
        double c = std::clamp(t, s.lo, s.hi);
        P = Y;
        if (c != t && s.A_fro2 > 0)
          for (int a = 0; a < f.n; ++a)
            for (int b = a; b < f.n; ++b)
              P.set(a, b, P(a, b) + (c - t) / s.A_fro2 * s.A(a, b));
      } else {
        P = psd_clamp(Y);
      }
      corr[j] = Y - P;
      X = P;
    }
    HermitianMat d = X - prev;
    if (std::sqrt(d.inner(d)) <= cfg.dykstra_tol &&
        max_violation(X) <= cfg.feas_tol)
      return X;
  }
  if (max_violation(X) <= 1e3 * cfg.feas_tol) return X;
  throw InfeasibleError("feasible-set projection did not converge (violation " +
                        std::to_string(max_violation(X)) + ")");
}

}  // namespace detail

/// The quadratic program of one activation, in orthonormal star coordinates,
/// plus the cached operator-splitting data: the quadratic and slab matrices
/// never change for a given agent and penalty plan, so their factorization is
/// computed once and reused with warm-started solver state.
struct AssembledProgram {
  const LocalProblem* lp = nullptr;
  std::vector<EdgeTerm> edges;
  HermitianMat warm;
  double lipschitz = 0.0;
  double strong_convexity = 0.0;  // min eigenvalue of the quadratic form

  Eigen::MatrixXd H;                // d x d quadratic form
  Eigen::MatrixXd A;                // slab rows, m x d
  Eigen::VectorXd lo, hi;           // slab bounds
  Eigen::VectorXd y_cost;           // orthocoords of Y_r
  std::vector<Eigen::MatrixXd> S;   // per edge: 4 x d shared-entry extractor
  double sigma = 1.0;
  Eigen::LLT<Eigen::MatrixXd> chol;  // H + sigma (A^T A + I)

  // persistent splitting state (u: iterate, yb: slab values, V: PSD copy)
  Eigen::VectorXd u, yb, lyb;
  HermitianMat V, Lam;
  bool state_valid = false;

  Eigen::Vector4d edge_G(const EdgeTerm& e, const HermitianMat& W) const {
    Eigen::Vector4d s;
    for (int r = 0; r < 4; ++r) s(r) = e.B[r].inner(W);
    return e.sign * s + e.other;
  }

  double value(const HermitianMat& W) const {
    double v = eval_cost(*lp, W);
    for (const auto& e : edges) {
      Eigen::Vector4d G = edge_G(e, W);
      v += e.p.dot(G) + 0.5 * e.rho * G.squaredNorm();
    }
    return v;
  }

  HermitianMat gradient(const HermitianMat& W) const {
    HermitianMat g(lp->frame.n);
    if (lp->bus.is_generator) {
      double P = lp->Y_r.inner(W) + lp->bus.p_demand;
      double c = 2.0 * lp->bus.cost_c2 * P + lp->bus.cost_c1;
      for (int a = 0; a < lp->frame.n; ++a)
        for (int b = a; b < lp->frame.n; ++b)
          g.set(a, b, g(a, b) + c * lp->Y_r(a, b));
    }
    for (const auto& e : edges) {
      Eigen::Vector4d coef = e.sign * (e.p + e.rho * edge_G(e, W));
      for (int r = 0; r < 4; ++r)
        for (int a = 0; a < lp->frame.n; ++a)
          for (int b = a; b < lp->frame.n; ++b)
            g.set(a, b, g(a, b) + coef(r) * e.B[r](a, b));
    }
    return g;
  }

  /// Linear part of the objective in orthonormal coordinates; this is the
  /// only piece that changes between activations of the same agent.
  Eigen::VectorXd linear_term() const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(H.rows());
    if (lp->bus.is_generator)
      g += (2.0 * lp->bus.cost_c2 * lp->bus.p_demand + lp->bus.cost_c1) *
           y_cost;
    for (size_t e = 0; e < edges.size(); ++e)
      g += S[e].transpose() *
           (edges[e].sign * (edges[e].p + edges[e].rho * edges[e].other));
    return g;
  }
};

/// Builds the quadratic program of one activation and precomputes its
/// curvature bounds and splitting factorization.
inline AssembledProgram assemble_subproblem(const SubproblemSpec& spec) {
  if (!spec.lp) throw std::invalid_argument("subproblem without LocalProblem");
  const StarFrame& f = spec.lp->frame;
  for (const auto& e : spec.edges)
    for (const auto& B : e.B)
      if (B.dim() != f.n)
        throw std::invalid_argument("edge term dimension mismatch");
  if (spec.warm.dim() != f.n)
    throw std::invalid_argument("warm start dimension mismatch");

  AssembledProgram prog;
  prog.lp = spec.lp;
  prog.edges = spec.edges;
  prog.warm = spec.warm;
  const int d = f.n * f.n;

  prog.y_cost = detail::full_orthocoords(spec.lp->Y_r);
  prog.H = Eigen::MatrixXd::Zero(d, d);
  if (spec.lp->bus.is_generator && spec.lp->bus.cost_c2 > 0)
    prog.H += 2.0 * spec.lp->bus.cost_c2 * prog.y_cost *
              prog.y_cost.transpose();
  for (const auto& e : prog.edges) {
    Eigen::MatrixXd Se(4, d);
    for (int r = 0; r < 4; ++r)
      Se.row(r) = detail::full_orthocoords(e.B[r]).transpose();
    prog.H += e.rho * Se.transpose() * Se;
    prog.S.push_back(std::move(Se));
  }
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prog.H,
                                                      Eigen::EigenvaluesOnly);
    prog.lipschitz = std::max(es.eigenvalues().maxCoeff(), 0.0);
    prog.strong_convexity = std::max(es.eigenvalues().minCoeff(), 0.0);
  }

  const auto& slabs = spec.lp->slabs;
  prog.A.resize(slabs.size(), d);
  prog.lo.resize(slabs.size());
  prog.hi.resize(slabs.size());
  for (size_t j = 0; j < slabs.size(); ++j) {
    if (slabs[j].lo > slabs[j].hi)
      throw InfeasibleError("empty constraint interval " + slabs[j].name);
    prog.A.row(j) = detail::full_orthocoords(slabs[j].A).transpose();
    prog.lo(j) = slabs[j].lo;
    prog.hi(j) = slabs[j].hi;
  }

  double L = std::max(prog.lipschitz, 1.0);
  double mu = std::max(prog.strong_convexity, 1e-3 * L);
  prog.sigma = std::sqrt(L * mu);
  Eigen::MatrixXd K = prog.H + prog.sigma * (prog.A.transpose() * prog.A +
                                             Eigen::MatrixXd::Identity(d, d));
  prog.chol.compute(K);
  if (prog.chol.info() != Eigen::Success)
    throw std::runtime_error("subproblem factorization failed");
  return prog;
}

enum class SolveStatus { Converged, MaxIter };

struct SolveCertificate {
  SolveStatus status = SolveStatus::Converged;
  int iterations = 0;
  double residual = 0.0;  // max of primal and dual splitting residuals
  std::vector<std::string> active_constraints;
};

struct SolveResult {
  HermitianMat W;
  SolveCertificate cert;
};

/// Operator-splitting solve of the assembled program: the quadratic plus the
/// slab box (clamp) plus the PSD cone (eigenvalue clamp of the full local
/// matrix), with persistent warm-started state across activations.
inline SolveResult solve_subproblem(AssembledProgram& prog,
                                    const SolverConfig& cfg) {
  const StarFrame& f = prog.lp->frame;
  const int d = f.n * f.n;
  (void)d;
  if (!prog.state_valid) {
    prog.u = detail::full_orthocoords(prog.warm);
    prog.yb = (prog.A * prog.u).cwiseMax(prog.lo).cwiseMin(prog.hi);
    prog.lyb = Eigen::VectorXd::Zero(prog.lo.size());
    prog.V = detail::psd_clamp(detail::full_of_orthocoords(f.n, prog.u));
    prog.Lam = HermitianMat(f.n);
    prog.state_valid = true;
  }
  Eigen::VectorXd g = prog.linear_term();
  const double sigma = prog.sigma;
  SolveResult res;
  res.cert.status = SolveStatus::MaxIter;
  int it = 0;
  for (; it < cfg.max_inner; ++it) {
    // quadratic step
    HermitianMat VmL = prog.V - prog.Lam;
    Eigen::VectorXd w = detail::full_orthocoords(VmL);
    Eigen::VectorXd rhs =
        -g + sigma * (prog.A.transpose() * (prog.yb - prog.lyb) + w);
    prog.u = prog.chol.solve(rhs);
    // constraint blocks
    Eigen::VectorXd Au = prog.A * prog.u;
    Eigen::VectorXd yb_new =
        (Au + prog.lyb).cwiseMax(prog.lo).cwiseMin(prog.hi);
    HermitianMat U = detail::full_of_orthocoords(f.n, prog.u);
    HermitianMat UpL = U;
    UpL += prog.Lam;
    HermitianMat V_new = detail::psd_clamp(UpL);
    // duals and residuals
    double pr = (Au - yb_new).norm();
    HermitianMat dV = U - V_new;
    pr = std::max(pr, std::sqrt(dV.inner(dV)));
    double dr = sigma * (prog.A.transpose() * (yb_new - prog.yb)).norm();
    Eigen::VectorXd dvz = detail::full_orthocoords(V_new - prog.V);
    dr = std::max(dr, sigma * dvz.norm());
    prog.lyb += Au - yb_new;
    prog.Lam += dV;
    prog.yb = yb_new;
    prog.V = V_new;
    if (std::max(pr, dr) <= cfg.tol_inner) {
      res.cert.status = SolveStatus::Converged;
      res.cert.residual = std::max(pr, dr);
      ++it;
      break;
    }
    res.cert.residual = std::max(pr, dr);
  }
  res.cert.iterations = it;
  res.W = detail::full_of_orthocoords(f.n, prog.u);
  // budget exhaustion on an empty feasible set is indistinguishable from slow
  // convergence here; let the alternating projection certify which it was
  if (res.cert.status == SolveStatus::MaxIter)
    detail::project_feasible(*prog.lp, res.W, cfg);
  const double act_tol = 1e3 * cfg.feas_tol;
  for (size_t j = 0; j < prog.lp->slabs.size(); ++j) {
    double v = prog.A.row(j).dot(prog.u);
    if (v <= prog.lo(j) + act_tol || v >= prog.hi(j) - act_tol)
      res.cert.active_constraints.push_back(prog.lp->slabs[j].name);
  }
  if (res.W.min_eigenvalue() <= act_tol)
    res.cert.active_constraints.push_back("PSD");
  return res;
}

/// Projection of an arbitrary Hermitian onto the feasible set of one agent.
inline HermitianMat project_onto_feasible(const LocalProblem& lp,
                                          const HermitianMat& W,
                                          const SolverConfig& cfg = {}) {
  return detail::project_feasible(lp, W, cfg);
}

}  // namespace dopf
