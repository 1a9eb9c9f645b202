#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dopf/network_matrices.hpp"

namespace dopf {

/// Sparse linear map from star coordinates to R^4. Each output row is a short
/// list of (coordinate index, weight) pairs.
struct StarSelector {
  std::array<std::vector<std::pair<int, double>>, 4> rows;

  Eigen::Vector4d apply(const Eigen::VectorXd& x) const {
    Eigen::Vector4d out = Eigen::Vector4d::Zero();
    for (int r = 0; r < 4; ++r)
      for (auto [idx, w] : rows[r]) out(r) += w * x(idx);
    return out;
  }

  /// g += scale * S^T v
  void add_adjoint(const Eigen::Vector4d& v, Eigen::VectorXd& g,
                   double scale = 1.0) const {
    for (int r = 0; r < 4; ++r)
      for (auto [idx, w] : rows[r]) g(idx) += scale * w * v(r);
  }

  Eigen::MatrixXd dense(int ncoords) const {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(4, ncoords);
    for (int r = 0; r < 4; ++r)
      for (auto [idx, w] : rows[r]) S(r, idx) += w;
    return S;
  }
};

enum class EdgeSide { Tail, Head };

/// The shared-entry extraction operators of one directed edge (tail -> head).
/// Both selectors produce, in their own endpoint's star frame, the vector
///   s(W) = [ W(head,head), W(tail,tail), 2 Re W(tail,head), 2 Im W(tail,head) ]
/// over the four entries the endpoints hold in common. The tail-side operator
/// of the edge coupling is -s, the head-side operator is +s, so agreement of
/// the shared entries is exactly s(W_head) - s(W_tail) = 0.
struct EdgeOperators {
  int tail_node = 0;
  int head_node = 0;
  StarSelector tail;  // in the tail agent's frame
  StarSelector head;  // in the head agent's frame
};

namespace detail {

inline StarSelector shared_entry_selector(const StarFrame& f, int tail_local,
                                          int head_local) {
  StarSelector s;
  s.rows[0] = {{head_local, 1.0}};
  s.rows[1] = {{tail_local, 1.0}};
  if (tail_local == f.center) {
    // W(tail,head) = W(center,a) = x_re(a) + j x_im(a)
    s.rows[2] = {{f.re_index(head_local), 2.0}};
    s.rows[3] = {{f.im_index(head_local), 2.0}};
  } else {
    // W(tail,head) = conj(W(center,a)) = x_re(a) - j x_im(a)
    s.rows[2] = {{f.re_index(tail_local), 2.0}};
    s.rows[3] = {{f.im_index(tail_local), -2.0}};
  }
  return s;
}

}  // namespace detail

inline EdgeOperators build_edge_operators(const LocalProblem& lp_tail,
                                          const LocalProblem& lp_head) {
  EdgeOperators ops;
  ops.tail_node = lp_tail.node;
  ops.head_node = lp_head.node;
  ops.tail = detail::shared_entry_selector(
      lp_tail.frame, lp_tail.frame.center, lp_tail.local_of(lp_head.node));
  ops.head = detail::shared_entry_selector(
      lp_head.frame, lp_head.local_of(lp_tail.node), lp_head.frame.center);
  return ops;
}

/// D applied from one side of the edge: the tail side carries the minus sign.
inline Eigen::Vector4d eval_D(const EdgeOperators& ops, EdgeSide side,
                              const Eigen::VectorXd& x) {
  return side == EdgeSide::Tail ? Eigen::Vector4d(-ops.tail.apply(x))
                                : ops.head.apply(x);
}

inline Eigen::Vector4d eval_D(const EdgeOperators& ops, EdgeSide side,
                              const StarFrame& frame, const HermitianMat& W) {
  return eval_D(ops, side, frame.from_matrix(W));
}

/// G = D_tail(W_tail) + D_head(W_head); zero iff the shared entries agree.
inline Eigen::Vector4d eval_G(const EdgeOperators& ops,
                              const Eigen::VectorXd& x_tail,
                              const Eigen::VectorXd& x_head) {
  return ops.head.apply(x_head) - ops.tail.apply(x_tail);
}

inline Eigen::Vector4d eval_G(const EdgeOperators& ops,
                              const LocalProblem& lp_tail,
                              const LocalProblem& lp_head,
                              const HermitianMat& W_tail,
                              const HermitianMat& W_head) {
  return eval_G(ops, lp_tail.frame.from_matrix(W_tail),
                lp_head.frame.from_matrix(W_head));
}

}  // namespace dopf
