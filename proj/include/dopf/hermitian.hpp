#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace dopf {

using Complex = std::complex<double>;

/// Dense complex Hermitian matrix. Writes go through set(), which mirrors
/// the conjugate entry and keeps the diagonal real, so A(l,m) == conj(A(m,l))
/// holds exactly at all times.
class HermitianMat {
 public:
  HermitianMat() = default;
  explicit HermitianMat(int n) : m_(Eigen::MatrixXcd::Zero(n, n)) {}

  static HermitianMat from_dense(const Eigen::MatrixXcd& a) {
    HermitianMat h(static_cast<int>(a.rows()));
    for (int l = 0; l < a.rows(); ++l) {
      h.m_(l, l) = Complex(a(l, l).real(), 0.0);
      for (int m = l + 1; m < a.cols(); ++m) {
        Complex u = 0.5 * (a(l, m) + std::conj(a(m, l)));
        h.m_(l, m) = u;
        h.m_(m, l) = std::conj(u);
      }
    }
    return h;
  }

  /// W = v v*
  static HermitianMat outer(const Eigen::VectorXcd& v) {
    HermitianMat h(static_cast<int>(v.size()));
    for (int l = 0; l < v.size(); ++l) {
      h.m_(l, l) = Complex(std::norm(v(l)), 0.0);
      for (int m = l + 1; m < v.size(); ++m) {
        h.m_(l, m) = v(l) * std::conj(v(m));
        h.m_(m, l) = std::conj(h.m_(l, m));
      }
    }
    return h;
  }

  static HermitianMat identity(int n) {
    HermitianMat h(n);
    h.m_.setIdentity();
    return h;
  }

  int dim() const { return static_cast<int>(m_.rows()); }

  Complex operator()(int l, int m) const { return m_(l, m); }

  void set(int l, int m, Complex value) {
    if (l == m) {
      m_(l, l) = Complex(value.real(), 0.0);
    } else {
      m_(l, m) = value;
      m_(m, l) = std::conj(value);
    }
  }

  const Eigen::MatrixXcd& dense() const { return m_; }

  /// tr{A B}, real for Hermitian operands.
  double inner(const HermitianMat& other) const {
    return (m_.cwiseProduct(other.m_.transpose())).sum().real();
  }

  double trace_with(const Eigen::MatrixXcd& other) const {
    return (m_ * other).trace().real();
  }

  double min_eigenvalue() const {
    if (dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  bool is_hermitian_exact() const {
    for (int l = 0; l < dim(); ++l) {
      if (m_(l, l).imag() != 0.0) return false;
      for (int m = l + 1; m < dim(); ++m)
        if (m_(l, m) != std::conj(m_(m, l))) return false;
    }
    return true;
  }

  HermitianMat& operator+=(const HermitianMat& o) {
    m_ += o.m_;
    return *this;
  }
  HermitianMat& operator-=(const HermitianMat& o) {
    m_ -= o.m_;
    return *this;
  }
  friend HermitianMat operator-(HermitianMat a, const HermitianMat& b) {
    a -= b;
    return a;
  }

  friend bool operator==(const HermitianMat& a, const HermitianMat& b) {
    return a.m_ == b.m_;
  }

 private:
  Eigen::MatrixXcd m_;
};

}  // namespace dopf
