#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dopf/hermitian.hpp"

using dopf::Complex;
using dopf::HermitianMat;

namespace {

HermitianMat random_hermitian(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  HermitianMat h(n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      h.set(a, b, a == b ? Complex(u(rng), 0) : Complex(u(rng), u(rng)));
  return h;
}

}  // namespace

TEST_CASE("set mirrors the conjugate entry and keeps the diagonal real") {
  HermitianMat h(3);
  h.set(0, 2, Complex(1.5, -2.5));
  REQUIRE(h(2, 0) == Complex(1.5, 2.5));
  h.set(1, 1, Complex(3.0, 7.0));  // imaginary part discarded
  REQUIRE(h(1, 1) == Complex(3.0, 0.0));
  REQUIRE(h.is_hermitian_exact());
}

TEST_CASE("from_dense symmetrizes an arbitrary complex matrix") {
  Eigen::MatrixXcd a(2, 2);
  a << Complex(1, 3), Complex(2, 1), Complex(4, 5), Complex(6, -1);
  HermitianMat h = HermitianMat::from_dense(a);
  REQUIRE(h.is_hermitian_exact());
  REQUIRE(h(0, 0) == Complex(1, 0));
  // off-diagonal is the Hermitian average of (0,1) and conj((1,0))
  REQUIRE(h(0, 1) == Complex(3, -2));
  REQUIRE(h(1, 0) == Complex(3, 2));
}

TEST_CASE("outer product is PSD and rank one") {
  Eigen::VectorXcd v(3);
  v << Complex(1, 0), Complex(0.5, -0.5), Complex(0, 2);
  HermitianMat w = HermitianMat::outer(v);
  REQUIRE(w.is_hermitian_exact());
  REQUIRE(w.min_eigenvalue() >= -1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w.dense(),
                                                     Eigen::EigenvaluesOnly);
  REQUIRE(es.eigenvalues()(0) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(es.eigenvalues()(1) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(es.eigenvalues()(2) == Catch::Approx(v.squaredNorm()).margin(1e-12));
  REQUIRE(w(1, 2) == v(1) * std::conj(v(2)));
}

TEST_CASE("inner is the real trace pairing") {
  std::mt19937 rng(7);
  HermitianMat a = random_hermitian(4, rng);
  HermitianMat b = random_hermitian(4, rng);
  double t = (a.dense() * b.dense()).trace().real();
  REQUIRE(a.inner(b) == Catch::Approx(t).margin(1e-12));
  REQUIRE(a.inner(b) == Catch::Approx(b.inner(a)).margin(1e-14));
  REQUIRE(a.inner(a) >= 0.0);
}

TEST_CASE("min_eigenvalue on simple matrices") {
  REQUIRE(HermitianMat::identity(3).min_eigenvalue() == Catch::Approx(1.0));
  HermitianMat h(2);
  h.set(0, 0, 2.0);
  h.set(1, 1, -5.0);
  REQUIRE(h.min_eigenvalue() == Catch::Approx(-5.0));
}

TEST_CASE("hermitian invariant survives random update sequences") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + static_cast<int>(rng() % 5);
    HermitianMat h(n);
    for (int op = 0; op < 100; ++op) {
      int a = static_cast<int>(rng() % n);
      int b = static_cast<int>(rng() % n);
      h.set(std::min(a, b), std::max(a, b), Complex(u(rng), u(rng)));
      REQUIRE(h.is_hermitian_exact());
    }
    HermitianMat g = random_hermitian(n, rng);
    h += g;
    REQUIRE(h.is_hermitian_exact());
    h -= g;
    REQUIRE(h.is_hermitian_exact());
  }
}
