#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nctorsion/triple.hpp"

using namespace nct;

TEST_CASE("two-point triple from phi = [[2]]") {
  Matrix phi(1, 1);
  phi << 2;
  const auto [t, td] = build_two_point(phi);
  CHECK(t.hilbert_dim() == 2);
  CHECK(t.algebra_dim() == 2);
  Matrix d(2, 2);
  d << 0, 2, 2, 0;
  CHECK((t.dirac() - d).norm() == 0.0);
  Matrix eta(2, 2);
  eta << 0, -2, 2, 0;
  CHECK((td.eta - eta).norm() < 1e-15);
  CHECK(!t.degenerate());
}

TEST_CASE("two-point triple with rectangular phi splits H = C^2 (+) C^3") {
  Matrix phi = Matrix::Zero(2, 3);
  phi(0, 0) = Complex(1, 1);
  phi(1, 2) = 2.0;
  const auto [t, td] = build_two_point(phi);
  CHECK(t.hilbert_dim() == 5);
  CHECK(td.e_plus.trace().real() == doctest::Approx(2.0));
  CHECK((t.dirac().block(0, 2, 2, 3) - phi).norm() == 0.0);
}

TEST_CASE("phi = 0 gives a degenerate triple") {
  const auto [t, td] = build_two_point(Matrix::Zero(1, 1));
  CHECK(t.degenerate());
  CHECK(one_form_basis(t).dim() == 0);
}

TEST_CASE("graded two-point space") {
  const FiniteSpectralTriple g = build_graded_two_point(Complex(0.6, 0.8));
  REQUIRE(g.has_grading());
  CHECK((*g.grading() * g.dirac() + g.dirac() * *g.grading()).norm() < 1e-15);
  CHECK(one_form_basis(g).dim() == 2);
}

TEST_CASE("construction rejects broken data") {
  Matrix d(2, 2);
  d << 0, 1, 2, 0;  // not self-adjoint
  std::vector<Matrix> alg{Matrix::Identity(2, 2)};
  CHECK_THROWS_AS(build_user_triple("bad", alg, d, std::nullopt), ConstructionError);
  Matrix ds(2, 2);
  ds << 1, 0, 0, -1;
  Matrix g(2, 2);
  g << 1, 0, 0, -1;  // commutes with D instead of anticommuting
  CHECK_THROWS_AS(build_user_triple("bad", alg, ds, g), ConstructionError);
  Matrix off(2, 2);
  off << 0, 1, 0, 0;  // algebra not closed under adjoint
  std::vector<Matrix> alg2{Matrix::Identity(2, 2), off};
  CHECK_THROWS_AS(build_user_triple("bad", alg2, ds, std::nullopt), ConstructionError);
}

TEST_CASE("clifford torus dimensions and spectrum") {
  const Index n = 3;
  const FiniteSpectralTriple t = build_clifford_torus(n, 2);
  CHECK(t.hilbert_dim() == 2 * n * n);
  CHECK(t.algebra_dim() == n * n);
  const Matrix& d = t.dirac();
  CHECK((d - d.adjoint()).norm() < 1e-14);
  CHECK((*t.grading() * d + d * *t.grading()).norm() < 1e-14);

  // D^2 eigenvalues: sum of sin^2(2 pi k / N), each with spinor multiplicity 2
  std::vector<double> expected;
  for (Index k1 = 0; k1 < n; ++k1)
    for (Index k2 = 0; k2 < n; ++k2) {
      const double s1 = std::sin(2 * std::numbers::pi * static_cast<double>(k1) / n);
      const double s2 = std::sin(2 * std::numbers::pi * static_cast<double>(k2) / n);
      expected.push_back(s1 * s1 + s2 * s2);
      expected.push_back(s1 * s1 + s2 * s2);
    }
  std::sort(expected.begin(), expected.end());
  Eigen::SelfAdjointEigenSolver<Matrix> es(d * d);
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(es.eigenvalues()(static_cast<Index>(i)) == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("clifford torus with N = 2 and d = 2 lives on C^8 and has D = 0") {
  const FiniteSpectralTriple t = build_clifford_torus(2, 2);
  CHECK(t.hilbert_dim() == 8);
  CHECK(t.dirac_norm() < 1e-15);
  CHECK(t.degenerate());
}

TEST_CASE("clifford torus rejects odd dimension") {
  CHECK_THROWS_AS(build_clifford_torus(3, 1), PreconditionError);
  CHECK_THROWS_AS(build_clifford_torus(3, 3), PreconditionError);
}

TEST_CASE("product triple: D^2 splits and E1, E2 are orthogonal complements") {
  const FiniteSpectralTriple g = build_graded_two_point(1.0);
  Matrix phi(1, 1);
  phi << 1;
  const auto [t2, td] = build_two_point(phi);
  const ProductTriple pt = build_product(g, t2, td);
  CHECK(pt.total.hilbert_dim() == 4);
  CHECK(pt.total.algebra_dim() == 4);
  const Matrix& d = pt.total.dirac();
  const Matrix split = kron(g.dirac() * g.dirac(), Matrix::Identity(2, 2)) +
                       kron(Matrix::Identity(2, 2), t2.dirac() * t2.dirac());
  CHECK((d * d - split).norm() < 1e-12);
  CHECK(pt.dirac_square_residual < 1e-12);
  CHECK(pt.E1.dim() == 4);
  CHECK(pt.E2.dim() == 4);
  CHECK((pt.E1.basis().adjoint() * pt.E2.basis()).norm() < 1e-12);
  CHECK(pt.omega.dim() == one_form_basis(pt.total).dim());
}

TEST_CASE("product needs a graded, non-degenerate first factor") {
  Matrix phi(1, 1);
  phi << 1;
  const auto [t2, td] = build_two_point(phi);
  const auto [ungraded, td1] = build_two_point(phi);
  CHECK_THROWS_AS(build_product(ungraded, t2, td), PreconditionError);
  CHECK_THROWS_AS(build_product(build_graded_two_point(0.0), t2, td), ConstructionError);
  const auto [flat, tdz] = build_two_point(Matrix::Zero(1, 1));
  CHECK_THROWS_AS(build_product(build_graded_two_point(1.0), flat, tdz), ConstructionError);
}

TEST_CASE("two-point space is not spectrally closed") {
  Matrix phi(1, 1);
  phi << 2;
  const auto [t, td] = build_two_point(phi);
  // e+ eta D = diag(-4, 0)
  CHECK((td.e_plus * td.eta * t.dirac()).trace().real() == doctest::Approx(-4.0));
  CHECK(check_spectrally_closed(t) > 1.0);
}

TEST_CASE("conditional expectation is the HS projection onto the algebra") {
  Matrix phi(1, 1);
  phi << 1;
  const auto [t, td] = build_two_point(phi);
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  const Matrix e = t.conditional_expectation(x);
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 1;
  diag(1, 1) = 4;
  CHECK((e - diag).norm() < 1e-14);
}
