#include <doctest.h>

#include <cmath>
#include <random>

#include "nctorsion/linalg.hpp"

using namespace nct;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = Complex(u(rng), u(rng));
  return m;
}

}  // namespace

TEST_CASE("vectorize is row-major and round-trips") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Vector v = vectorize(m);
  CHECK(v(1) == Complex(2));
  CHECK(v(3) == Complex(4));
  CHECK((unvectorize(v, 2, 3) - m).norm() == 0.0);
}

TEST_CASE("hs_inner is Tr(B^* A)") {
  const Matrix a = random_matrix(3, 3, 1), b = random_matrix(3, 3, 2);
  CHECK(std::abs(hs_inner(a, b) - (b.adjoint() * a).trace()) < 1e-12);
}

TEST_CASE("kron matches the index formula") {
  const Matrix a = random_matrix(2, 3, 3), b = random_matrix(3, 2, 4);
  const Matrix k = kron(a, b);
  REQUIRE(k.rows() == 6);
  REQUIRE(k.cols() == 6);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index p = 0; p < 3; ++p)
        for (Index q = 0; q < 2; ++q) CHECK(std::abs(k(i * 3 + p, j * 2 + q) - a(i, j) * b(p, q)) < 1e-15);
}

TEST_CASE("span drops dependent vectors and is orthonormal") {
  const Matrix m = random_matrix(5, 2, 5);
  std::vector<Vector> vs{m.col(0), m.col(1), m.col(0) + 2.0 * m.col(1), Vector::Zero(5)};
  const Subspace s = span(vs, 5, 1e-10);
  CHECK(s.dim() == 2);
  CHECK((s.basis().adjoint() * s.basis() - Matrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(s.residual(vs[2]) < 1e-12);
}

TEST_CASE("span rank follows the singular value gap on a large family") {
  // rank 12 with singular values down to 1e-7, plus rounding-level noise
  const Matrix q = random_matrix(80, 12, 31).householderQr().householderQ() * Matrix::Identity(80, 12);
  Vector sv(12);
  for (Index i = 0; i < 12; ++i) sv(i) = std::pow(10.0, -7.0 * static_cast<double>(i) / 11.0);
  const Matrix fam = q * sv.asDiagonal() * random_matrix(12, 300, 32) + 1e-15 * random_matrix(80, 300, 33);
  std::vector<Vector> vs;
  for (Index j = 0; j < fam.cols(); ++j) vs.push_back(fam.col(j));
  const Subspace s = span(vs, 80, 1e-10, 1.0);
  CHECK(s.dim() == 12);
  for (Index i = 0; i < 12; ++i) CHECK(s.residual(q.col(i)) < 1e-6);
}

TEST_CASE("span with a scale treats rounding-level families as zero") {
  std::vector<Vector> vs{Vector::Constant(4, Complex(1e-15))};
  CHECK(span(vs, 4, 1e-10, 1.0).dim() == 0);
  CHECK(span(vs, 4, 1e-10).dim() == 1);
}

TEST_CASE("nullspace of a rank-deficient matrix") {
  const Matrix a = random_matrix(4, 3, 6);
  Matrix l(4, 5);
  l << a, a.col(0) + a.col(1), a.col(2) * 3.0;
  const Subspace k = nullspace(l, 1e-10);
  CHECK(k.dim() == 2);
  CHECK((l * k.basis()).norm() < 1e-12);
  CHECK(numerical_rank(l, 1e-10) == 3);
}

TEST_CASE("least_squares returns the minimum-norm solution") {
  // x + y = 2 has minimum-norm solution (1, 1)
  Matrix l(1, 2);
  l << 1, 1;
  Vector b(1);
  b << 2;
  const LeastSquares ls = least_squares(l, b);
  CHECK(ls.nullity == 1);
  CHECK(ls.residual < 1e-14);
  CHECK(std::abs(ls.solution(0) - 1.0) < 1e-14);
  CHECK(std::abs(ls.solution(1) - 1.0) < 1e-14);
}

TEST_CASE("least_squares on a structured system with repeated singular values") {
  // identity blocks with many equal singular values
  const Index n = 16;
  Matrix l = Matrix::Zero(4 * n, 2 * n);
  for (Index k = 0; k < 4; ++k) {
    l.block(k * n, 0, n, n) = Matrix::Identity(n, n) * Complex(k + 1);
    l.block(k * n, n, n, n) = -Matrix::Identity(n, n);
  }
  const Vector x0 = random_matrix(2 * n, 1, 7).col(0);
  const LeastSquares ls = least_squares(l, l * x0);
  CHECK(ls.residual < 1e-12);
  CHECK(ls.nullity == 0);
  CHECK((ls.solution - x0).norm() < 1e-10);
}

TEST_CASE("least_squares reports an inconsistent system") {
  Matrix l(2, 1);
  l << 1, 1;
  Vector b(2);
  b << 1, -1;
  const LeastSquares ls = least_squares(l, b);
  CHECK(std::abs(ls.solution(0)) < 1e-14);
  CHECK(ls.residual == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("quotient space is the orthogonal complement of the relations") {
  std::vector<Vector> rel{Vector::Unit(4, 0) - Vector::Unit(4, 1)};
  const Subspace r = span(rel, 4, 1e-10);
  const QuotientSpace q(Subspace::full(4), r);
  CHECK(q.dim() == 3);
  CHECK((q.quotient_basis().adjoint() * r.basis()).norm() < 1e-12);
  // e0 and e1 agree in the quotient
  CHECK((q.project_to_quotient(Vector::Unit(4, 0)) - q.project_to_quotient(Vector::Unit(4, 1))).norm() < 1e-12);
}

TEST_CASE("blocked quotient keeps block ranges") {
  std::vector<Vector> rel{Vector::Unit(4, 0) - Vector::Unit(4, 1)};
  const Subspace r = span(rel, 4, 1e-10);
  const QuotientSpace q(Subspace::full(4), r, {{0, 1}, {2, 3}});
  REQUIRE(q.block_ranges().size() == 2);
  CHECK(q.block_ranges()[0].second - q.block_ranges()[0].first == 1);
  CHECK(q.block_ranges()[1].second - q.block_ranges()[1].first == 2);
}

TEST_CASE("induced_map reproduces a known linear map and flags inconsistency") {
  const Matrix a = random_matrix(3, 3, 8);
  const Subspace dom = Subspace::full(3);
  std::vector<Vector> sp, im;
  for (Index i = 0; i < 3; ++i) {
    sp.push_back(Vector::Unit(3, i));
    im.push_back(a.col(i));
  }
  sp.push_back(Vector::Unit(3, 0) + Vector::Unit(3, 1));
  im.push_back(a.col(0) + a.col(1));
  InducedMap m = induced_map(dom, sp, im, 1e-10);
  CHECK((m.matrix - a).norm() < 1e-12);
  CHECK(m.consistency_residual < 1e-12);
  im.back() += Vector::Unit(3, 2);
  m = induced_map(dom, sp, im, 1e-10);
  CHECK(m.consistency_residual > 0.1);
}
