#include <doctest.h>

#include "nctorsion/calculus.hpp"

using namespace nct;

namespace {

ProductTriple scalar_product() {
  Matrix phi(1, 1);
  phi << 1;
  const auto [t2, td] = build_two_point(phi);
  return build_product(build_graded_two_point(1.0), t2, td);
}

}  // namespace

TEST_CASE("two-point calculus: Omega^1 = 2, T^2 = 2, no junk") {
  Matrix phi(1, 1);
  phi << 2;
  const auto [t, td] = build_two_point(phi);
  const CalculusSpaces c = junk_spaces(t);
  CHECK(c.omega1.dim() == 2);
  CHECK(c.universal.one_form_space.dim() == 2);  // k^2 - k
  CHECK(c.pi_kernel.dim() == 0);
  CHECK(c.junk2.dim() == 0);
  CHECK(c.tensor_square.dim() == 2);
  CHECK(c.junk_tensors.dim() == 0);
}

TEST_CASE("ker pi_D has dimension dim Omega^1_u - dim Omega^1_D") {
  const ProductTriple pt = scalar_product();
  const CalculusSpaces c = junk_spaces(pt);
  const Index k = pt.total.algebra_dim();
  CHECK(c.universal.one_form_space.dim() == k * k - k);
  CHECK(c.omega1.dim() == 8);
  CHECK(c.pi_kernel.dim() == k * k - k - c.omega1.dim());
  // every kernel element is a universal one-form killed by pi
  for (Index i = 0; i < c.pi_kernel.dim(); ++i) {
    CHECK((c.universal.mult_map * c.pi_kernel.basis_vector(i)).norm() < 1e-12);
    CHECK((c.universal.pi_map * c.pi_kernel.basis_vector(i)).norm() < 1e-12);
  }
}

TEST_CASE("universal maps follow the pair convention a_i [D, a_j]") {
  Matrix phi(1, 1);
  phi << 1;
  const auto [t, td] = build_two_point(phi);
  const UniversalForms u = universal_forms(t);
  const Index k = t.algebra_dim();
  const auto& a = t.algebra_basis();
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) {
      const Matrix pij = a[static_cast<std::size_t>(i)] * commutator(t.dirac(), a[static_cast<std::size_t>(j)]);
      CHECK((unvectorize(u.pi_map.col(i * k + j), 2, 2) - pij).norm() < 1e-15);
    }
}

TEST_CASE("balanced tensor square is balanced over the algebra") {
  const ProductTriple pt = scalar_product();
  const CalculusSpaces c = junk_spaces(pt);
  const BalancedTensorSpace& ts = c.tensor_square;
  CHECK(ts.balance_residual() < 1e-12);
  const auto om = basis_matrices(pt.omega);
  for (const Matrix& a : pt.total.algebra_basis())
    for (std::size_t p = 0; p < om.size(); p += 3)
      for (std::size_t q = 0; q < om.size(); q += 3)
        CHECK((ts.coords(om[p] * a, om[q]) - ts.coords(om[p], a * om[q])).norm() < 1e-12);
}

TEST_CASE("tensor square splits into four blocks") {
  const ProductTriple pt = scalar_product();
  const CalculusSpaces c = junk_spaces(pt);
  const auto& b = c.tensor_square.block_ranges();
  REQUIRE(b.size() == 4);
  CHECK(b.front().first == 0);
  CHECK(b.back().second == c.tensor_square.dim());
  for (std::size_t i = 1; i < 4; ++i) CHECK(b[i].first == b[i - 1].second);
}

TEST_CASE("simple and dense tensor quotients agree") {
  const ProductTriple pt = scalar_product();
  const Index r1 = pt.E1.dim(), r = pt.omega.dim();
  const BalancedTensorSpace::Blocks b{{0, r1}, {r1, r}};
  const BalancedTensorSpace fast(pt.omega, pt.omega, pt.total, b, b);
  const BalancedTensorSpace slow(pt.omega, pt.omega, pt.total, b, b, false);
  REQUIRE(fast.simple());
  REQUIRE_FALSE(slow.simple());
  CHECK(fast.dim() == slow.dim());
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(fast.block_ranges()[i].first == slow.block_ranges()[i].first);
    CHECK(fast.block_ranges()[i].second == slow.block_ranges()[i].second);
  }
  // relations of either construction vanish in the other
  const Matrix& rel = slow.relation_samples();
  for (Index j = 0; j < rel.cols(); ++j)
    CHECK(fast.coords_of_plain(unvectorize(rel.col(j), r, r)).norm() < 1e-10 * (1.0 + rel.col(j).norm()));
  const Matrix& samples = fast.relation_samples();
  for (Index j = 0; j < samples.cols(); ++j)
    CHECK(slow.coords_of_plain(unvectorize(samples.col(j), r, r)).norm() < 1e-10 * (1.0 + samples.col(j).norm()));
  // left actions are similar, so their traces match
  for (const Matrix& a : pt.total.algebra_basis())
    CHECK(std::abs(fast.left_action(a).trace() - slow.left_action(a).trace()) < 1e-10);
}

TEST_CASE("left action is an algebra homomorphism on T^2") {
  const ProductTriple pt = scalar_product();
  const CalculusSpaces c = junk_spaces(pt);
  const auto& alg = pt.total.algebra_basis();
  for (const Matrix& a : alg)
    for (const Matrix& b : alg)
      CHECK((c.tensor_square.left_action(a) * c.tensor_square.left_action(b) -
             c.tensor_square.left_action(a * b))
                .norm() < 1e-12);
}

TEST_CASE("multiplication on T^2 reproduces operator products") {
  const ProductTriple pt = scalar_product();
  const CalculusSpaces c = junk_spaces(pt);
  const auto om = basis_matrices(pt.omega);
  for (std::size_t p = 0; p < om.size(); ++p)
    CHECK((c.tensor_square.multiply(c.tensor_square.coords(om[p], om[0])) - om[p] * om[0]).norm() < 1e-12);
}

TEST_CASE("sigma is an idempotent that kills junk") {
  const ProductTriple pt = scalar_product();
  const CalculusSpaces c = junk_spaces(pt);
  Matrix x = Matrix::Zero(4, 4);
  x(0, 1) = 1;
  x(2, 3) = Complex(0, 2);
  CHECK((c.sigma(c.sigma(x)) - c.sigma(x)).norm() < 1e-12);
  for (Index i = 0; i < c.junk2.dim(); ++i) CHECK(c.sigma(c.junk2.basis_matrix(i)).norm() < 1e-12);
}

TEST_CASE("bimodule check rejects a non-bimodule") {
  Matrix phi(1, 1);
  phi << 1;
  const auto [t, td] = build_two_point(phi);
  std::vector<Vector> v{vectorize(t.dirac())};  // e+ D leaves span{D}
  const Subspace half = span(v, 4, 1e-10);
  CHECK_THROWS_AS(balanced_tensor(half, half, t), PreconditionError);
}
