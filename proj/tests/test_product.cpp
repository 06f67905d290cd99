#include <doctest.h>

#include <random>

#include "nctorsion/identities.hpp"

using namespace nct;

namespace {

Matrix scalar(double x) {
  Matrix m(1, 1);
  m << x;
  return m;
}

const ProductSuite& unit_suite() {
  static const ProductSuite s = run_product_suite(build_graded_two_point(Complex(1.0, 0.0)), scalar(1.0));
  return s;
}

const ProductSuite& random_suite() {
  static const ProductSuite s = [] {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix phi(2, 2);
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) phi(i, j) = Complex(u(rng), u(rng));
    return run_product_suite(build_graded_two_point(Complex(0.8, 0.6)), phi);
  }();
  return s;
}

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("product: dimensions of the one-form blocks") {
  const ProductSuite& s = unit_suite();
  CHECK(s.pt.E1.dim() == 4);
  CHECK(s.pt.E2.dim() == 4);
  CHECK(s.ctx.omega_dim() == 8);
  CHECK(s.ctx.tensor_dim() == 16);
  CHECK(s.pt.dirac_square_residual < 1e-10);
  CHECK(s.pt.block_overlap < 1e-10);
}

TEST_CASE("product: Psi and beta certificates") {
  for (const ProductSuite* s : {&unit_suite(), &random_suite()}) {
    const PsiCertificates& c = s->ctx.psi().cert;
    const double tol = 1e-8 * (1 + s->scale);
    CHECK(c.idempotent < tol);
    CHECK(c.self_adjoint < tol);
    CHECK(c.beta21_beta12 < tol);
    CHECK(c.beta12_beta21 < tol);
    CHECK(c.beta11_square < tol);
    CHECK(c.beta11_adjoint < tol);
    CHECK(c.beta12_adjoint < tol);
    CHECK(c.descent11 < tol);
    CHECK(c.descent12 < tol);
    CHECK(c.descent21 < tol);
    CHECK(c.alpha_consistency < tol);
    CHECK(c.junk_in_image < tol);
    CHECK(c.block_orthogonality < tol);
  }
}

TEST_CASE("product: junk components and factor lemmas") {
  for (const ProductSuite* s : {&unit_suite(), &random_suite()}) {
    const JunkComponents j = junk_components(s->pt, s->ctx);
    CHECK(j.kernel_dim > 0);
    CHECK(j.del22 < 1e-8);
    CHECK(j.del11 < 1e-8);
    CHECK(j.del12_21 < 1e-8);
    CHECK(lemma_d2_df(s->pt) < 1e-8);
    CHECK(lemma_r_l_inner(s->pt, s->ctx.psi()) < 1e-8);
  }
}

TEST_CASE("product: connection assembled from the factors") {
  for (const ProductSuite* s : {&unit_suite(), &random_suite()}) {
    const double tol = 1e-8 * (1 + s->scale);
    CHECK(s->n1_sigma.matched);
    CHECK(s->n1_psi.matched);
    CHECK(s->n2.matched);
    CHECK(s->prod_sigma.connection.leibniz_residual < tol);
    CHECK(s->prod_psi.connection.leibniz_residual < tol);
    CHECK(s->prod_sigma.consistency_residual < tol);
    CHECK(s->prod_psi.consistency_residual < tol);
    CHECK(s->s_left_linearity < tol);
    CHECK(s->ms_on_e1 < tol);
    CHECK(s->tsig1 < tol);
    CHECK(s->ty1 < tol);
  }
}

TEST_CASE("product: torsion of the perturbed connection") {
  for (const ProductSuite* s : {&unit_suite(), &random_suite()}) {
    const double tol = 1e-8 * (1 + s->scale);
    CHECK(s->second_main < tol);
    CHECK(s->tvscn < tol);
    CHECK(max_abs(s->psi_table.values - s->spectral_d2.values) < tol);
    CHECK(max_abs(s->sigma_table.values - s->reduced.values) < tol);
  }
}

TEST_CASE("product: table sizes") {
  const ProductSuite& s = unit_suite();
  const Index r = s.ctx.omega_dim();
  CHECK(s.spectral.values.size() == r * r * r);
  CHECK(s.psi_table.values.size() == r * r * r);
  CHECK(s.reduced.values.size() == r * r * r);
}

TEST_CASE("product diagnostics on the finite surrogate") {
  const ProductSuite& s = unit_suite();
  // one-form triple products against D1 do not vanish here
  CHECK(spectral_closedness_defect(s) > 0.1);
  const JunkVsAlgebra jv = junk_vs_algebra(s.ctx);
  CHECK(jv.junk_dim == 0);
  // with no junk, sigma2 is the identity and w D2 survives
  CHECK(degenerate_collapse(s) > 0.1);
}
