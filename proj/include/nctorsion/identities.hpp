#pragma once

#include <cstdint>
#include <optional>

#include "nctorsion/torsion.hpp"

namespace nct {

// ============================================================ lemmas on products

/// max over the algebra basis of ||[D2, a] - (alpha~ - 1)(a) D2|| and
/// ||[D2, alpha~(a)] + [D2, a]||, alpha~ = 1 (x) alpha.
double lemma_d2_df(const ProductTriple& pt);

/// max over u in E2, x, y in E1 of ||u <alpha1 x, y> - <x, alpha1 y> u||
/// for the E1-rule inner product.
double lemma_r_l_inner(const ProductTriple& pt, const PsiProjection& psi);

struct JunkComponents {
  double del22 = 0;     // E(2,2) component of delta(ker pi_D)
  double del11 = 0;     // (1 - b11) on the E(1,1) component
  double del12_21 = 0;  // b12 maps the E(1,2) component to the E(2,1) one
  Index kernel_dim = 0;
};

/// Components of delta (x) delta applied to a basis of ker pi_D.
JunkComponents junk_components(const ProductTriple& pt, const CalculusContext& ctx);

// ============================================================ perturbations

struct PerturbationLaw {
  double sigma_residual = 0;  // ||T_s(N+M) - T_s(N) - s m M||, worst case
  double psi_residual = 0;    // ||T_P(N+M) - T_P(N) - (1-Psi) M||, worst case
  double scale = 0;           // largest operator norm involved
  double left_linearity = 0;  // worst left-linearity of the sampled maps
  int samples = 0;
};

/// Random module maps drawn from the module-map basis (mt19937_64, seeded).
PerturbationLaw perturbation_law(const CalculusContext& ctx, const Matrix& n, int samples, std::uint64_t seed);

// ============================================================ scenario suites

struct Z2Suite {
  CalculusContext ctx;
  TwoPointData td;
  TorsionFunctionalTable spectral;
  MatchSolution sigma_match, psi_match;
  Z2Parameters sigma_c, psi_c;
  TorsionFunctionalTable sigma_table, psi_table;
  MatchSolution grassmann;  // sigma-torsion free
  Z2Parameters grassmann_c;
};

Z2Suite run_z2_suite(const Matrix& phi, const Tolerances& tol = {});

struct ProductSuite {
  ProductTriple pt;
  CalculusContext ctx, ctx1_sigma, ctx1_psi, ctx2;
  MatchSolution n1_sigma, n1_psi;  // torsion-free first-factor connections
  MatchSolution n2;                 // matching connection on the two-point factor
  ProductConnection prod_sigma, prod_psi;
  Matrix s;                         // perturbation S
  double s_left_linearity = 0;
  double ms_on_e1 = 0;              // max_{w in E1} ||m S(w) - w D2||
  double ty1 = 0, ty2 = 0;          // T_Psi of the product connection on E1 / E2
  double tsig1 = 0, tsig2 = 0;      // T_sigma of the product connection on E1 / E2
  double second_main = 0;           // max_w ||m T_Psi(w) - w D2|| with S
  double tvscn = 0;                 // max_w ||T_sigma(w) - sigma(w D2)|| with S
  TorsionFunctionalTable psi_table, spectral_d2, sigma_table, reduced, spectral;
  double scale = 0;
};

ProductSuite run_product_suite(const FiniteSpectralTriple& factor1, const Matrix& phi,
                               const Tolerances& tol = {});

// ============================================================ diagnostics

struct JunkVsAlgebra {
  double junk_in_algebra = 0;  // residual of J2 against pi(A)
  double algebra_in_junk = 0;
  double star_closure = 0;     // J2^* inside J2
  Index junk_dim = 0;
};
JunkVsAlgebra junk_vs_algebra(const CalculusContext& ctx);

/// max |Tr(u v w D1)| over the one-form basis.
double spectral_closedness_defect(const ProductSuite& s);

/// max_w ||sigma2(w D2)|| over the one-form basis.
double degenerate_collapse(const ProductSuite& s);

/// Tr(u v w X).
Complex trace_functional(const Matrix& u, const Matrix& v, const Matrix& w, const Matrix& x);

}  // namespace nct
