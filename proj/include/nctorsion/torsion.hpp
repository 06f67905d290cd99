#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nctorsion/calculus.hpp"
#include "nctorsion/linalg.hpp"
#include "nctorsion/triple.hpp"

namespace nct {

// ============================================================ inner products

enum class InnerKind { ConditionalExpectation, E1Rule, E2Rule, ProductBlocks };

/// A-valued inner product <x, y>_A on a module of operators, left linear in x.
class AValuedInner {
 public:
  AValuedInner() = default;
  /// Conditional expectation E_A(x y^*) on an arbitrary module.
  AValuedInner(const FiniteSpectralTriple& t, Subspace module);
  /// Product rules: E1Rule, E2Rule, or ProductBlocks (E1 rule (+) E2 rule with
  /// E1 orthogonal to E2).
  AValuedInner(const ProductTriple& pt, InnerKind kind);

  InnerKind kind() const { return kind_; }
  const Subspace& module() const { return module_; }
  Matrix operator()(const Matrix& x, const Matrix& y) const;
  /// Smallest eigenvalue of the scalar Gram matrix Tr <e_i, e_j> on the module.
  double positivity_margin() const { return margin_; }

 private:
  Matrix e1_rule(const Matrix& x, const Matrix& y) const;
  Matrix e2_rule(const Matrix& x, const Matrix& y) const;
  void validate();

  InnerKind kind_ = InnerKind::ConditionalExpectation;
  Subspace module_;
  FiniteSpectralTriple total_;
  std::optional<ProductTriple> product_;
  std::vector<Matrix> f1_omega_, f2_omega_;  // factor one-form bases (orthonormal)
  Matrix c1_, c2_;  // vectorized factor pairings E(w_p w_q^*), column p * size + q
  double tol_ = 1e-8;
  double margin_ = 0.0;
};

AValuedInner a_valued_inner(const FiniteSpectralTriple& t, const Subspace& module);
AValuedInner a_valued_inner(const ProductTriple& pt, InnerKind kind);

/// Scalar form on tensor-square quotient coordinates,
/// <x (x) y, u (x) v> = Tr(x <y, v>_A u^*), as a matrix G with value c2^H G c1.
struct TensorGram {
  Matrix gram;               // quotient coordinates
  double radical_residual;   // ||G_plain R||: form vanishes on relations
  double min_eigenvalue;
};

TensorGram tensor_gram(const CalculusSpaces& c, const AValuedInner& inner);

// ============================================================ Psi

struct PsiCertificates {
  double idempotent = 0;       // ||Psi^2 - Psi||
  double self_adjoint = 0;     // ||G Psi - Psi^H G||
  double beta21_beta12 = 0;    // ||b21 b12 - 1|| on E(1,2)
  double beta12_beta21 = 0;    // ||b12 b21 - 1|| on E(2,1)
  double beta11_square = 0;    // ||b11^2 - 1|| on E(1,1)
  double beta11_adjoint = 0;   // ||G b11 - b11^H G||
  double beta12_adjoint = 0;   // ||G b12 - b21^H G||
  double descent11 = 0, descent12 = 0, descent21 = 0;
  double alpha_consistency = 0;  // alpha_1 well defined on E1
  double twist_residual = 0;     // omega a = tau(a) omega on factor-1 one-forms
  double twist_consistency = 0;  // twisted map well defined on E2
  double junk_in_image = 0;      // JT^2 inside Im Psi
  double image_in_junk = 0;      // m(Im Psi) inside J^2 (diagnostic)
  double block_orthogonality = 0;
};

struct PsiProjection {
  Matrix map;  // on tensor-square quotient coordinates
  std::vector<std::pair<Index, Index>> blocks;  // E(1,1), E(1,2), E(2,1), E(2,2)
  Matrix beta11, beta12, beta21;  // full quotient-coordinate matrices
  Matrix alpha1;                  // on E1 coordinates
  Matrix twist_e2;                // gamma a (x) u -> gamma tau(a) (x) u on E2 coordinates
  Matrix gram;                    // scalar form used for self-adjointness
  PsiCertificates cert;
  bool is_zero = false;
};

/// Psi = 0 (the two-point space on its own).
PsiProjection zero_psi(const CalculusSpaces& c);
/// Psi = (1 + flip)/2 on the whole tensor square (first-factor surrogate).
PsiProjection flip_psi(const CalculusSpaces& c, const FiniteSpectralTriple& t);
/// The product projection assembled from the beta maps.
PsiProjection build_psi(const ProductTriple& pt, const CalculusSpaces& c);

/// Flip alpha on the two-point algebra: diag(f, g) -> diag(g, f).
Matrix two_point_alpha(const Matrix& b, const TwoPointData& td);

// ============================================================ calculus context

/// A triple together with its calculus spaces and second-order projection,
/// exposing the differentials and torsion maps.
class CalculusContext {
 public:
  CalculusContext() = default;
  CalculusContext(FiniteSpectralTriple t, CalculusSpaces c, PsiProjection psi);

  const FiniteSpectralTriple& triple() const { return t_; }
  const CalculusSpaces& spaces() const { return c_; }
  const PsiProjection& psi() const { return psi_; }
  const BalancedTensorSpace& tensor() const { return c_.tensor_square; }
  const Tolerances& tol() const { return t_.tolerances(); }
  Index omega_dim() const { return c_.omega1.dim(); }
  Index tensor_dim() const { return c_.tensor_square.dim(); }
  const std::vector<Matrix>& omega_basis() const { return omega_mats_; }

  /// Universal lift (pair coordinates) of a one-form; alternative adds a
  /// fixed combination of ker(pi_D).
  Vector lift(const Matrix& w, bool alternative = false) const;
  Matrix d_sigma2(const Matrix& w, bool alternative = false) const;
  Vector d_psi(const Matrix& w, bool alternative = false) const;

  /// d_sigma2 / d_psi on the one-form basis, as columns (vec / quotient coords).
  const Matrix& d_sigma2_basis() const { return dsig_; }
  const Matrix& d_psi_basis() const { return dpsi_; }
  /// Largest lift-dependence seen when the basis columns were built.
  double lift_dependence() const { return lift_dependence_; }

  /// T_sigma = sigma2 m N - d_sigma2, columns are vectorized operators.
  Matrix torsion_sigma(const Matrix& n) const;
  /// T_Psi = (1 - Psi) N - d_Psi, columns are quotient coordinates.
  Matrix torsion_psi(const Matrix& n) const;
  /// sigma2 m M and (1 - Psi) M: the parts linear in a module map.
  Matrix sigma_linear(const Matrix& m) const;
  Matrix psi_linear(const Matrix& m) const;
  /// m applied columnwise: quotient coordinates -> vectorized operators.
  Matrix multiply_columns(const Matrix& q) const;
  Matrix sigma_columns(const Matrix& v) const;

 private:
  FiniteSpectralTriple t_;
  CalculusSpaces c_;
  PsiProjection psi_;
  std::vector<Matrix> omega_mats_;
  Matrix lift_map_;    // pi_D restricted to universal one-forms
  Vector kernel_shift_;
  Matrix dsig_, dpsi_;
  double lift_dependence_ = 0.0;
};

// ============================================================ connections

struct Connection {
  Matrix coeffs;  // tensor-square quotient coords x one-form coords
  double leibniz_residual = 0.0;
};

/// Connections as base + span of left module maps Omega^1 -> T^2. The maps
/// are orthonormal (Frobenius) and stored either one by one or, for a
/// commutative algebra, as blocks (out, in) standing for every
/// out.col(s) in.col(t)^* (index offset + s * in.cols() + t).
struct ConnectionSpace {
  Connection base;  // minimum-norm solution of the Leibniz system
  std::vector<Matrix> dense_maps;
  std::vector<std::pair<Matrix, Matrix>> blocks;

  Index count() const;
  Matrix module_map(Index k) const;
  /// sum_k c_k module_map(k).
  Matrix combine(const Vector& c) const;
};

/// max over algebra basis a and one-form basis w of
/// ||N(a w) - a N(w) - [D,a] (x) w||.
double leibniz_residual(const CalculusContext& ctx, const Matrix& n);
/// max over algebra basis a and one-form basis w of ||M(a w) - a M(w)||.
double left_linearity_residual(const CalculusContext& ctx, const Matrix& m);

ConnectionSpace connection_space(const CalculusContext& ctx);

/// Connection on the two-point space determined by nabla(eta) = c eta (x) eta,
/// c = diag(c_plus, c_minus).
Connection z2_connection(const CalculusContext& ctx, const TwoPointData& td, Complex c_plus,
                         Complex c_minus);

struct Z2Parameters {
  Complex c_plus, c_minus;
  double fit_residual;
};
/// Reads off c from nabla(eta) = (c_minus + (c_plus - c_minus) e_plus) eta (x) eta.
Z2Parameters z2_parameters(const CalculusContext& ctx, const TwoPointData& td, const Matrix& n);

struct ProductConnection {
  Connection connection;
  double consistency_residual = 0.0;  // the spanning-set definition is well defined
};

/// Product-type connection from factor connections given on the factor
/// one-form bases of ctx1 / ctx2.
ProductConnection product_connection(const ProductTriple& pt, const CalculusContext& ctx,
                                     const CalculusContext& ctx1, const Matrix& n1,
                                     const CalculusContext& ctx2, const Matrix& n2);

/// S(w) = (1 - Psi)(w (x) D2) on E1, 0 on E2.
Matrix perturbation_S(const ProductTriple& pt, const CalculusContext& ctx);

// ============================================================ functionals

enum class TableKind { Spectral, Sigma2, Psi, Reduced, SpectralD2 };

std::string table_kind_name(TableKind k);

struct TorsionFunctionalTable {
  TableKind kind = TableKind::Spectral;
  Index r = 0;          // one-form basis size
  Vector values;        // index (u * r + v) * r + w
  std::vector<std::string> labels;

  Complex at(Index u, Index v, Index w) const { return values((u * r + v) * r + w); }
  double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

/// Tr(u v X_w) for the one-form basis u, v and operator columns X (vectorized).
TorsionFunctionalTable trace_table(const CalculusContext& ctx, const Matrix& x, TableKind kind,
                                   bool sigma_on_uv = false);

/// spectral: X = w D; Sigma2 / Psi need a connection; Reduced and SpectralD2
/// use the operator `d2` (e.g. gamma (x) D_phi).
TorsionFunctionalTable functional_table(const CalculusContext& ctx, TableKind kind,
                                        const Matrix* connection = nullptr,
                                        const Matrix* d2 = nullptr);

enum class TorsionKind { Sigma2, Psi };

struct MatchSolution {
  Connection connection;
  Vector theta;             // coordinates over the module-map basis
  Index solution_dim = 0;   // nullity of the linear part; 0 means unique
  double residual = 0.0;
  bool matched = false;
};

/// Connection whose torsion functional table equals `target`.
MatchSolution solve_matching_connection(const CalculusContext& ctx,
                                        const TorsionFunctionalTable& target, TorsionKind kind);

/// Connection whose torsion map equals `target` (vec operators for Sigma2,
/// quotient coords for Psi, one column per one-form basis vector).
MatchSolution solve_torsion_map(const CalculusContext& ctx, const Matrix& target, TorsionKind kind);

/// Gamma(n/2+1) / (Gamma(n1/2+1) Gamma(n2/2+1)), n = n1 + n2.
double dixmier_constant(double n1, double n2);

// ============================================================ helpers

/// Psi = 0: the two-point space, or any triple studied in the sigma2 calculus only.
CalculusContext make_plain_context(const FiniteSpectralTriple& t);
/// Psi = (1 + flip)/2: first-factor surrogate.
CalculusContext make_flip_context(const FiniteSpectralTriple& t);
CalculusContext make_product_context(const ProductTriple& pt);

}  // namespace nct
