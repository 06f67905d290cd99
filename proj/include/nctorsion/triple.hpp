#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nctorsion/linalg.hpp"

namespace nct {

/// Characters of a commutative algebra, read off from a generic self-adjoint
/// element h: each distinct eigenvalue of h belongs to one minimal idempotent.
struct AlgebraCharacters {
  Matrix h;
  std::vector<double> values;       // ascending
  std::vector<Matrix> idempotents;  // spectral projections of h, same order
  double separation = 0.0;          // smallest gap between values
};

/// A finite spectral triple (A, H, D[, gamma]) given by matrices.
///
/// The algebra is described by a basis whose first element is the identity;
/// every invariant is checked at construction and violations throw
/// ConstructionError naming the failed condition.
class FiniteSpectralTriple {
 public:
  FiniteSpectralTriple() = default;
  FiniteSpectralTriple(std::string label, std::vector<Matrix> algebra_basis, Matrix dirac,
                       std::optional<Matrix> grading = std::nullopt, Tolerances tol = {});

  Index hilbert_dim() const { return dirac_.rows(); }
  Index algebra_dim() const { return static_cast<Index>(algebra_basis_.size()); }
  const std::vector<Matrix>& algebra_basis() const { return algebra_basis_; }
  const Matrix& dirac() const { return dirac_; }
  const std::optional<Matrix>& grading() const { return grading_; }
  bool has_grading() const { return grading_.has_value(); }
  const std::string& label() const { return label_; }
  const Tolerances& tolerances() const { return tol_; }

  /// [D, a_i] for every algebra basis element.
  const std::vector<Matrix>& commutators() const { return commutators_; }
  /// Orthonormal basis of span(A) inside vectorized operators.
  const Subspace& algebra_span() const { return algebra_span_; }
  /// Spectral norm of D.
  double dirac_norm() const { return dirac_norm_; }
  /// True when every [D, a] vanishes, so that all one-forms are zero.
  bool degenerate() const { return degenerate_; }
  /// Set when the algebra is commutative.
  const std::optional<AlgebraCharacters>& characters() const { return characters_; }

  /// Hilbert-Schmidt projection onto span(A) (trace-preserving conditional
  /// expectation).
  Matrix conditional_expectation(const Matrix& x) const;

 private:
  std::string label_;
  std::vector<Matrix> algebra_basis_;
  Matrix dirac_;
  std::optional<Matrix> grading_;
  Tolerances tol_;
  std::vector<Matrix> commutators_;
  Subspace algebra_span_;
  double dirac_norm_ = 0.0;
  bool degenerate_ = false;
  std::optional<AlgebraCharacters> characters_;
};

/// Data of the two-point space: H = h_+ (+) h_-, D_phi = [[0, phi], [phi^*, 0]].
/// e_plus is the projection onto the first block (of size rows(phi)).
struct TwoPointData {
  Matrix phi;
  Matrix D_phi;
  Matrix e_plus;
  Matrix eta;  // [D_phi, e_plus]
};

struct ProductTriple {
  FiniteSpectralTriple factor1;
  FiniteSpectralTriple factor2;
  FiniteSpectralTriple total;
  Matrix D1_part;  // D_1 (x) 1
  Matrix D2_part;  // gamma (x) D_2
  Subspace E1;     // span{omega (x) b}
  Subspace E2;     // span{gamma a (x) u}
  /// Orthonormal basis of the total one-forms: E1 columns then E2 columns.
  Subspace omega;
  std::optional<TwoPointData> two_point;  // set when factor2 is a two-point space
  double dirac_square_residual = 0.0;
  double block_overlap = 0.0;  // max |<e1, e2>| over basis vectors
};

std::pair<FiniteSpectralTriple, TwoPointData> build_two_point(const Matrix& phi,
                                                              Tolerances tol = {});
FiniteSpectralTriple build_graded_two_point(Complex z, Tolerances tol = {});
FiniteSpectralTriple build_clifford_torus(Index n, Index d = 2, Tolerances tol = {});

/// General user triple; the grading is optional.
FiniteSpectralTriple build_user_triple(std::string label, std::vector<Matrix> algebra_basis,
                                       Matrix dirac, std::optional<Matrix> grading,
                                       Tolerances tol = {});

ProductTriple build_product(const FiniteSpectralTriple& t1, const FiniteSpectralTriple& t2,
                            std::optional<TwoPointData> two_point = std::nullopt);

/// span{a_i [D, a_j]} in basis-pair order.
Subspace one_form_basis(const FiniteSpectralTriple& t);

/// One-form basis vectors reshaped as operators.
std::vector<Matrix> basis_matrices(const Subspace& s);

/// max |Tr(q D)| over words q of length 1..max_degree in the algebra basis and
/// the orthonormal one-form basis.
double check_spectrally_closed(const FiniteSpectralTriple& t, int max_degree = 3);

/// Coordinates of an operator inside a subspace; throws PreconditionError
/// with `what` in the message when the operator lies outside.
Vector coordinates_in(const Subspace& s, const Matrix& x, double tol, const std::string& what);

}  // namespace nct
