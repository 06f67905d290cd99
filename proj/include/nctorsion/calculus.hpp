#pragma once

#include <utility>
#include <vector>

#include "nctorsion/linalg.hpp"
#include "nctorsion/triple.hpp"

namespace nct {

/// Universal forms over an algebra basis a_0..a_{k-1}, modelled on pair
/// coordinates: coordinate p = i * k + j stands for a_i (x) a_j.
struct UniversalForms {
  std::vector<std::pair<Index, Index>> pair_basis;
  Matrix mult_map;          // (i,j) -> vec(a_i a_j)
  Subspace one_form_space;  // ker(mult_map)
  Matrix pi_map;            // (i,j) -> vec(a_i [D, a_j])
  Matrix delta_map;         // (i,j) -> vec([D, a_i][D, a_j])
  Matrix delta_tensor_map;  // (i,j) -> [D, a_i] (x)_A [D, a_j], filled by junk_spaces
};

UniversalForms universal_forms(const FiniteSpectralTriple& t);

/// Balanced tensor product M1 (x)_A M2 of operator bimodules, modelled by the
/// orthogonal complement of the balancing relations inside plain tensor
/// coordinates. Optional block ranges of the module bases split the quotient
/// into sub-blocks, ordered (1,1), (1,2), ..., (2,1), ... .
///
/// For a commutative algebra the complement is spanned by simple tensors
/// u_i (x) v_j, u_i an eigenvector of right multiplication on M1 and v_j one of
/// left multiplication on M2 with the same character; otherwise the relations
/// are spanned explicitly.
class BalancedTensorSpace {
 public:
  using Blocks = std::vector<std::pair<Index, Index>>;

  BalancedTensorSpace() = default;
  BalancedTensorSpace(const Subspace& left_module, const Subspace& right_module,
                      const FiniteSpectralTriple& t, const Blocks& left_blocks = {},
                      const Blocks& right_blocks = {}, bool allow_simple = true);

  const Subspace& left_module() const { return left_; }
  const Subspace& right_module() const { return right_; }
  /// Orthonormal quotient basis inside plain tensor coordinates.
  const Matrix& Q() const { return q_; }
  Index dim() const { return q_.cols(); }
  Index plain_dim() const { return left_.dim() * right_.dim(); }
  const std::vector<Matrix>& left_basis() const { return left_mats_; }
  const std::vector<Matrix>& right_basis() const { return right_mats_; }
  const Blocks& block_ranges() const { return block_ranges_; }

  /// Columns spanning the relations (all of them) or, in the simple case,
  /// seeded random relations used by certificates.
  const Matrix& relation_samples() const { return relation_samples_; }
  bool simple() const { return simple_; }
  /// Simple case: Q column k is left_eig.col(i) (x) right_eig.col(j), (i, j) = pairs()[k].
  const Matrix& left_eig() const { return u_; }
  const Matrix& right_eig() const { return v_; }
  const std::vector<std::pair<Index, Index>>& pairs() const { return pairs_; }

  /// Plain tensor coordinates of x (x) y.
  Vector plain(const Matrix& x, const Matrix& y) const;
  /// Quotient coordinates of the class of x (x)_A y.
  Vector coords(const Matrix& x, const Matrix& y) const;
  /// Same, from module coordinates of x and y.
  Vector coords_from(const Vector& cx, const Vector& cy) const;
  /// Quotient coordinates of the plain tensor sum_{p,q} p(p, q) e_p (x) f_q.
  Vector coords_of_plain(const Matrix& p) const;
  /// Operator product of a tensor given in quotient coordinates.
  Matrix multiply(const Vector& q) const;
  /// Multiplication as a matrix: quotient coords -> vectorized operators.
  const Matrix& mult_map() const { return mult_map_; }
  /// Action of left multiplication by a on quotient coordinates.
  Matrix left_action(const Matrix& a) const;
  /// Left multiplication by a on left-module coordinates.
  Matrix left_module_action(const Matrix& a) const;
  /// Right multiplication by a on left-module coordinates.
  Matrix right_module_action(const Matrix& a) const;
  /// max ||m(relation)|| over relation_samples() (multiplication is balanced).
  double balance_residual() const { return balance_residual_; }

 private:
  bool build_simple(const FiniteSpectralTriple& t, const Blocks& lb, const Blocks& rb);
  void build_dense(const FiniteSpectralTriple& t, const Blocks& lb, const Blocks& rb);

  Subspace left_, right_;
  std::vector<Matrix> left_mats_, right_mats_;
  Matrix q_, mult_map_, relation_samples_;
  Blocks block_ranges_;
  bool simple_ = false;
  Matrix u_, v_;
  std::vector<std::pair<Index, Index>> pairs_;
  std::vector<std::vector<Index>> by_right_;  // quotient columns sharing j
  Index n_ = 0;
  double tol_ = 1e-8;
  double balance_residual_ = 0.0;
};

BalancedTensorSpace balanced_tensor(const Subspace& m1, const Subspace& m2,
                                    const FiniteSpectralTriple& t);

struct CalculusSpaces {
  UniversalForms universal;
  Subspace omega1;         // orthonormal one-form basis used for all coordinates
  Subspace pi_kernel;      // ker(pi_D) inside universal one-forms (pair coords)
  Subspace two_form_image; // span{a [D,b][D,c]}
  Subspace junk2;          // pi(delta(ker pi_D))
  Matrix sigma2;           // projection on two_form_image coordinates
  BalancedTensorSpace tensor_square;
  Subspace junk_tensors;   // in tensor-square quotient coordinates
  Index hilbert_dim = 0;
  double junk_scale = 1.0;

  /// X minus its projection onto junk two-forms.
  Matrix sigma(const Matrix& x) const;
};

CalculusSpaces junk_spaces(const FiniteSpectralTriple& t);
/// Product version: one-forms in the E1 | E2 basis and a block-split tensor square.
CalculusSpaces junk_spaces(const ProductTriple& pt);

}  // namespace nct
