#pragma once

// Dense complex linear algebra used throughout the workbench: Hilbert-Schmidt
// geometry on matrices, orthonormal subspaces, quotients and least squares.
//
// Conventions:
//   * matrices vectorize row-major: entry (i, j) of an r x c matrix sits at
//     coordinate i * c + j;
//   * a tensor x (x) y of coordinate vectors lives at index p * dim(y) + q
//     (first factor is the slow index);
//   * hs_inner(A, B) = Tr(B^* A), which is the coordinate inner product
//     <vec B, vec A> under the convention above.

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nct {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical thresholds shared by every module.
///
/// rank_tol is relative to the largest singular value of whatever is being
/// ranked; compare_tol is used as compare_tol * (1 + scale).
struct Tolerances {
  double rank_tol = 1e-10;
  double compare_tol = 1e-8;

  double compare(double scale) const { return compare_tol * (1.0 + scale); }
};

Vector vectorize(const Matrix& m);
Matrix unvectorize(const Vector& v, Index rows, Index cols);
/// Square matrix from a vector of length n*n.
Matrix unvectorize(const Vector& v);

Complex hs_inner(const Matrix& a, const Matrix& b);
Matrix kron(const Matrix& a, const Matrix& b);
Matrix commutator(const Matrix& a, const Matrix& b);

/// Orthonormal basis (as columns) of a linear span of coordinate vectors.
class Subspace {
 public:
  Subspace() = default;
  Subspace(Index ambient_dim, Matrix basis, double rank_tol);

  static Subspace zero(Index ambient_dim, double rank_tol = 1e-10);
  static Subspace full(Index ambient_dim, double rank_tol = 1e-10);

  Index ambient_dim() const { return ambient_dim_; }
  Index dim() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  double rank_tol() const { return rank_tol_; }

  Vector basis_vector(Index i) const { return basis_.col(i); }
  /// Basis vector i reshaped into a square matrix (ambient must be n*n).
  Matrix basis_matrix(Index i) const;

  /// Coordinates in the orthonormal basis (basis^* v).
  Vector coordinates(const Vector& v) const;
  Vector embed(const Vector& coords) const;
  Vector project(const Vector& v) const;
  /// ||v - project(v)||.
  double residual(const Vector& v) const;
  /// Orthogonal projector as an ambient x ambient matrix.
  Matrix projector() const;

 private:
  void check_length(Index n) const;

  Index ambient_dim_ = 0;
  Matrix basis_;
  double rank_tol_ = 1e-10;
};

/// Ordered Gram-Schmidt with one re-orthogonalization pass.
/// A vector is kept when its residual exceeds rank_tol * max(smax, scale),
/// smax being the largest singular value of the input family. scale lets
/// callers state the natural magnitude of the family, so that a family of
/// rounding-level vectors is recognised as zero.
Subspace span(std::span<const Vector> vectors, Index ambient_dim, double rank_tol,
              double scale = 0.0);
Subspace span_matrices(std::span<const Matrix> mats, double rank_tol, double scale = 0.0);

/// Orthogonal projection of v onto S.
Vector project(const Subspace& s, const Vector& v);

struct Containment {
  bool contained = true;
  double max_residual = 0.0;
};

Containment contains(const Subspace& s, const Subspace& t, double tol);

/// Orthonormal basis of {v : L v ~ 0}; singular values below
/// rank_tol * max(smax, scale) are treated as zero.
Subspace nullspace(const Matrix& l, double rank_tol, double scale = 0.0);

/// Numerical rank with the same cutoff convention as nullspace.
Index numerical_rank(const Matrix& l, double rank_tol, double scale = 0.0);

struct LeastSquares {
  Vector solution;        // minimum-norm minimizer of ||L x - b||
  Index nullity = 0;      // dim nullspace(L)
  double residual = 0.0;  // ||L x - b||
};

LeastSquares least_squares(const Matrix& l, const Vector& b, double rank_tol = 1e-10);

/// Quotient of an ambient coordinate space by a relation subspace, modelled by
/// the orthogonal complement of the relations.  When block index sets are
/// given, the complement is assembled block by block (the relations must then
/// split along the blocks) and block_ranges() records where each block's
/// quotient coordinates live.
class QuotientSpace {
 public:
  QuotientSpace() = default;
  QuotientSpace(Subspace ambient, Subspace relations,
                const std::vector<std::vector<Index>>& blocks = {});

  const Subspace& ambient() const { return ambient_; }
  const Subspace& relations() const { return relations_; }
  /// Columns are orthonormal ambient coordinate vectors.
  const Matrix& quotient_basis() const { return quotient_basis_; }
  Index dim() const { return quotient_basis_.cols(); }
  const std::vector<std::pair<Index, Index>>& block_ranges() const { return block_ranges_; }

  Vector project_to_quotient(const Vector& ambient_coords) const;
  /// Minimum-norm coset representative.
  Vector include_representative(const Vector& quotient_coords) const;

 private:
  Subspace ambient_;
  Subspace relations_;
  Matrix quotient_basis_;
  std::vector<std::pair<Index, Index>> block_ranges_;
};

/// A linear map specified on a spanning family of a domain subspace.
struct InducedMap {
  Matrix matrix;                   // codomain coords x domain coords
  double consistency_residual = 0;  // how far the images violate linear relations
};

/// Builds the linear map on `domain` coordinates that sends each spanning
/// vector to the matching image vector (given in codomain coordinates).
/// Linear dependencies among the spanning vectors must be respected by the
/// images; the violation is reported, not thrown.
InducedMap induced_map(const Subspace& domain, std::span<const Vector> spanning,
                       std::span<const Vector> images_in_codomain_coords, double rank_tol);

}  // namespace nct
