#include "nctorsion/linalg.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace nct {

namespace {

std::string shape_of(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

double largest_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  // largest eigenvalue of the smaller Gram matrix
  const Matrix g = m.rows() <= m.cols() ? Matrix(m * m.adjoint()) : Matrix(m.adjoint() * m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

Vector vectorize(const Matrix& m) {
  Vector v(m.size());
  const Index c = m.cols();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < c; ++j) v(i * c + j) = m(i, j);
  return v;
}

Matrix unvectorize(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols)
    throw DimensionError("unvectorize: length " + std::to_string(v.size()) + " does not fit " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

Matrix unvectorize(const Vector& v) {
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != v.size())
    throw DimensionError("unvectorize: length " + std::to_string(v.size()) + " is not a square");
  return unvectorize(v, n, n);
}

Complex hs_inner(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("hs_inner: shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  return (b.adjoint() * a).trace();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix commutator(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || b.cols() != a.rows())
    throw DimensionError("commutator: shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  return a * b - b * a;
}

// ---------------------------------------------------------------- Subspace

Subspace::Subspace(Index ambient_dim, Matrix basis, double rank_tol)
    : ambient_dim_(ambient_dim), basis_(std::move(basis)), rank_tol_(rank_tol) {
  if (basis_.cols() == 0) basis_.resize(ambient_dim_, 0);
  if (basis_.rows() != ambient_dim_)
    throw DimensionError("Subspace: basis rows " + std::to_string(basis_.rows()) +
                         " != ambient dim " + std::to_string(ambient_dim_));
  if (basis_.cols() > ambient_dim_)
    throw DimensionError("Subspace: more basis vectors than ambient dimension");
}

Subspace Subspace::zero(Index ambient_dim, double rank_tol) {
  return Subspace(ambient_dim, Matrix(ambient_dim, 0), rank_tol);
}

Subspace Subspace::full(Index ambient_dim, double rank_tol) {
  return Subspace(ambient_dim, Matrix::Identity(ambient_dim, ambient_dim), rank_tol);
}

Matrix Subspace::basis_matrix(Index i) const { return unvectorize(basis_.col(i)); }

void Subspace::check_length(Index n) const {
  if (n != ambient_dim_)
    throw DimensionError("Subspace: vector length " + std::to_string(n) + " != ambient dim " +
                         std::to_string(ambient_dim_));
}

Vector Subspace::coordinates(const Vector& v) const {
  check_length(v.size());
  return basis_.adjoint() * v;
}

Vector Subspace::embed(const Vector& coords) const {
  if (coords.size() != dim())
    throw DimensionError("Subspace::embed: expected " + std::to_string(dim()) + " coordinates");
  if (dim() == 0) return Vector::Zero(ambient_dim_);
  return basis_ * coords;
}

Vector Subspace::project(const Vector& v) const {
  check_length(v.size());
  if (dim() == 0) return Vector::Zero(ambient_dim_);
  return basis_ * (basis_.adjoint() * v);
}

double Subspace::residual(const Vector& v) const { return (v - project(v)).norm(); }

Matrix Subspace::projector() const {
  if (dim() == 0) return Matrix::Zero(ambient_dim_, ambient_dim_);
  return basis_ * basis_.adjoint();
}

// ---------------------------------------------------------------- span

Subspace span(std::span<const Vector> vectors, Index ambient_dim, double rank_tol,
              double scale) {
  if (!(rank_tol > 0)) throw PreconditionError("span: rank_tol must be positive");
  if (vectors.empty()) return Subspace::zero(ambient_dim, rank_tol);
  Matrix stacked(ambient_dim, static_cast<Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (vectors[k].size() != ambient_dim)
      throw DimensionError("span: vector " + std::to_string(k) + " has length " +
                           std::to_string(vectors[k].size()) + ", expected " +
                           std::to_string(ambient_dim));
    stacked.col(static_cast<Index>(k)) = vectors[k];
  }
  const double cutoff = rank_tol * std::max(largest_singular_value(stacked), scale);

  // pivoted QR; greedy Gram-Schmidt kept noise directions on large families
  Index kept = 0;
  Matrix basis(ambient_dim, 0);
  if (cutoff > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
    const auto r = qr.matrixQR().diagonal();
    while (kept < r.size() && std::abs(r(kept)) > cutoff) ++kept;
    basis = qr.householderQ() * Matrix::Identity(ambient_dim, kept);
  }
  return Subspace(ambient_dim, std::move(basis), rank_tol);
}

Subspace span_matrices(std::span<const Matrix> mats, double rank_tol, double scale) {
  if (mats.empty()) return Subspace::zero(0, rank_tol);
  std::vector<Vector> vs;
  vs.reserve(mats.size());
  for (const Matrix& m : mats) {
    if (m.rows() != mats[0].rows() || m.cols() != mats[0].cols())
      throw DimensionError("span: inconsistent shapes " + shape_of(mats[0]) + " vs " +
                           shape_of(m));
    vs.push_back(vectorize(m));
  }
  return span(vs, mats[0].size(), rank_tol, scale);
}

Vector project(const Subspace& s, const Vector& v) { return s.project(v); }

Containment contains(const Subspace& s, const Subspace& t, double tol) {
  if (s.ambient_dim() != t.ambient_dim())
    throw DimensionError("contains: ambient dimensions differ");
  Containment c;
  for (Index i = 0; i < t.dim(); ++i)
    c.max_residual = std::max(c.max_residual, s.residual(t.basis_vector(i)));
  c.contained = c.max_residual <= tol;
  return c;
}

// ---------------------------------------------------------------- nullspace / lsq

namespace {

struct Svd {
  Vector s;
  Matrix u, v;
};

// BDCSVD loses accuracy on some structured inputs; verify and fall back to JacobiSVD.
Svd checked_svd(const Matrix& l, bool full_v) {
  const unsigned opts = Eigen::ComputeThinU | (full_v ? Eigen::ComputeFullV : Eigen::ComputeThinV);
  const double tol = 1e-11 * (1.0 + l.norm());
  auto accurate = [&](const Svd& d) {
    const Index k = d.s.size();
    if ((l * d.v.leftCols(k) - d.u * d.s.asDiagonal()).norm() > tol) return false;
    if (d.v.cols() > k && (l * d.v.rightCols(d.v.cols() - k)).norm() > tol) return false;
    return (d.v.adjoint() * d.v - Matrix::Identity(d.v.cols(), d.v.cols())).norm() <= 1e-10;
  };
  Eigen::BDCSVD<Matrix> bdc(l, opts);
  Svd out{bdc.singularValues().cast<Complex>(), bdc.matrixU(), bdc.matrixV()};
  if (accurate(out)) return out;
  Eigen::JacobiSVD<Matrix> jac(l, opts);
  return {jac.singularValues().cast<Complex>(), jac.matrixU(), jac.matrixV()};
}

}  // namespace

Subspace nullspace(const Matrix& l, double rank_tol, double scale) {
  const Index n = l.cols();
  if (l.rows() == 0 || n == 0) return Subspace::full(n, rank_tol);
  const Svd svd = checked_svd(l, true);
  const Eigen::VectorXd s = svd.s.real();
  const double smax = s.size() ? s(0) : 0.0;
  const double cutoff = rank_tol * std::max(smax, scale);
  Index rank = 0;
  if (smax > 0)
    for (Index i = 0; i < s.size(); ++i)
      if (s(i) > cutoff) ++rank;
  Matrix basis = svd.v.rightCols(n - rank);
  return Subspace(n, std::move(basis), rank_tol);
}

Index numerical_rank(const Matrix& l, double rank_tol, double scale) {
  return l.cols() - nullspace(l, rank_tol, scale).dim();
}

LeastSquares least_squares(const Matrix& l, const Vector& b, double rank_tol) {
  if (l.rows() != b.size()) throw DimensionError("least_squares: rhs length mismatch");
  LeastSquares out;
  const Index n = l.cols();
  if (n == 0) {
    out.solution = Vector::Zero(0);
    out.residual = b.norm();
    return out;
  }
  if (l.rows() == 0) {
    out.solution = Vector::Zero(n);
    out.nullity = n;
    return out;
  }
  const Svd svd = checked_svd(l, false);
  const Eigen::VectorXd s = svd.s.real();
  const double smax = s.size() ? s(0) : 0.0;
  Index rank = 0;
  if (smax > 0)
    for (Index i = 0; i < s.size(); ++i)
      if (s(i) > rank_tol * smax) ++rank;
  Vector x = Vector::Zero(n);
  for (Index i = 0; i < rank; ++i)
    x += svd.v.col(i) * (svd.u.col(i).dot(b) / s(i));
  out.solution = x;
  out.nullity = n - rank;
  out.residual = (l * x - b).norm();
  return out;
}

// ---------------------------------------------------------------- QuotientSpace

QuotientSpace::QuotientSpace(Subspace ambient, Subspace relations,
                             const std::vector<std::vector<Index>>& blocks)
    : ambient_(std::move(ambient)), relations_(std::move(relations)) {
  const Index n = ambient_.ambient_dim();
  if (relations_.ambient_dim() != n)
    throw DimensionError("QuotientSpace: relation and ambient coordinates differ");
  const double tol = std::max(ambient_.rank_tol(), relations_.rank_tol());
  const auto inside = contains(ambient_, relations_, tol * 1e2 * (1.0 + relations_.dim()));
  if (!inside.contained)
    throw PreconditionError("QuotientSpace: relations not contained in ambient (residual " +
                            std::to_string(inside.max_residual) + ")");

  // Candidates already have unit scale; survivors of the projection are kept
  // when clearly nonzero.
  const double keep = std::max(tol * 1e2, 1e-8);
  std::vector<Vector> kept;
  auto absorb = [&](const Vector& cand) {
    Vector w = cand - relations_.project(cand);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& b : kept) w -= b * b.dot(w);
    const double nw = w.norm();
    if (nw > keep) kept.push_back(w / nw);
  };

  if (blocks.empty()) {
    for (Index i = 0; i < ambient_.dim(); ++i) absorb(ambient_.basis_vector(i));
    block_ranges_.emplace_back(0, static_cast<Index>(kept.size()));
  } else {
    if (ambient_.dim() != n)
      throw PreconditionError("QuotientSpace: block decomposition needs a full ambient space");
    for (const auto& block : blocks) {
      const auto start = static_cast<Index>(kept.size());
      for (Index idx : block) {
        if (idx < 0 || idx >= n) throw DimensionError("QuotientSpace: block index out of range");
        absorb(Vector::Unit(n, idx));
      }
      block_ranges_.emplace_back(start, static_cast<Index>(kept.size()));
    }
  }
  quotient_basis_.resize(n, static_cast<Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k)
    quotient_basis_.col(static_cast<Index>(k)) = kept[k];

  if (quotient_basis_.cols() != ambient_.dim() - relations_.dim())
    throw ConstructionError("QuotientSpace: complement has dimension " +
                            std::to_string(quotient_basis_.cols()) + ", expected " +
                            std::to_string(ambient_.dim() - relations_.dim()) +
                            " (relations do not split along the blocks?)");
}

Vector QuotientSpace::project_to_quotient(const Vector& ambient_coords) const {
  if (ambient_coords.size() != quotient_basis_.rows())
    throw DimensionError("QuotientSpace: coordinate length mismatch");
  return quotient_basis_.adjoint() * ambient_coords;
}

Vector QuotientSpace::include_representative(const Vector& quotient_coords) const {
  if (quotient_coords.size() != dim())
    throw DimensionError("QuotientSpace: quotient coordinate length mismatch");
  if (dim() == 0) return Vector::Zero(quotient_basis_.rows());
  return quotient_basis_ * quotient_coords;
}

// ---------------------------------------------------------------- induced maps

InducedMap induced_map(const Subspace& domain, std::span<const Vector> spanning,
                       std::span<const Vector> images, double rank_tol) {
  if (spanning.size() != images.size())
    throw DimensionError("induced_map: spanning family and images differ in length");
  InducedMap out;
  if (spanning.empty()) {
    out.matrix = Matrix::Zero(0, domain.dim());
    return out;
  }
  const auto m = static_cast<Index>(spanning.size());
  const Index cod = images[0].size();
  Matrix c(domain.dim(), m), ci(cod, m);
  double cover = 0.0;
  for (Index k = 0; k < m; ++k) {
    const Vector& v = spanning[static_cast<std::size_t>(k)];
    c.col(k) = domain.coordinates(v);
    cover = std::max(cover, domain.residual(v));
    if (images[static_cast<std::size_t>(k)].size() != cod)
      throw DimensionError("induced_map: images have inconsistent lengths");
    ci.col(k) = images[static_cast<std::size_t>(k)];
  }
  // Solve L c = ci row by row: L = ci c^+ in the minimum-norm sense.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod_c(c.adjoint());
  cod_c.setThreshold(rank_tol);
  out.matrix = cod_c.solve(ci.adjoint()).adjoint();
  out.consistency_residual = std::max((out.matrix * c - ci).norm(), cover);
  return out;
}

}  // namespace nct
