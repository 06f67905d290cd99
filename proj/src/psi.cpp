#include <algorithm>

#include <Eigen/Sparse>

#include "nctorsion/torsion.hpp"

namespace nct {

namespace {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

// ||Q^* B R|| over the relation columns: B maps relations to relations.
double descent_residual(const BalancedTensorSpace& ts, const SparseMatrix& b) {
  const Matrix& rel = ts.relation_samples();
  if (rel.cols() == 0) return 0.0;
  return (ts.Q().adjoint() * (b * rel)).norm();
}

Subspace column_span(const Matrix& m, double rank_tol) {
  std::vector<Vector> cols;
  for (Index j = 0; j < m.cols(); ++j) cols.push_back(m.col(j));
  return span(cols, m.rows(), rank_tol, 1.0);
}

void image_certificates(const CalculusSpaces& c, PsiProjection& psi, double rank_tol) {
  const Subspace im = column_span(psi.map, rank_tol);
  psi.cert.junk_in_image = contains(im, c.junk_tensors, 0.0).max_residual;
  double worst = 0.0;
  for (Index i = 0; i < im.dim(); ++i)
    worst = std::max(worst, c.junk2.residual(vectorize(c.tensor_square.multiply(im.basis_vector(i)))));
  psi.cert.image_in_junk = worst;
}

// Tau with omega a = tau(a) omega for every one-form omega of t.
std::vector<Matrix> twist(const FiniteSpectralTriple& t, double& residual) {
  const auto oms = basis_matrices(one_form_basis(t));
  const auto& alg = t.algebra_basis();
  const Index nn = t.hilbert_dim() * t.hilbert_dim();
  const auto m = static_cast<Index>(oms.size());
  Matrix l(nn * m, t.algebra_dim());
  for (Index k = 0; k < t.algebra_dim(); ++k)
    for (Index j = 0; j < m; ++j)
      l.block(j * nn, k, nn, 1) = vectorize(alg[static_cast<std::size_t>(k)] * oms[static_cast<std::size_t>(j)]);
  std::vector<Matrix> taus;
  residual = 0.0;
  for (const Matrix& a : alg) {
    Vector b(nn * m);
    for (Index j = 0; j < m; ++j) b.segment(j * nn, nn) = vectorize(oms[static_cast<std::size_t>(j)] * a);
    const LeastSquares ls = least_squares(l, b, t.tolerances().rank_tol);
    residual = std::max(residual, ls.residual);
    Matrix tau = Matrix::Zero(t.hilbert_dim(), t.hilbert_dim());
    for (Index k = 0; k < t.algebra_dim(); ++k) tau += ls.solution(k) * alg[static_cast<std::size_t>(k)];
    taus.push_back(tau);
  }
  return taus;
}

}  // namespace

Matrix two_point_alpha(const Matrix& b, const TwoPointData& td) {
  const Index n = td.D_phi.rows();
  const Complex f = b(0, 0), g = b(n - 1, n - 1);
  const Matrix id = Matrix::Identity(n, n);
  return g * td.e_plus + f * (id - td.e_plus);
}

PsiProjection zero_psi(const CalculusSpaces& c) {
  PsiProjection psi;
  const Index dq = c.tensor_square.dim();
  psi.map = Matrix::Zero(dq, dq);
  psi.blocks = c.tensor_square.block_ranges();
  psi.is_zero = true;
  image_certificates(c, psi, c.omega1.rank_tol());
  return psi;
}

PsiProjection flip_psi(const CalculusSpaces& c, const FiniteSpectralTriple& t) {
  const BalancedTensorSpace& ts = c.tensor_square;
  const Index r = c.omega1.dim(), dq = ts.dim();
  std::vector<Eigen::Triplet<Complex>> ft;
  for (Index p = 0; p < r; ++p)
    for (Index q = 0; q < r; ++q) ft.emplace_back(q * r + p, p * r + q, 1.0);
  SparseMatrix f(r * r, r * r);
  f.setFromTriplets(ft.begin(), ft.end());
  PsiProjection psi;
  psi.blocks = ts.block_ranges();
  psi.cert.descent11 = descent_residual(ts, f);
  psi.beta11 = ts.Q().adjoint() * (f * ts.Q());
  psi.map = 0.5 * (Matrix::Identity(dq, dq) + psi.beta11);
  psi.gram = tensor_gram(c, AValuedInner(t, c.omega1)).gram;
  psi.cert.idempotent = (psi.map * psi.map - psi.map).norm();
  psi.cert.self_adjoint = (psi.gram * psi.map - psi.map.adjoint() * psi.gram).norm();
  psi.cert.beta11_square = (psi.beta11 * psi.beta11 - Matrix::Identity(dq, dq)).norm();
  psi.cert.beta11_adjoint = (psi.gram * psi.beta11 - psi.beta11.adjoint() * psi.gram).norm();
  image_certificates(c, psi, t.tolerances().rank_tol);
  return psi;
}

PsiProjection build_psi(const ProductTriple& pt, const CalculusSpaces& c) {
  if (!pt.two_point)
    throw PreconditionError("build_psi: the second factor must be a two-point space");
  const TwoPointData& td = *pt.two_point;
  const FiniteSpectralTriple& t1 = pt.factor1;
  const FiniteSpectralTriple& t2 = pt.factor2;
  const Tolerances& tol = pt.total.tolerances();
  const Matrix& g = *t1.grading();
  const BalancedTensorSpace& ts = c.tensor_square;
  if (ts.block_ranges().size() != 4)
    throw PreconditionError("build_psi: tensor square must be split into the four E(i,j) blocks");

  PsiProjection psi;
  psi.blocks = ts.block_ranges();
  const Index r1 = pt.E1.dim(), r2 = pt.E2.dim(), r = r1 + r2;

  // alpha_1 = 1 (x) alpha on E1
  std::vector<Vector> sp, im;
  for (const Matrix& w : basis_matrices(one_form_basis(t1)))
    for (const Matrix& b : t2.algebra_basis()) {
      sp.push_back(vectorize(kron(w, b)));
      im.push_back(pt.E1.coordinates(vectorize(kron(w, two_point_alpha(b, td)))));
    }
  InducedMap a1 = induced_map(pt.E1, sp, im, tol.rank_tol);
  psi.alpha1 = a1.matrix;
  psi.cert.alpha_consistency = a1.consistency_residual;

  // gamma a (x) u -> gamma tau(a) (x) u on E2
  const auto taus = twist(t1, psi.cert.twist_residual);
  sp.clear();
  im.clear();
  for (std::size_t i = 0; i < t1.algebra_basis().size(); ++i)
    for (const Matrix& u : basis_matrices(one_form_basis(t2))) {
      sp.push_back(vectorize(kron(g * t1.algebra_basis()[i], u)));
      im.push_back(pt.E2.coordinates(vectorize(kron(g * taus[i], u))));
    }
  InducedMap tw = induced_map(pt.E2, sp, im, tol.rank_tol);
  psi.twist_e2 = tw.matrix;
  psi.cert.twist_consistency = tw.consistency_residual;

  // plain tensor matrices of the beta maps
  auto at = [r](Index p, Index q) { return p * r + q; };
  std::vector<Eigen::Triplet<Complex>> t11, t12, t21;
  for (Index p = 0; p < r1; ++p)
    for (Index q = 0; q < r1; ++q) t11.emplace_back(at(q, p), at(p, q), 1.0);
  for (Index p = 0; p < r1; ++p) {
    const Vector ax = psi.alpha1.col(p);
    for (Index q = 0; q < r2; ++q) {
      const Vector tu = psi.twist_e2.col(q);
      for (Index s = 0; s < r2; ++s)
        for (Index k = 0; k < r1; ++k) {
          const Complex c = tu(s) * ax(k);
          if (c == Complex(0)) continue;
          t12.emplace_back(at(r1 + s, k), at(p, r1 + q), c);
          t21.emplace_back(at(k, r1 + s), at(r1 + q, p), c);
        }
    }
  }
  SparseMatrix b11(r * r, r * r), b12(r * r, r * r), b21(r * r, r * r);
  b11.setFromTriplets(t11.begin(), t11.end());
  b12.setFromTriplets(t12.begin(), t12.end());
  b21.setFromTriplets(t21.begin(), t21.end());
  const Matrix& qb = ts.Q();
  psi.cert.descent11 = descent_residual(ts, b11);
  psi.cert.descent12 = descent_residual(ts, b12);
  psi.cert.descent21 = descent_residual(ts, b21);
  const double dtol = tol.compare(1.0);
  if (psi.cert.descent11 > dtol || psi.cert.descent12 > dtol || psi.cert.descent21 > dtol) {
    const char* which = psi.cert.descent11 > dtol ? "E(1,1)" : (psi.cert.descent12 > dtol ? "E(1,2)" : "E(2,1)");
    const double worst = std::max({psi.cert.descent11, psi.cert.descent12, psi.cert.descent21});
    throw ConstructionError(std::string("build_psi: beta map on ") + which +
                            " does not descend to the balanced tensor product (residual " +
                            std::to_string(worst) + ")");
  }
  psi.beta11 = qb.adjoint() * (b11 * qb);
  psi.beta12 = qb.adjoint() * (b12 * qb);
  psi.beta21 = qb.adjoint() * (b21 * qb);

  const auto [s11a, s11b] = psi.blocks[0];
  const auto [s12a, s12b] = psi.blocks[1];
  const auto [s21a, s21b] = psi.blocks[2];
  const Index n11 = s11b - s11a, n12 = s12b - s12a, n21 = s21b - s21a;
  const Index dq = ts.dim();
  psi.map = Matrix::Zero(dq, dq);
  const Matrix blk11 = psi.beta11.block(s11a, s11a, n11, n11);
  const Matrix blk12 = psi.beta12.block(s21a, s12a, n21, n12);  // E(1,2) -> E(2,1)
  const Matrix blk21 = psi.beta21.block(s12a, s21a, n12, n21);  // E(2,1) -> E(1,2)
  psi.map.block(s11a, s11a, n11, n11) = 0.5 * (Matrix::Identity(n11, n11) + blk11);
  psi.map.block(s12a, s12a, n12, n12) = 0.5 * Matrix::Identity(n12, n12);
  psi.map.block(s21a, s21a, n21, n21) = 0.5 * Matrix::Identity(n21, n21);
  psi.map.block(s12a, s21a, n12, n21) = 0.5 * blk21;
  psi.map.block(s21a, s12a, n21, n12) = 0.5 * blk12;

  psi.cert.beta21_beta12 = (blk21 * blk12 - Matrix::Identity(n12, n12)).norm();
  psi.cert.beta12_beta21 = (blk12 * blk21 - Matrix::Identity(n21, n21)).norm();
  psi.cert.beta11_square = (blk11 * blk11 - Matrix::Identity(n11, n11)).norm();

  psi.gram = tensor_gram(c, AValuedInner(pt, InnerKind::ProductBlocks)).gram;
  const Matrix& gm = psi.gram;
  psi.cert.idempotent = (psi.map * psi.map - psi.map).norm();
  psi.cert.self_adjoint = (gm * psi.map - psi.map.adjoint() * gm).norm();
  psi.cert.beta11_adjoint = (gm * psi.beta11 - psi.beta11.adjoint() * gm).norm();
  psi.cert.beta12_adjoint = (gm * psi.beta12 - psi.beta21.adjoint() * gm).norm();

  double cross = 0.0;
  for (std::size_t i = 0; i < psi.blocks.size(); ++i)
    for (std::size_t j = 0; j < psi.blocks.size(); ++j) {
      if (i == j) continue;
      const auto [a0, a1e] = psi.blocks[i];
      const auto [b0, b1] = psi.blocks[j];
      if (a1e > a0 && b1 > b0)
        cross = std::max(cross, gm.block(a0, b0, a1e - a0, b1 - b0).cwiseAbs().maxCoeff());
    }
  psi.cert.block_orthogonality = cross;
  image_certificates(c, psi, tol.rank_tol);
  return psi;
}

}  // namespace nct
