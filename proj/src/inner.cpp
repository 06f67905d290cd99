#include <algorithm>
#include <random>

#include "nctorsion/torsion.hpp"

namespace nct {

namespace {

double min_hermitian_eigenvalue(const Matrix& g) {
  if (g.rows() == 0) return 0.0;
  const Matrix h = 0.5 * (g + g.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

AValuedInner::AValuedInner(const FiniteSpectralTriple& t, Subspace module)
    : kind_(InnerKind::ConditionalExpectation), module_(std::move(module)), total_(t) {
  tol_ = t.tolerances().compare(1.0);
  validate();
}

AValuedInner::AValuedInner(const ProductTriple& pt, InnerKind kind)
    : kind_(kind), total_(pt.total), product_(pt) {
  tol_ = pt.total.tolerances().compare(1.0);
  switch (kind) {
    case InnerKind::E1Rule: module_ = pt.E1; break;
    case InnerKind::E2Rule: module_ = pt.E2; break;
    case InnerKind::ProductBlocks: module_ = pt.omega; break;
    case InnerKind::ConditionalExpectation: module_ = pt.omega; break;
  }
  f1_omega_ = basis_matrices(one_form_basis(pt.factor1));
  f2_omega_ = basis_matrices(one_form_basis(pt.factor2));
  auto pairings = [](const FiniteSpectralTriple& t, const std::vector<Matrix>& om) {
    const auto m = static_cast<Index>(om.size());
    const Index n = t.hilbert_dim();
    Matrix c(n * n, m * m);
    for (Index p = 0; p < m; ++p)
      for (Index q = 0; q < m; ++q)
        c.col(p * m + q) = vectorize(
            t.conditional_expectation(om[static_cast<std::size_t>(p)] * om[static_cast<std::size_t>(q)].adjoint()));
    return c;
  };
  c1_ = pairings(pt.factor1, f1_omega_);
  c2_ = pairings(pt.factor2, f2_omega_);
  validate();
}

void AValuedInner::validate() {
  const Index d = module_.dim();
  Matrix g(d, d);
  const auto basis = basis_matrices(module_);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      const Matrix v = (*this)(basis[static_cast<std::size_t>(j)], basis[static_cast<std::size_t>(i)]);
      g(i, j) = v.trace();
      if (i == j && min_hermitian_eigenvalue(v) < -tol_)
        throw ConstructionError("A-valued inner product: <x,x> is not positive for basis element " +
                                std::to_string(i));
    }
  }
  margin_ = min_hermitian_eigenvalue(g);
  if (d > 0 && margin_ <= tol_)
    throw ConstructionError("A-valued inner product is degenerate on the module (margin " +
                            std::to_string(margin_) + ")");
}

namespace {

// out(i1 n2 + i2, j1 n2 + j2) = m(i1 n1 + j1, i2 n2 + j2)
Matrix unshuffle(const Matrix& m, Index n1, Index n2) {
  Matrix out(n1 * n2, n1 * n2);
  for (Index i1 = 0; i1 < n1; ++i1)
    for (Index j1 = 0; j1 < n1; ++j1)
      for (Index i2 = 0; i2 < n2; ++i2)
        for (Index j2 = 0; j2 < n2; ++j2) out(i1 * n2 + i2, j1 * n2 + j2) = m(i1 * n1 + j1, i2 * n2 + j2);
  return out;
}

// rows p * m + q: vec(xs_p ys_q^*)
Matrix pair_products(const std::vector<Matrix>& xs, const std::vector<Matrix>& ys) {
  const auto m = static_cast<Index>(xs.size());
  const Index n = xs.empty() ? 0 : xs.front().rows();
  Matrix out(m * m, n * n);
  for (Index p = 0; p < m; ++p)
    for (Index q = 0; q < m; ++q)
      out.row(p * m + q) = vectorize(Matrix(xs[static_cast<std::size_t>(p)] * ys[static_cast<std::size_t>(q)].adjoint())).transpose();
  return out;
}

}  // namespace

// x = sum_p omega_p (x) X_p with X_p the partial pairing against omega_p.
Matrix AValuedInner::e1_rule(const Matrix& x, const Matrix& y) const {
  const ProductTriple& pt = *product_;
  const Index n1 = pt.factor1.hilbert_dim(), n2 = pt.factor2.hilbert_dim();
  auto partial = [&](const Matrix& z, const Matrix& w) {
    Matrix out = Matrix::Zero(n2, n2);
    for (Index i = 0; i < n1; ++i)
      for (Index j = 0; j < n1; ++j)
        if (w(i, j) != Complex(0)) out += std::conj(w(i, j)) * z.block(i * n2, j * n2, n2, n2);
    return out;
  };
  std::vector<Matrix> xs, ys;
  for (const Matrix& w : f1_omega_) {
    xs.push_back(partial(x, w));
    ys.push_back(partial(y, w));
  }
  if (xs.empty()) return Matrix::Zero(n1 * n2, n1 * n2);
  return unshuffle(c1_ * pair_products(xs, ys), n1, n2);
}

// x = sum_q F_q (x) u_q with F_q the partial pairing against u_q.
Matrix AValuedInner::e2_rule(const Matrix& x, const Matrix& y) const {
  const ProductTriple& pt = *product_;
  const Index n1 = pt.factor1.hilbert_dim(), n2 = pt.factor2.hilbert_dim();
  auto partial = [&](const Matrix& z, const Matrix& u) {
    Matrix out(n1, n1);
    for (Index i = 0; i < n1; ++i)
      for (Index j = 0; j < n1; ++j) out(i, j) = (u.conjugate().cwiseProduct(z.block(i * n2, j * n2, n2, n2))).sum();
    return out;
  };
  std::vector<Matrix> xs, ys;
  for (const Matrix& u : f2_omega_) {
    xs.push_back(partial(x, u));
    ys.push_back(partial(y, u));
  }
  if (xs.empty()) return Matrix::Zero(n1 * n2, n1 * n2);
  return unshuffle(pair_products(xs, ys).transpose() * c2_.transpose(), n1, n2);
}

Matrix AValuedInner::operator()(const Matrix& x, const Matrix& y) const {
  switch (kind_) {
    case InnerKind::ConditionalExpectation:
      return total_.conditional_expectation(x * y.adjoint());
    case InnerKind::E1Rule:
      return e1_rule(x, y);
    case InnerKind::E2Rule:
      return e2_rule(x, y);
    case InnerKind::ProductBlocks: {
      const ProductTriple& pt = *product_;
      const Index n = pt.total.hilbert_dim();
      auto part = [n](const Subspace& s, const Matrix& z) {
        return unvectorize(s.project(vectorize(z)), n, n);
      };
      return e1_rule(part(pt.E1, x), part(pt.E1, y)) + e2_rule(part(pt.E2, x), part(pt.E2, y));
    }
  }
  return {};
}

AValuedInner a_valued_inner(const FiniteSpectralTriple& t, const Subspace& module) {
  return AValuedInner(t, module);
}

AValuedInner a_valued_inner(const ProductTriple& pt, InnerKind kind) {
  return AValuedInner(pt, kind);
}

TensorGram tensor_gram(const CalculusSpaces& c, const AValuedInner& inner) {
  const BalancedTensorSpace& ts = c.tensor_square;
  const auto& om = ts.left_basis();
  const auto r = static_cast<Index>(om.size());
  TensorGram out;
  if (ts.simple()) {
    // quotient column k is X_i (x) Y_j; the value on (k', k) is Tr(X_i <Y_j, Y_j'> X_i'^*)
    const Matrix& u = ts.left_eig();
    const Matrix& v = ts.right_eig();
    const Index n = c.hilbert_dim;
    auto combine = [&](const Matrix& coef, Index col) {
      Matrix m = Matrix::Zero(n, n);
      for (Index p = 0; p < r; ++p)
        if (coef(p, col) != Complex(0)) m += coef(p, col) * om[static_cast<std::size_t>(p)];
      return m;
    };
    std::vector<Matrix> xs, ys;
    for (Index i = 0; i < r; ++i) {
      xs.push_back(combine(u, i));
      ys.push_back(combine(v, i));
    }
    const double small = 1e-300;
    std::vector<std::vector<Matrix>> yy(static_cast<std::size_t>(r), std::vector<Matrix>(static_cast<std::size_t>(r)));
    for (Index j = 0; j < r; ++j)
      for (Index jp = 0; jp < r; ++jp) {
        Matrix m = inner(ys[static_cast<std::size_t>(j)], ys[static_cast<std::size_t>(jp)]);
        if (m.size() > 0 && m.cwiseAbs().maxCoeff() > small) yy[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)] = std::move(m);
      }
    const auto& pairs = ts.pairs();
    const Index dq = ts.dim();
    out.gram = Matrix::Zero(dq, dq);
    for (Index k = 0; k < dq; ++k) {
      const auto [i, j] = pairs[static_cast<std::size_t>(k)];
      for (Index kp = 0; kp < dq; ++kp) {
        const auto [ip, jp] = pairs[static_cast<std::size_t>(kp)];
        const Matrix& a = yy[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)];
        if (a.size() == 0) continue;
        out.gram(kp, k) = (xs[static_cast<std::size_t>(i)] * a).cwiseProduct(xs[static_cast<std::size_t>(ip)].conjugate()).sum();
      }
    }
    // the form against seeded relations, tested on seeded simple tensors
    std::mt19937_64 rng(0x7261646bULL);
    std::normal_distribution<double> g;
    auto random_element = [&]() {
      Vector cf(r);
      for (Index p = 0; p < r; ++p) cf(p) = Complex(g(rng), g(rng));
      cf.normalize();
      Matrix m = Matrix::Zero(n, n);
      for (Index p = 0; p < r; ++p) m += cf(p) * om[static_cast<std::size_t>(p)];
      return m;
    };
    out.radical_residual = 0.0;
    const Matrix& rel = ts.relation_samples();
    for (Index s = 0; s < rel.cols(); ++s) {
      const Matrix rm = unvectorize(rel.col(s), r, r);
      for (int t = 0; t < 2; ++t) {
        const Matrix x = random_element(), y = random_element();
        Matrix acc = Matrix::Zero(n, n);
        for (Index q = 0; q < r; ++q) {
          const Matrix iq = inner(om[static_cast<std::size_t>(q)], y);
          Matrix left = Matrix::Zero(n, n);
          for (Index p = 0; p < r; ++p)
            if (rm(p, q) != Complex(0)) left += rm(p, q) * om[static_cast<std::size_t>(p)];
          acc += left * iq;
        }
        out.radical_residual = std::max(out.radical_residual, std::abs((acc * x.adjoint()).trace()));
      }
    }
    out.min_eigenvalue = min_hermitian_eigenvalue(out.gram);
    return out;
  }

  std::vector<std::vector<Matrix>> ai(static_cast<std::size_t>(r));
  for (std::size_t q = 0; q < om.size(); ++q)
    for (std::size_t s = 0; s < om.size(); ++s) ai[q].push_back(inner(om[q], om[s]));

  Matrix g(r * r, r * r);
  for (Index p = 0; p < r; ++p)
    for (Index q = 0; q < r; ++q) {
      for (Index a = 0; a < r; ++a) {
        const Matrix left = om[static_cast<std::size_t>(p)];
        for (Index s = 0; s < r; ++s)
          g(a * r + s, p * r + q) = (left * ai[static_cast<std::size_t>(q)][static_cast<std::size_t>(s)] *
                                     om[static_cast<std::size_t>(a)].adjoint())
                                        .trace();
      }
    }
  out.gram = ts.Q().adjoint() * g * ts.Q();
  const Matrix& rel = ts.relation_samples();
  out.radical_residual = rel.cols() ? (g * rel).norm() : 0.0;
  out.min_eigenvalue = min_hermitian_eigenvalue(out.gram);
  return out;
}

}  // namespace nct
