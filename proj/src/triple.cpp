#include "nctorsion/triple.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace nct {

namespace {

double opnorm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

std::string idx(std::size_t i) { return std::to_string(i); }

bool commutative(const std::vector<Matrix>& basis, const Tolerances& tol) {
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i + 1; j < basis.size(); ++j)
      if (commutator(basis[i], basis[j]).norm() > tol.compare(basis[i].norm() * basis[j].norm()))
        return false;
  return true;
}

// Spectral projections of h = sum c_i (a_i + a_i^*) / 2 for seeded random c_i,
// retried until they are dim A many and separated.
std::optional<AlgebraCharacters> find_characters(const std::vector<Matrix>& basis, const Subspace& span,
                                                 const Tolerances& tol) {
  const Index n = basis.front().rows();
  std::mt19937_64 rng(0x6368617273ULL);
  std::uniform_real_distribution<double> coef(1.0, 2.0);
  for (int attempt = 0; attempt < 8; ++attempt) {
    AlgebraCharacters ch;
    ch.h = Matrix::Zero(n, n);
    for (const Matrix& a : basis) ch.h += coef(rng) * 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(ch.h);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double scale = 1.0 + ev.cwiseAbs().maxCoeff();
    const double merge = 1e-9 * scale;
    std::vector<std::pair<Index, Index>> groups;
    for (Index i = 0; i < n; ++i) {
      if (groups.empty() || ev(i) - ev(groups.back().second - 1) > merge)
        groups.emplace_back(i, i + 1);
      else
        groups.back().second = i + 1;
    }
    if (static_cast<Index>(groups.size()) != static_cast<Index>(basis.size())) continue;
    ch.separation = scale;
    for (std::size_t g = 1; g < groups.size(); ++g)
      ch.separation = std::min(ch.separation, ev(groups[g].first) - ev(groups[g - 1].second - 1));
    if (ch.separation < 1e-6 * scale) continue;
    bool inside = true;
    for (const auto& [b, e] : groups) {
      const Matrix v = es.eigenvectors().middleCols(b, e - b);
      Matrix p = v * v.adjoint();
      if (span.residual(vectorize(p)) > tol.compare(1.0)) inside = false;
      ch.values.push_back(ev.segment(b, e - b).mean());
      ch.idempotents.push_back(std::move(p));
    }
    if (inside) return ch;
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------- validation

FiniteSpectralTriple::FiniteSpectralTriple(std::string label, std::vector<Matrix> algebra_basis,
                                           Matrix dirac, std::optional<Matrix> grading,
                                           Tolerances tol)
    : label_(std::move(label)),
      algebra_basis_(std::move(algebra_basis)),
      dirac_(std::move(dirac)),
      grading_(std::move(grading)),
      tol_(tol) {
  const Index n = dirac_.rows();
  if (dirac_.cols() != n) throw ConstructionError(label_ + ": Dirac operator is not square");
  if (n == 0) throw ConstructionError(label_ + ": empty Hilbert space");
  if (algebra_basis_.empty()) throw ConstructionError(label_ + ": empty algebra basis");
  for (std::size_t i = 0; i < algebra_basis_.size(); ++i)
    if (algebra_basis_[i].rows() != n || algebra_basis_[i].cols() != n)
      throw ConstructionError(label_ + ": algebra element " + idx(i) + " has wrong shape");

  dirac_norm_ = opnorm(dirac_);
  const double dtol = tol_.compare(dirac_norm_);
  if ((dirac_ - dirac_.adjoint()).norm() > dtol)
    throw ConstructionError(label_ + ": Dirac operator is not self-adjoint");

  const Matrix id = Matrix::Identity(n, n);
  if ((algebra_basis_[0] - id).norm() > tol_.compare(1.0))
    throw ConstructionError(label_ + ": first algebra basis element must be the identity");

  algebra_span_ = span_matrices(algebra_basis_, tol_.rank_tol, 1.0);
  if (algebra_span_.dim() != algebra_dim())
    throw ConstructionError(label_ + ": algebra basis is linearly dependent");

  for (std::size_t i = 0; i < algebra_basis_.size(); ++i) {
    const Matrix& a = algebra_basis_[i];
    const Matrix as = a.adjoint();
    if (algebra_span_.residual(vectorize(as)) > tol_.compare(as.norm()))
      throw ConstructionError(label_ + ": adjoint of algebra element " + idx(i) +
                              " leaves the algebra");
    for (std::size_t j = 0; j < algebra_basis_.size(); ++j) {
      const Matrix p = a * algebra_basis_[j];
      if (algebra_span_.residual(vectorize(p)) > tol_.compare(p.norm()))
        throw ConstructionError(label_ + ": product of algebra elements " + idx(i) + "," + idx(j) +
                                " leaves the algebra");
    }
  }

  if (grading_) {
    const Matrix& g = *grading_;
    if (g.rows() != n || g.cols() != n) throw ConstructionError(label_ + ": grading has wrong shape");
    const double gtol = tol_.compare(1.0);
    if ((g - g.adjoint()).norm() > gtol)
      throw ConstructionError(label_ + ": grading is not self-adjoint");
    if ((g * g - id).norm() > gtol) throw ConstructionError(label_ + ": grading does not square to 1");
    for (std::size_t i = 0; i < algebra_basis_.size(); ++i)
      if (commutator(g, algebra_basis_[i]).norm() > tol_.compare(algebra_basis_[i].norm()))
        throw ConstructionError(label_ + ": grading does not commute with algebra element " + idx(i));
    if ((g * dirac_ + dirac_ * g).norm() > dtol)
      throw ConstructionError(label_ + ": grading does not anticommute with D");
  }

  commutators_.reserve(algebra_basis_.size());
  degenerate_ = true;
  for (const Matrix& a : algebra_basis_) {
    commutators_.push_back(commutator(dirac_, a));
    if (commutators_.back().norm() > tol_.rank_tol * (1.0 + dirac_norm_))
      degenerate_ = false;
  }
  if (commutative(algebra_basis_, tol_)) characters_ = find_characters(algebra_basis_, algebra_span_, tol_);
}

Matrix FiniteSpectralTriple::conditional_expectation(const Matrix& x) const {
  return unvectorize(algebra_span_.project(vectorize(x)), x.rows(), x.cols());
}

// ---------------------------------------------------------------- builders

std::pair<FiniteSpectralTriple, TwoPointData> build_two_point(const Matrix& phi, Tolerances tol) {
  const Index l = phi.rows(), k = phi.cols();
  if (l == 0 || k == 0) throw ConstructionError("two_point: phi must have positive size");
  const Index n = l + k;
  TwoPointData td;
  td.phi = phi;
  td.D_phi = Matrix::Zero(n, n);
  td.D_phi.topRightCorner(l, k) = phi;
  td.D_phi.bottomLeftCorner(k, l) = phi.adjoint();
  td.e_plus = Matrix::Zero(n, n);
  td.e_plus.topLeftCorner(l, l) = Matrix::Identity(l, l);
  td.eta = Matrix::Zero(n, n);
  td.eta.topRightCorner(l, k) = -phi;
  td.eta.bottomLeftCorner(k, l) = phi.adjoint();
  FiniteSpectralTriple t("two_point", {Matrix::Identity(n, n), td.e_plus}, td.D_phi, std::nullopt,
                         tol);
  return {std::move(t), std::move(td)};
}

FiniteSpectralTriple build_graded_two_point(Complex z, Tolerances tol) {
  Matrix d(2, 2);
  d << 0, z, std::conj(z), 0;
  Matrix g(2, 2);
  g << 1, 0, 0, -1;
  Matrix p(2, 2);
  p << 1, 0, 0, 0;
  return FiniteSpectralTriple("graded_two_point", {Matrix::Identity(2, 2), p}, d, g, tol);
}

namespace {

// Euclidean gamma matrices for d = 2m from tensor products of Pauli matrices,
// and the chirality element (-i)^m gamma_1 ... gamma_d.
std::pair<std::vector<Matrix>, Matrix> clifford_generators(Index d) {
  const Index m = d / 2;
  Matrix x(2, 2), y(2, 2), z(2, 2), one = Matrix::Identity(2, 2);
  x << 0, 1, 1, 0;
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  z << 1, 0, 0, -1;
  std::vector<Matrix> gammas;
  for (Index k = 0; k < m; ++k) {
    for (const Matrix* p : {&x, &y}) {
      Matrix g = Matrix::Identity(1, 1);
      for (Index j = 0; j < m; ++j) g = kron(g, j < k ? z : (j == k ? *p : one));
      gammas.push_back(g);
    }
  }
  const Index s = Index{1} << m;
  Matrix chi = Matrix::Identity(s, s);
  for (const Matrix& g : gammas) chi = chi * g;
  Complex phase = 1.0;
  for (Index k = 0; k < m; ++k) phase *= Complex(0, -1);
  return {gammas, phase * chi};
}

}  // namespace

FiniteSpectralTriple build_clifford_torus(Index n, Index d, Tolerances tol) {
  if (d <= 0 || d % 2 != 0)
    throw PreconditionError("clifford_torus: dimension d must be even and positive (no chirality for odd d)");
  if (n < 2) throw PreconditionError("clifford_torus: N must be at least 2");
  Index points = 1;
  for (Index i = 0; i < d; ++i) points *= n;

  auto [gammas, chi] = clifford_generators(d);
  const Index s = chi.rows();
  const Index dim = s * points;

  // lexicographic point order, first coordinate slowest
  auto index_of = [&](const std::vector<Index>& x) {
    Index r = 0;
    for (Index c : x) r = r * n + c;
    return r;
  };
  auto point_of = [&](Index r) {
    std::vector<Index> x(static_cast<std::size_t>(d));
    for (Index c = d - 1; c >= 0; --c) {
      x[static_cast<std::size_t>(c)] = r % n;
      r /= n;
    }
    return x;
  };

  Matrix dirac = Matrix::Zero(dim, dim);
  for (Index mu = 0; mu < d; ++mu) {
    Matrix delta = Matrix::Zero(points, points);
    for (Index r = 0; r < points; ++r) {
      auto fwd = point_of(r), bwd = point_of(r);
      auto& cf = fwd[static_cast<std::size_t>(mu)];
      auto& cb = bwd[static_cast<std::size_t>(mu)];
      cf = (cf + 1) % n;
      cb = (cb + n - 1) % n;
      delta(r, index_of(fwd)) += 0.5;
      delta(r, index_of(bwd)) -= 0.5;
    }
    dirac += kron(gammas[static_cast<std::size_t>(mu)], Complex(0, -1) * delta);
  }

  // identity, then characteristic functions of all points but the last
  std::vector<Matrix> basis{Matrix::Identity(dim, dim)};
  for (Index r = 0; r + 1 < points; ++r) {
    Matrix chr = Matrix::Zero(points, points);
    chr(r, r) = 1.0;
    basis.push_back(kron(Matrix::Identity(s, s), chr));
  }
  Matrix grading = kron(chi, Matrix::Identity(points, points));
  return FiniteSpectralTriple("clifford_torus", std::move(basis), std::move(dirac),
                              std::move(grading), tol);
}

FiniteSpectralTriple build_user_triple(std::string label, std::vector<Matrix> algebra_basis,
                                       Matrix dirac, std::optional<Matrix> grading,
                                       Tolerances tol) {
  return FiniteSpectralTriple(std::move(label), std::move(algebra_basis), std::move(dirac),
                              std::move(grading), tol);
}

// ---------------------------------------------------------------- one-forms

Subspace one_form_basis(const FiniteSpectralTriple& t) {
  std::vector<Vector> vs;
  for (const Matrix& a : t.algebra_basis())
    for (const Matrix& da : t.commutators()) vs.push_back(vectorize(a * da));
  return span(vs, t.hilbert_dim() * t.hilbert_dim(), t.tolerances().rank_tol, t.dirac_norm());
}

std::vector<Matrix> basis_matrices(const Subspace& s) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(s.dim()));
  for (Index i = 0; i < s.dim(); ++i) out.push_back(s.basis_matrix(i));
  return out;
}

Vector coordinates_in(const Subspace& s, const Matrix& x, double tol, const std::string& what) {
  const Vector v = vectorize(x);
  const double res = s.residual(v);
  if (res > tol)
    throw PreconditionError(what + " lies outside the subspace (residual " + std::to_string(res) +
                            ")");
  return s.coordinates(v);
}

double check_spectrally_closed(const FiniteSpectralTriple& t, int max_degree) {
  if (t.degenerate()) return 0.0;
  std::vector<Matrix> gens = t.algebra_basis();
  for (const Matrix& w : basis_matrices(one_form_basis(t))) gens.push_back(w);
  double worst = 0.0;
  std::function<void(const Matrix&, int)> walk = [&](const Matrix& q, int depth) {
    for (const Matrix& g : gens) {
      const Matrix next = q * g;
      worst = std::max(worst, std::abs((next * t.dirac()).trace()));
      if (depth + 1 < max_degree) walk(next, depth + 1);
    }
  };
  if (max_degree > 0) walk(Matrix::Identity(t.hilbert_dim(), t.hilbert_dim()), 0);
  return worst;
}

// ---------------------------------------------------------------- products

ProductTriple build_product(const FiniteSpectralTriple& t1, const FiniteSpectralTriple& t2,
                            std::optional<TwoPointData> two_point) {
  if (!t1.has_grading())
    throw PreconditionError("product: first factor must carry a grading");
  if (t1.degenerate()) throw ConstructionError("product: first factor is degenerate (no one-forms)");
  if (t2.degenerate())
    throw ConstructionError("product: second factor is degenerate (no one-forms), E2 would vanish");

  const Tolerances tol = t1.tolerances();
  const Index n1 = t1.hilbert_dim(), n2 = t2.hilbert_dim();
  const Matrix id1 = Matrix::Identity(n1, n1), id2 = Matrix::Identity(n2, n2);
  const Matrix& g = *t1.grading();

  ProductTriple pt;
  pt.factor1 = t1;
  pt.factor2 = t2;
  pt.two_point = std::move(two_point);
  std::vector<Matrix> alg;
  for (const Matrix& a : t1.algebra_basis())
    for (const Matrix& b : t2.algebra_basis()) alg.push_back(kron(a, b));
  pt.D1_part = kron(t1.dirac(), id2);
  pt.D2_part = kron(g, t2.dirac());
  pt.total = FiniteSpectralTriple("product(" + t1.label() + "," + t2.label() + ")", std::move(alg),
                                  pt.D1_part + pt.D2_part, std::nullopt, tol);

  const Matrix& d = pt.total.dirac();
  const Matrix d1sq = t1.dirac() * t1.dirac(), d2sq = t2.dirac() * t2.dirac();
  pt.dirac_square_residual = (d * d - kron(d1sq, id2) - kron(id1, d2sq)).norm();
  if (pt.dirac_square_residual > tol.compare(d.squaredNorm()))
    throw ConstructionError("product: D^2 does not split as D1^2 (x) 1 + 1 (x) D2^2");

  std::vector<Vector> e1, e2;
  for (const Matrix& w : basis_matrices(one_form_basis(t1)))
    for (const Matrix& b : t2.algebra_basis()) e1.push_back(vectorize(kron(w, b)));
  for (const Matrix& a : t1.algebra_basis())
    for (const Matrix& u : basis_matrices(one_form_basis(t2))) e2.push_back(vectorize(kron(g * a, u)));
  const Index nn = pt.total.hilbert_dim() * pt.total.hilbert_dim();
  pt.E1 = span(e1, nn, tol.rank_tol, 1.0);
  pt.E2 = span(e2, nn, tol.rank_tol, 1.0);

  Matrix both(nn, pt.E1.dim() + pt.E2.dim());
  both << pt.E1.basis(), pt.E2.basis();
  pt.block_overlap = (pt.E1.dim() && pt.E2.dim()) ? (pt.E1.basis().adjoint() * pt.E2.basis()).cwiseAbs().maxCoeff() : 0.0;
  if (numerical_rank(both, tol.rank_tol, 1.0) < both.cols())
    throw ConstructionError("product: E1 and E2 intersect (degenerate second factor)");
  if (pt.block_overlap > tol.compare(1.0))
    throw ConstructionError("product: E1 is not orthogonal to E2 (overlap " +
                            std::to_string(pt.block_overlap) + ")");
  pt.omega = Subspace(nn, both, tol.rank_tol);

  const Subspace total_omega = one_form_basis(pt.total);
  const auto fwd = contains(pt.omega, total_omega, tol.compare(1.0));
  const auto bwd = contains(total_omega, pt.omega, tol.compare(1.0));
  if (!fwd.contained || !bwd.contained || total_omega.dim() != pt.omega.dim())
    throw ConstructionError("product: E1 + E2 does not reproduce the one-forms of the product");
  return pt;
}

}  // namespace nct
