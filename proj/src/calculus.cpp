#include "nctorsion/calculus.hpp"

#include <algorithm>
#include <optional>
#include <random>

namespace nct {

UniversalForms universal_forms(const FiniteSpectralTriple& t) {
  const auto& a = t.algebra_basis();
  const auto& da = t.commutators();
  const Index k = t.algebra_dim();
  const Index nn = t.hilbert_dim() * t.hilbert_dim();
  UniversalForms u;
  u.mult_map.resize(nn, k * k);
  u.pi_map.resize(nn, k * k);
  u.delta_map.resize(nn, k * k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      const Index p = i * k + j;
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      u.pair_basis.emplace_back(i, j);
      u.mult_map.col(p) = vectorize(a[ui] * a[uj]);
      u.pi_map.col(p) = vectorize(a[ui] * da[uj]);
      u.delta_map.col(p) = vectorize(da[ui] * da[uj]);
    }
  }
  u.one_form_space = nullspace(u.mult_map, t.tolerances().rank_tol);
  return u;
}

// ---------------------------------------------------------------- balanced tensor

namespace {

void check_bimodule(const Subspace& m, const FiniteSpectralTriple& t, const std::string& which) {
  const Tolerances& tol = t.tolerances();
  for (Index p = 0; p < m.dim(); ++p) {
    const Matrix x = m.basis_matrix(p);
    for (std::size_t i = 0; i < t.algebra_basis().size(); ++i) {
      const Matrix& a = t.algebra_basis()[i];
      for (const Matrix& prod : {Matrix(a * x), Matrix(x * a)}) {
        const double res = m.residual(vectorize(prod));
        if (res > tol.compare(prod.norm()))
          throw PreconditionError(which + " module is not an A-bimodule: basis element " +
                                  std::to_string(p) + " times algebra element " +
                                  std::to_string(i) + " leaves it (residual " +
                                  std::to_string(res) + ")");
      }
    }
  }
}

}  // namespace

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Eigenbasis of a Hermitian action of h that is block diagonal along `blocks`,
// each vector labelled by the character value it carries. Vectors are sorted by
// label inside each block.
std::optional<std::pair<Matrix, std::vector<Index>>> character_basis(const Matrix& act,
                                                                     const BalancedTensorSpace::Blocks& blocks,
                                                                     const AlgebraCharacters& ch) {
  const Index r = act.rows();
  const double scale = 1.0 + max_abs(act);
  Matrix u = Matrix::Zero(r, r);
  std::vector<Index> labels(static_cast<std::size_t>(r), 0);
  for (const auto& [b, e] : blocks) {
    const Index m = e - b;
    if (m == 0) continue;
    if (m < r) {
      Matrix off = act.middleCols(b, m);
      off.middleRows(b, m).setZero();
      if (max_abs(off) > 1e-9 * scale) return std::nullopt;
    }
    const Matrix sub = act.block(b, b, m, m);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sub + sub.adjoint()));
    std::vector<std::pair<Index, Index>> order;  // (label, eigen index)
    for (Index i = 0; i < m; ++i) {
      const double x = es.eigenvalues()(i);
      const auto it = std::min_element(ch.values.begin(), ch.values.end(),
                                       [x](double p, double q) { return std::abs(p - x) < std::abs(q - x); });
      if (std::abs(*it - x) > 0.25 * ch.separation) return std::nullopt;
      order.emplace_back(static_cast<Index>(it - ch.values.begin()), i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& p, const auto& q) { return p.first < q.first; });
    for (Index k = 0; k < m; ++k) {
      u.block(b, b + k, m, 1) = es.eigenvectors().col(order[static_cast<std::size_t>(k)].second);
      labels[static_cast<std::size_t>(b + k)] = order[static_cast<std::size_t>(k)].first;
    }
  }
  return std::make_pair(std::move(u), std::move(labels));
}

// max over idempotents e_x of ||act(e_x) U - U diag(label == x)||.
template <typename Action>
double joint_eigen_residual(const Matrix& u, const std::vector<Index>& labels, const AlgebraCharacters& ch,
                            Action act) {
  double worst = 0.0;
  for (std::size_t x = 0; x < ch.idempotents.size(); ++x) {
    Matrix d = act(ch.idempotents[x]) * u;
    for (Index i = 0; i < u.cols(); ++i)
      if (labels[static_cast<std::size_t>(i)] == static_cast<Index>(x)) d.col(i) -= u.col(i);
    worst = std::max(worst, max_abs(d));
  }
  return worst;
}

}  // namespace

BalancedTensorSpace::BalancedTensorSpace(const Subspace& left_module, const Subspace& right_module,
                                         const FiniteSpectralTriple& t, const Blocks& left_blocks,
                                         const Blocks& right_blocks, bool allow_simple)
    : left_(left_module), right_(right_module), n_(t.hilbert_dim()) {
  tol_ = t.tolerances().compare(1.0);
  const Index nn = n_ * n_;
  if (left_.ambient_dim() != nn || right_.ambient_dim() != nn)
    throw DimensionError("balanced_tensor: modules do not live in operators on H");
  check_bimodule(left_, t, "left");
  check_bimodule(right_, t, "right");
  left_mats_ = basis_matrices(left_);
  right_mats_ = basis_matrices(right_);
  const Blocks lb = left_blocks.empty() ? Blocks{{0, left_.dim()}} : left_blocks;
  const Blocks rb = right_blocks.empty() ? Blocks{{0, right_.dim()}} : right_blocks;
  if (!allow_simple || !build_simple(t, lb, rb)) build_dense(t, lb, rb);
}

Matrix BalancedTensorSpace::left_module_action(const Matrix& a) const {
  const Index r1 = left_.dim();
  Matrix la(r1, r1);
  for (Index p = 0; p < r1; ++p)
    la.col(p) = coordinates_in(left_, a * left_mats_[static_cast<std::size_t>(p)], tol_ * (1.0 + a.norm()),
                               "left action");
  return la;
}

Matrix BalancedTensorSpace::right_module_action(const Matrix& a) const {
  const Index r1 = left_.dim();
  Matrix ra(r1, r1);
  for (Index p = 0; p < r1; ++p)
    ra.col(p) = coordinates_in(left_, left_mats_[static_cast<std::size_t>(p)] * a, tol_ * (1.0 + a.norm()),
                               "right action");
  return ra;
}

bool BalancedTensorSpace::build_simple(const FiniteSpectralTriple& t, const Blocks& lb, const Blocks& rb) {
  if (!t.characters()) return false;
  const AlgebraCharacters& ch = *t.characters();
  const Index r1 = left_.dim(), r2 = right_.dim();
  auto right_on_left = [&](const Matrix& a) { return right_module_action(a); };
  auto left_on_right = [&](const Matrix& a) {
    Matrix la(r2, r2);
    for (Index q = 0; q < r2; ++q)
      la.col(q) = coordinates_in(right_, a * right_mats_[static_cast<std::size_t>(q)], tol_ * (1.0 + a.norm()),
                                 "left action");
    return la;
  };
  const auto lu = character_basis(right_on_left(ch.h), lb, ch);
  const auto rv = character_basis(left_on_right(ch.h), rb, ch);
  if (!lu || !rv) return false;
  const double etol = 1e-8;
  if (joint_eigen_residual(lu->first, lu->second, ch, right_on_left) > etol ||
      joint_eigen_residual(rv->first, rv->second, ch, left_on_right) > etol)
    return false;

  u_ = lu->first;
  v_ = rv->first;
  by_right_.assign(static_cast<std::size_t>(r2), {});
  for (const auto& [l0, l1] : lb)
    for (const auto& [q0, q1] : rb) {
      const auto start = static_cast<Index>(pairs_.size());
      for (Index i = l0; i < l1; ++i)
        for (Index j = q0; j < q1; ++j)
          if (lu->second[static_cast<std::size_t>(i)] == rv->second[static_cast<std::size_t>(j)]) {
            by_right_[static_cast<std::size_t>(j)].push_back(static_cast<Index>(pairs_.size()));
            pairs_.emplace_back(i, j);
          }
      block_ranges_.emplace_back(start, static_cast<Index>(pairs_.size()));
    }
  const auto dq = static_cast<Index>(pairs_.size());
  q_.resize(r1 * r2, dq);
  std::vector<Matrix> xs(static_cast<std::size_t>(r1), Matrix::Zero(n_, n_));
  std::vector<Matrix> ys(static_cast<std::size_t>(r2), Matrix::Zero(n_, n_));
  for (Index i = 0; i < r1; ++i)
    for (Index p = 0; p < r1; ++p) xs[static_cast<std::size_t>(i)] += u_(p, i) * left_mats_[static_cast<std::size_t>(p)];
  for (Index j = 0; j < r2; ++j)
    for (Index q = 0; q < r2; ++q) ys[static_cast<std::size_t>(j)] += v_(q, j) * right_mats_[static_cast<std::size_t>(q)];
  mult_map_.resize(n_ * n_, dq);
  for (Index k = 0; k < dq; ++k) {
    const auto [i, j] = pairs_[static_cast<std::size_t>(k)];
    q_.col(k) = vectorize(Matrix(u_.col(i) * v_.col(j).transpose()));
    mult_map_.col(k) = vectorize(Matrix(xs[static_cast<std::size_t>(i)] * ys[static_cast<std::size_t>(j)]));
  }

  // seeded random relations sum_a (rho_a (x) 1 - 1 (x) lambda_a) z_a
  std::mt19937_64 rng(0x72656c73ULL);
  std::normal_distribution<double> g;
  const int samples = 4;
  relation_samples_ = Matrix::Zero(r1 * r2, samples);
  std::vector<Matrix> ra, la;
  for (const Matrix& a : t.algebra_basis()) {
    ra.push_back(right_on_left(a));
    la.push_back(left_on_right(a));
  }
  for (int s = 0; s < samples; ++s) {
    Matrix rel = Matrix::Zero(r1, r2);
    for (std::size_t k = 0; k < ra.size(); ++k) {
      Matrix z(r1, r2);
      for (Index p = 0; p < r1; ++p)
        for (Index q = 0; q < r2; ++q) z(p, q) = Complex(g(rng), g(rng));
      rel += ra[k] * z - z * la[k].transpose();
    }
    relation_samples_.col(s) = vectorize(rel);
    Matrix m = Matrix::Zero(n_, n_);
    for (Index p = 0; p < r1; ++p) {
      Matrix right = Matrix::Zero(n_, n_);
      for (Index q = 0; q < r2; ++q) right += rel(p, q) * right_mats_[static_cast<std::size_t>(q)];
      m += left_mats_[static_cast<std::size_t>(p)] * right;
    }
    balance_residual_ = std::max(balance_residual_, m.norm() / (1.0 + rel.norm()));
  }
  simple_ = true;
  return true;
}

void BalancedTensorSpace::build_dense(const FiniteSpectralTriple& t, const Blocks& lb, const Blocks& rb) {
  const Tolerances& tol = t.tolerances();
  const Index r1 = left_.dim(), r2 = right_.dim();
  const Index pd = r1 * r2;
  std::vector<Vector> rel;
  for (Index p = 0; p < r1; ++p) {
    for (const Matrix& a : t.algebra_basis()) {
      const Vector xa = left_.coordinates(vectorize(left_mats_[static_cast<std::size_t>(p)] * a));
      for (Index q = 0; q < r2; ++q) {
        const Vector ay = right_.coordinates(vectorize(a * right_mats_[static_cast<std::size_t>(q)]));
        Vector v = Vector::Zero(pd);
        for (Index s = 0; s < r1; ++s) v(s * r2 + q) += xa(s);
        for (Index s = 0; s < r2; ++s) v(p * r2 + s) -= ay(s);
        rel.push_back(std::move(v));
      }
    }
  }
  const Subspace relations = span(rel, pd, tol.rank_tol, 1.0);
  relation_samples_ = relations.basis();

  std::vector<std::vector<Index>> blocks;
  for (const auto& [l0, l1] : lb) {
    for (const auto& [q0, q1] : rb) {
      std::vector<Index> b;
      for (Index p = l0; p < l1; ++p)
        for (Index q = q0; q < q1; ++q) b.push_back(p * r2 + q);
      blocks.push_back(std::move(b));
    }
  }
  const QuotientSpace quotient(Subspace::full(pd, tol.rank_tol), relations, blocks);
  q_ = quotient.quotient_basis();
  block_ranges_ = quotient.block_ranges();

  Matrix plain_mult(n_ * n_, pd);
  for (Index p = 0; p < r1; ++p)
    for (Index q = 0; q < r2; ++q)
      plain_mult.col(p * r2 + q) =
          vectorize(left_mats_[static_cast<std::size_t>(p)] * right_mats_[static_cast<std::size_t>(q)]);
  mult_map_ = plain_mult * q_;
  for (Index i = 0; i < relations.dim(); ++i)
    balance_residual_ = std::max(balance_residual_, (plain_mult * relations.basis_vector(i)).norm());
}

Vector BalancedTensorSpace::plain(const Matrix& x, const Matrix& y) const {
  const Vector cx = coordinates_in(left_, x, tol_ * (1.0 + x.norm()), "tensor left factor");
  const Vector cy = coordinates_in(right_, y, tol_ * (1.0 + y.norm()), "tensor right factor");
  Vector v(cx.size() * cy.size());
  for (Index p = 0; p < cx.size(); ++p) v.segment(p * cy.size(), cy.size()) = cx(p) * cy;
  return v;
}

Vector BalancedTensorSpace::coords(const Matrix& x, const Matrix& y) const {
  const Vector cx = coordinates_in(left_, x, tol_ * (1.0 + x.norm()), "tensor left factor");
  const Vector cy = coordinates_in(right_, y, tol_ * (1.0 + y.norm()), "tensor right factor");
  return coords_from(cx, cy);
}

Vector BalancedTensorSpace::coords_from(const Vector& cx, const Vector& cy) const {
  if (cx.size() != left_.dim() || cy.size() != right_.dim())
    throw DimensionError("BalancedTensorSpace::coords_from: length mismatch");
  if (simple_) {
    const Vector a = u_.adjoint() * cx, b = v_.adjoint() * cy;
    Vector out(dim());
    for (Index k = 0; k < dim(); ++k) out(k) = a(pairs_[static_cast<std::size_t>(k)].first) * b(pairs_[static_cast<std::size_t>(k)].second);
    return out;
  }
  return coords_of_plain(cx * cy.transpose());
}

Vector BalancedTensorSpace::coords_of_plain(const Matrix& p) const {
  if (p.rows() != left_.dim() || p.cols() != right_.dim())
    throw DimensionError("BalancedTensorSpace::coords_of_plain: shape mismatch");
  if (simple_) {
    const Matrix c = u_.adjoint() * p * v_.conjugate();
    Vector out(dim());
    for (Index k = 0; k < dim(); ++k) out(k) = c(pairs_[static_cast<std::size_t>(k)].first, pairs_[static_cast<std::size_t>(k)].second);
    return out;
  }
  return q_.adjoint() * vectorize(p);
}

Matrix BalancedTensorSpace::multiply(const Vector& q) const {
  if (q.size() != dim()) throw DimensionError("BalancedTensorSpace::multiply: length mismatch");
  if (dim() == 0) return Matrix::Zero(n_, n_);
  return unvectorize(mult_map_ * q, n_, n_);
}

Matrix BalancedTensorSpace::left_action(const Matrix& a) const {
  const Matrix la = left_module_action(a);
  const Index r1 = left_.dim(), r2 = right_.dim(), dq = dim();
  Matrix out = Matrix::Zero(dq, dq);
  if (simple_) {
    const Matrix ua = u_.adjoint() * la * u_;
    for (const auto& cols : by_right_)
      for (Index k : cols)
        for (Index kp : cols)
          out(kp, k) = ua(pairs_[static_cast<std::size_t>(kp)].first, pairs_[static_cast<std::size_t>(k)].first);
    return out;
  }
  for (Index k = 0; k < dq; ++k) out.col(k) = q_.adjoint() * vectorize(Matrix(la * unvectorize(q_.col(k), r1, r2)));
  return out;
}

BalancedTensorSpace balanced_tensor(const Subspace& m1, const Subspace& m2,
                                    const FiniteSpectralTriple& t) {
  return BalancedTensorSpace(m1, m2, t);
}

// ---------------------------------------------------------------- junk

Matrix CalculusSpaces::sigma(const Matrix& x) const {
  const Vector v = vectorize(x);
  return unvectorize(v - junk2.project(v), x.rows(), x.cols());
}

namespace {

CalculusSpaces build_calculus(const FiniteSpectralTriple& t, Subspace omega,
                              const BalancedTensorSpace::Blocks& blocks) {
  const Tolerances& tol = t.tolerances();
  CalculusSpaces c;
  c.hilbert_dim = t.hilbert_dim();
  c.universal = universal_forms(t);
  c.omega1 = std::move(omega);
  c.tensor_square = BalancedTensorSpace(c.omega1, c.omega1, t, blocks, blocks);

  const Index k = t.algebra_dim();
  const Index nn = c.hilbert_dim * c.hilbert_dim;
  const double dn = 1.0 + t.dirac_norm();
  c.junk_scale = dn * dn;

  Matrix stacked(2 * nn, k * k);
  stacked << c.universal.mult_map, c.universal.pi_map / dn;
  c.pi_kernel = nullspace(stacked, tol.rank_tol);

  const auto& da = t.commutators();
  c.universal.delta_tensor_map.resize(c.tensor_square.dim(), k * k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j)
      c.universal.delta_tensor_map.col(i * k + j) =
          c.tensor_square.coords(da[static_cast<std::size_t>(i)], da[static_cast<std::size_t>(j)]);

  std::vector<Vector> jv, jt;
  for (Index i = 0; i < c.pi_kernel.dim(); ++i) {
    jv.push_back(c.universal.delta_map * c.pi_kernel.basis_vector(i));
    jt.push_back(c.universal.delta_tensor_map * c.pi_kernel.basis_vector(i));
  }
  c.junk2 = span(jv, nn, tol.rank_tol, c.junk_scale);
  c.junk_tensors = span(jt, c.tensor_square.dim(), tol.rank_tol, c.junk_scale);

  // a x y ranges over (A dA) dA, so span the one-forms first
  std::vector<Vector> ax;
  for (const Matrix& a : t.algebra_basis())
    for (const Matrix& x : da) ax.push_back(vectorize(a * x));
  const Subspace forms = span(ax, nn, tol.rank_tol, c.junk_scale);
  std::vector<Vector> tf;
  for (Index i = 0; i < forms.dim(); ++i) {
    const Matrix w = unvectorize(forms.basis_vector(i), c.hilbert_dim, c.hilbert_dim);
    for (const Matrix& y : da) tf.push_back(vectorize(w * y));
  }
  c.two_form_image = span(tf, nn, tol.rank_tol, c.junk_scale);

  const Index d2 = c.two_form_image.dim();
  Matrix jc(d2, c.junk2.dim());
  for (Index i = 0; i < c.junk2.dim(); ++i) jc.col(i) = c.two_form_image.coordinates(c.junk2.basis_vector(i));
  c.sigma2 = Matrix::Identity(d2, d2);
  if (c.junk2.dim() > 0) c.sigma2 -= jc * jc.adjoint();
  return c;
}

}  // namespace

CalculusSpaces junk_spaces(const FiniteSpectralTriple& t) {
  return build_calculus(t, one_form_basis(t), {});
}

CalculusSpaces junk_spaces(const ProductTriple& pt) {
  const Index r1 = pt.E1.dim(), r = pt.omega.dim();
  return build_calculus(pt.total, pt.omega, {{0, r1}, {r1, r}});
}

}  // namespace nct
