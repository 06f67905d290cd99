#include <algorithm>

#include <optional>

#include "nctorsion/torsion.hpp"

namespace nct {

// ---------------------------------------------------------------- context

CalculusContext::CalculusContext(FiniteSpectralTriple t, CalculusSpaces c, PsiProjection psi)
    : t_(std::move(t)), c_(std::move(c)), psi_(std::move(psi)) {
  omega_mats_ = basis_matrices(c_.omega1);
  const Subspace& u = c_.universal.one_form_space;
  lift_map_ = u.dim() ? Matrix(c_.universal.pi_map * u.basis()) : Matrix::Zero(c_.universal.pi_map.rows(), 0);
  kernel_shift_ = Vector::Zero(c_.universal.pi_map.cols());
  for (Index i = 0; i < c_.pi_kernel.dim(); ++i)
    kernel_shift_ += c_.pi_kernel.basis_vector(i) / static_cast<double>(i + 1);

  const Index r = omega_dim(), nn = t_.hilbert_dim() * t_.hilbert_dim();
  dsig_.resize(nn, r);
  dpsi_.resize(tensor_dim(), r);
  for (Index j = 0; j < r; ++j) {
    const Matrix& w = omega_mats_[static_cast<std::size_t>(j)];
    dsig_.col(j) = vectorize(d_sigma2(w));
    dpsi_.col(j) = d_psi(w);
    lift_dependence_ = std::max(lift_dependence_, (vectorize(d_sigma2(w, true)) - dsig_.col(j)).norm());
    lift_dependence_ = std::max(lift_dependence_, (d_psi(w, true) - dpsi_.col(j)).norm());
  }
}

Vector CalculusContext::lift(const Matrix& w, bool alternative) const {
  const Vector v = vectorize(w);
  const Subspace& u = c_.universal.one_form_space;
  Vector out = Vector::Zero(c_.universal.pi_map.cols());
  if (lift_map_.cols() > 0) {
    const LeastSquares ls = least_squares(lift_map_, v, tol().rank_tol);
    if (ls.residual > tol().compare(v.norm()))
      throw PreconditionError("lift: operator is not a one-form (residual " + std::to_string(ls.residual) + ")");
    out = u.basis() * ls.solution;
  } else if (v.norm() > tol().compare(0.0)) {
    throw PreconditionError("lift: the calculus has no one-forms");
  }
  if (alternative) out += kernel_shift_;
  return out;
}

Matrix CalculusContext::d_sigma2(const Matrix& w, bool alternative) const {
  const Index n = t_.hilbert_dim();
  return c_.sigma(unvectorize(c_.universal.delta_map * lift(w, alternative), n, n));
}

Vector CalculusContext::d_psi(const Matrix& w, bool alternative) const {
  const Vector d = c_.universal.delta_tensor_map * lift(w, alternative);
  return d - psi_.map * d;
}

Matrix CalculusContext::multiply_columns(const Matrix& q) const {
  if (tensor_dim() == 0) return Matrix::Zero(t_.hilbert_dim() * t_.hilbert_dim(), q.cols());
  return c_.tensor_square.mult_map() * q;
}

Matrix CalculusContext::sigma_columns(const Matrix& v) const {
  if (c_.junk2.dim() == 0) return v;
  return v - c_.junk2.basis() * (c_.junk2.basis().adjoint() * v);
}

Matrix CalculusContext::sigma_linear(const Matrix& m) const { return sigma_columns(multiply_columns(m)); }

Matrix CalculusContext::psi_linear(const Matrix& m) const { return m - psi_.map * m; }

Matrix CalculusContext::torsion_sigma(const Matrix& n) const { return sigma_linear(n) - dsig_; }

Matrix CalculusContext::torsion_psi(const Matrix& n) const { return psi_linear(n) - dpsi_; }

// ---------------------------------------------------------------- Leibniz

namespace {

struct LeibnizData {
  std::vector<Matrix> la;  // left action on one-form coordinates
  std::vector<Matrix> lq;  // left action on tensor quotient coordinates
  std::vector<Matrix> rhs; // [D,a] (x) w_j, columns j
};

LeibnizData leibniz_data(const CalculusContext& ctx) {
  const BalancedTensorSpace& ts = ctx.tensor();
  LeibnizData d;
  const auto& alg = ctx.triple().algebra_basis();
  const auto& da = ctx.triple().commutators();
  for (std::size_t k = 0; k < alg.size(); ++k) {
    d.la.push_back(ts.left_module_action(alg[k]));
    d.lq.push_back(ts.left_action(alg[k]));
    Matrix rhs(ctx.tensor_dim(), ctx.omega_dim());
    for (Index j = 0; j < ctx.omega_dim(); ++j)
      rhs.col(j) = ts.coords(da[k], ctx.omega_basis()[static_cast<std::size_t>(j)]);
    d.rhs.push_back(rhs);
  }
  return d;
}

}  // namespace

double leibniz_residual(const CalculusContext& ctx, const Matrix& n) {
  const LeibnizData d = leibniz_data(ctx);
  double worst = 0.0;
  for (std::size_t k = 0; k < d.la.size(); ++k) {
    const Matrix res = n * d.la[k] - d.lq[k] * n - d.rhs[k];
    for (Index j = 0; j < res.cols(); ++j) worst = std::max(worst, res.col(j).norm());
  }
  return worst;
}

double left_linearity_residual(const CalculusContext& ctx, const Matrix& m) {
  const LeibnizData d = leibniz_data(ctx);
  double worst = 0.0;
  for (std::size_t k = 0; k < d.la.size(); ++k) {
    const Matrix res = m * d.la[k] - d.lq[k] * m;
    for (Index j = 0; j < res.cols(); ++j) worst = std::max(worst, res.col(j).norm());
  }
  return worst;
}

Index ConnectionSpace::count() const {
  Index n = static_cast<Index>(dense_maps.size());
  for (const auto& [out, in] : blocks) n += out.cols() * in.cols();
  return n;
}

Matrix ConnectionSpace::module_map(Index k) const {
  if (k < 0 || k >= count()) throw DimensionError("ConnectionSpace::module_map: index out of range");
  if (k < static_cast<Index>(dense_maps.size())) return dense_maps[static_cast<std::size_t>(k)];
  k -= static_cast<Index>(dense_maps.size());
  for (const auto& [out, in] : blocks) {
    const Index size = out.cols() * in.cols();
    if (k < size) return out.col(k / in.cols()) * in.col(k % in.cols()).adjoint();
    k -= size;
  }
  return {};
}

Matrix ConnectionSpace::combine(const Vector& c) const {
  if (c.size() != count()) throw DimensionError("ConnectionSpace::combine: coefficient count mismatch");
  Matrix m = Matrix::Zero(base.coeffs.rows(), base.coeffs.cols());
  Index k = 0;
  for (const Matrix& d : dense_maps) m += c(k++) * d;
  for (const auto& [out, in] : blocks) {
    const Matrix cb = c.segment(k, out.cols() * in.cols()).reshaped(in.cols(), out.cols()).transpose();
    m += out * cb * in.adjoint();
    k += out.cols() * in.cols();
  }
  return m;
}

namespace {

// Labels of a Hermitian action of h by nearest character value, eigenvectors
// sorted by label; nullopt when some eigenvalue is not a character value.
std::optional<std::pair<Matrix, std::vector<Index>>> labelled_eigenbasis(const Matrix& act,
                                                                         const AlgebraCharacters& ch) {
  if (act.rows() == 0) return std::make_pair(Matrix(0, 0), std::vector<Index>{});
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (act + act.adjoint()));
  std::vector<std::pair<Index, Index>> order;
  for (Index i = 0; i < act.rows(); ++i) {
    const double x = es.eigenvalues()(i);
    const auto it = std::min_element(ch.values.begin(), ch.values.end(),
                                     [x](double p, double q) { return std::abs(p - x) < std::abs(q - x); });
    if (std::abs(*it - x) > 0.25 * ch.separation) return std::nullopt;
    order.emplace_back(static_cast<Index>(it - ch.values.begin()), i);
  }
  std::stable_sort(order.begin(), order.end(), [](const auto& p, const auto& q) { return p.first < q.first; });
  Matrix u(act.rows(), act.rows());
  std::vector<Index> labels;
  for (std::size_t k = 0; k < order.size(); ++k) {
    u.col(static_cast<Index>(k)) = es.eigenvectors().col(order[k].second);
    labels.push_back(order[k].first);
  }
  return std::make_pair(std::move(u), std::move(labels));
}

// Module maps intertwine the left actions; the base connection is
// sum_x [D, e_x] (x) e_x w over the minimal idempotents.
std::optional<ConnectionSpace> character_connection_space(const CalculusContext& ctx) {
  const FiniteSpectralTriple& t = ctx.triple();
  const BalancedTensorSpace& ts = ctx.tensor();
  if (!t.characters() || !ts.simple()) return std::nullopt;
  const AlgebraCharacters& ch = *t.characters();
  const auto lw = labelled_eigenbasis(ts.left_module_action(ch.h), ch);
  const auto lt = labelled_eigenbasis(ts.left_action(ch.h), ch);
  if (!lw || !lt) return std::nullopt;
  const auto& [pw, labw] = *lw;
  const auto& [pt, labt] = *lt;
  for (std::size_t x = 0; x < ch.idempotents.size(); ++x) {
    Matrix dw = ts.left_module_action(ch.idempotents[x]) * pw;
    Matrix dt = ts.left_action(ch.idempotents[x]) * pt;
    for (Index i = 0; i < dw.cols(); ++i)
      if (labw[static_cast<std::size_t>(i)] == static_cast<Index>(x)) dw.col(i) -= pw.col(i);
    for (Index i = 0; i < dt.cols(); ++i)
      if (labt[static_cast<std::size_t>(i)] == static_cast<Index>(x)) dt.col(i) -= pt.col(i);
    if (dw.size() && dw.cwiseAbs().maxCoeff() > 1e-8) return std::nullopt;
    if (dt.size() && dt.cwiseAbs().maxCoeff() > 1e-8) return std::nullopt;
  }

  ConnectionSpace cs;
  for (std::size_t x = 0; x < ch.idempotents.size(); ++x) {
    std::vector<Index> iw, it;
    for (std::size_t i = 0; i < labw.size(); ++i)
      if (labw[i] == static_cast<Index>(x)) iw.push_back(static_cast<Index>(i));
    for (std::size_t i = 0; i < labt.size(); ++i)
      if (labt[i] == static_cast<Index>(x)) it.push_back(static_cast<Index>(i));
    if (iw.empty() || it.empty()) continue;
    cs.blocks.emplace_back(pt(Eigen::all, it), pw(Eigen::all, iw));
  }

  const Index dq = ctx.tensor_dim(), r = ctx.omega_dim();
  const Subspace& om = ctx.spaces().omega1;
  const double ctol = ctx.tol().compare(1.0 + t.dirac_norm());
  Matrix n0 = Matrix::Zero(dq, r);
  for (const Matrix& e : ch.idempotents) {
    const Matrix de = commutator(t.dirac(), e);
    if (de.norm() <= ctx.tol().rank_tol) continue;
    const Vector cde = coordinates_in(om, de, ctol, "[D, e]");
    const Matrix le = ts.left_module_action(e);
    for (Index j = 0; j < r; ++j) n0.col(j) += ts.coords_from(cde, le.col(j));
  }
  for (const auto& [out, in] : cs.blocks) n0 -= out * (out.adjoint() * n0 * in) * in.adjoint();
  cs.base.coeffs = n0;
  cs.base.leibniz_residual = leibniz_residual(ctx, n0);
  if (cs.base.leibniz_residual > ctx.tol().compare(1.0 + t.dirac_norm())) return std::nullopt;
  return cs;
}

}  // namespace

ConnectionSpace connection_space(const CalculusContext& ctx) {
  if (auto cs = character_connection_space(ctx)) return std::move(*cs);
  const LeibnizData d = leibniz_data(ctx);
  const Index dq = ctx.tensor_dim(), r = ctx.omega_dim();
  const auto na = static_cast<Index>(d.la.size());
  // unknown: N stored column-major, entry (row, col) at col * dq + row
  Matrix a = Matrix::Zero(na * r * dq, dq * r);
  Vector b(na * r * dq);
  for (Index k = 0; k < na; ++k) {
    const Matrix& la = d.la[static_cast<std::size_t>(k)];
    const Matrix& lq = d.lq[static_cast<std::size_t>(k)];
    for (Index j = 0; j < r; ++j) {
      const Index row = (k * r + j) * dq;
      for (Index i = 0; i < r; ++i)
        if (la(i, j) != Complex(0))
          a.block(row, i * dq, dq, dq) += la(i, j) * Matrix::Identity(dq, dq);
      a.block(row, j * dq, dq, dq) -= lq;
      b.segment(row, dq) = d.rhs[static_cast<std::size_t>(k)].col(j);
    }
  }
  ConnectionSpace cs;
  const LeastSquares ls = least_squares(a, b, ctx.tol().rank_tol);
  cs.base.coeffs = ls.solution.reshaped(dq, r);
  cs.base.leibniz_residual = leibniz_residual(ctx, cs.base.coeffs);
  const Subspace ker = nullspace(a, ctx.tol().rank_tol);
  for (Index i = 0; i < ker.dim(); ++i) cs.dense_maps.push_back(ker.basis_vector(i).reshaped(dq, r));
  return cs;
}

// ---------------------------------------------------------------- two-point

Connection z2_connection(const CalculusContext& ctx, const TwoPointData& td, Complex c_plus,
                         Complex c_minus) {
  if (td.phi.norm() <= ctx.tol().rank_tol)
    throw PreconditionError("z2_connection: degenerate two-point triple (phi = 0)");
  const Index n = td.D_phi.rows();
  const Matrix c = c_minus * Matrix::Identity(n, n) + (c_plus - c_minus) * td.e_plus;
  const BalancedTensorSpace& ts = ctx.tensor();
  const Vector target = ts.coords(c * td.eta, td.eta);
  const Vector h = coordinates_in(ctx.spaces().omega1, td.eta, ctx.tol().compare(td.eta.norm()), "eta");

  const ConnectionSpace cs = connection_space(ctx);
  Matrix l(target.size(), cs.count());
  for (Index k = 0; k < cs.count(); ++k) l.col(k) = cs.module_map(k) * h;
  const LeastSquares ls = least_squares(l, target - cs.base.coeffs * h, ctx.tol().rank_tol);
  if (ls.nullity > 0 || ls.residual > ctx.tol().compare(target.norm()))
    throw ConstructionError("z2_connection: nabla(eta) does not determine a unique connection");
  Connection out;
  out.coeffs = cs.base.coeffs + cs.combine(ls.solution);
  out.leibniz_residual = leibniz_residual(ctx, out.coeffs);
  return out;
}

Z2Parameters z2_parameters(const CalculusContext& ctx, const TwoPointData& td, const Matrix& n) {
  const BalancedTensorSpace& ts = ctx.tensor();
  const Vector h = coordinates_in(ctx.spaces().omega1, td.eta, ctx.tol().compare(td.eta.norm()), "eta");
  Matrix basis(ts.dim(), 2);
  basis.col(0) = ts.coords(td.eta, td.eta);
  basis.col(1) = ts.coords(td.e_plus * td.eta, td.eta);
  const LeastSquares ls = least_squares(basis, n * h, ctx.tol().rank_tol);
  return {ls.solution(0) + ls.solution(1), ls.solution(0), ls.residual};
}

// ---------------------------------------------------------------- products

ProductConnection product_connection(const ProductTriple& pt, const CalculusContext& ctx,
                                     const CalculusContext& ctx1, const Matrix& n1,
                                     const CalculusContext& ctx2, const Matrix& n2) {
  const FiniteSpectralTriple& t1 = pt.factor1;
  const FiniteSpectralTriple& t2 = pt.factor2;
  const Matrix& g = *t1.grading();
  const Index n2d = t2.hilbert_dim();
  const Matrix id2 = Matrix::Identity(n2d, n2d);
  const BalancedTensorSpace& ts = ctx.tensor();
  const auto& om1 = ctx1.omega_basis();
  const auto& om2 = ctx2.omega_basis();
  const auto r1f = static_cast<Index>(om1.size()), r2f = static_cast<Index>(om2.size());
  const double lt1 = leibniz_residual(ctx1, n1), lt2 = leibniz_residual(ctx2, n2);
  if (lt1 > ctx1.tol().compare(1.0) || lt2 > ctx2.tol().compare(1.0))
    throw PreconditionError("product_connection: a factor connection violates the Leibniz rule");

  const double ctol = ctx.tol().compare(1.0 + pt.total.dirac_norm());
  auto coords_of = [&](const Subspace& s, const Matrix& x) { return coordinates_in(s, x, ctol, "product one-form"); };
  auto columns = [&](const Subspace& s, const std::vector<Matrix>& xs) {
    Matrix c(s.dim(), static_cast<Index>(xs.size()));
    for (std::size_t k = 0; k < xs.size(); ++k) c.col(static_cast<Index>(k)) = coords_of(s, xs[k]);
    return c;
  };
  const Subspace& lm = ts.left_module();
  const Subspace& rm = ts.right_module();

  // tensors sum_{p,q} R(p,q) x_p (x) y_q as plain coefficient matrices CX R CY^T
  std::vector<Matrix> w1_id;
  for (const Matrix& w : om1) w1_id.push_back(kron(w, id2));
  const Matrix cx1 = columns(lm, w1_id);
  std::vector<Vector> sp, im;
  for (const Matrix& b : t2.algebra_basis()) {
    std::vector<Matrix> w1_b;
    for (const Matrix& w : om1) w1_b.push_back(kron(w, b));
    const Matrix cy1 = columns(rm, w1_b);
    const Matrix db = commutator(t2.dirac(), b);
    const bool has_db = db.norm() > 0;
    const Vector cdb = has_db ? Vector(coords_of(lm, kron(g, db))) : Vector();
    for (Index i = 0; i < r1f; ++i) {
      const Matrix rep = unvectorize(ctx1.tensor().Q() * n1.col(i), r1f, r1f);
      Vector val = ts.coords_of_plain(cx1 * rep * cy1.transpose());
      if (has_db) val += ts.coords_from(cdb, coords_of(rm, w1_id[static_cast<std::size_t>(i)]));
      sp.push_back(vectorize(w1_b[static_cast<std::size_t>(i)]));
      im.push_back(val);
    }
  }
  std::vector<Matrix> g_w2;
  for (const Matrix& u : om2) g_w2.push_back(kron(g, u));
  const Matrix cy2 = columns(rm, g_w2);
  for (const Matrix& a : t1.algebra_basis()) {
    const Matrix da = commutator(t1.dirac(), a);
    const bool has_da = da.norm() > 0;
    const Vector cda = has_da ? Vector(coords_of(lm, kron(da, id2))) : Vector();
    std::vector<Matrix> ga_w2;
    for (const Matrix& u : om2) ga_w2.push_back(kron(g * a, u));
    const Matrix cx2 = columns(lm, ga_w2);
    for (Index j = 0; j < r2f; ++j) {
      const Matrix rep = unvectorize(ctx2.tensor().Q() * n2.col(j), r2f, r2f);
      Vector val = ts.coords_of_plain(cx2 * rep * cy2.transpose());
      if (has_da) val += ts.coords_from(cda, cy2.col(j));
      sp.push_back(vectorize(ga_w2[static_cast<std::size_t>(j)]));
      im.push_back(val);
    }
  }
  const InducedMap m = induced_map(ctx.spaces().omega1, sp, im, ctx.tol().rank_tol);
  ProductConnection out;
  out.connection.coeffs = m.matrix;
  out.connection.leibniz_residual = leibniz_residual(ctx, m.matrix);
  out.consistency_residual = m.consistency_residual;
  return out;
}

Matrix perturbation_S(const ProductTriple& pt, const CalculusContext& ctx) {
  const Matrix& d2 = pt.D2_part;
  const double res = pt.E2.residual(vectorize(d2));
  if (res > ctx.tol().compare(d2.norm()))
    throw PreconditionError("perturbation_S: D2 is not a one-form in E2 (residual " + std::to_string(res) + ")");
  const Index r1 = pt.E1.dim(), dq = ctx.tensor_dim();
  Matrix s = Matrix::Zero(dq, ctx.omega_dim());
  for (Index j = 0; j < r1; ++j) {
    const Vector v = ctx.tensor().coords(ctx.omega_basis()[static_cast<std::size_t>(j)], d2);
    s.col(j) = v - ctx.psi().map * v;
  }
  return s;
}

}  // namespace nct
