#include <cmath>

#include "nctorsion/torsion.hpp"

namespace nct {

std::string table_kind_name(TableKind k) {
  switch (k) {
    case TableKind::Spectral: return "spectral";
    case TableKind::Sigma2: return "sigma2";
    case TableKind::Psi: return "psi";
    case TableKind::Reduced: return "reduced";
    case TableKind::SpectralD2: return "spectral_d2";
  }
  return "unknown";
}

TorsionFunctionalTable trace_table(const CalculusContext& ctx, const Matrix& x, TableKind kind,
                                   bool sigma_on_uv) {
  const auto& om = ctx.omega_basis();
  const Index r = ctx.omega_dim(), n = ctx.triple().hilbert_dim();
  if (x.cols() != r || x.rows() != n * n) throw DimensionError("trace_table: operator columns have wrong shape");
  // Tr(P X) = sum_ij P(i,j) X(j,i) = vec(P) . vec(X^T)
  Matrix rows(r * r, n * n);
  for (Index a = 0; a < r; ++a)
    for (Index b = 0; b < r; ++b) {
      Matrix p = om[static_cast<std::size_t>(a)] * om[static_cast<std::size_t>(b)];
      if (sigma_on_uv) p = ctx.spaces().sigma(p);
      rows.row(a * r + b) = vectorize(p).transpose();
    }
  Matrix cols(n * n, r);
  for (Index c = 0; c < r; ++c) cols.col(c) = vectorize(unvectorize(x.col(c), n, n).transpose());
  const Matrix vals = rows * cols;

  TorsionFunctionalTable t;
  t.kind = kind;
  t.r = r;
  t.values.resize(r * r * r);
  for (Index ab = 0; ab < r * r; ++ab)
    for (Index c = 0; c < r; ++c) t.values(ab * r + c) = vals(ab, c);
  for (Index i = 0; i < r; ++i) t.labels.push_back("w" + std::to_string(i));
  return t;
}

TorsionFunctionalTable functional_table(const CalculusContext& ctx, TableKind kind, const Matrix* connection,
                                        const Matrix* d2) {
  const auto& om = ctx.omega_basis();
  const Index r = ctx.omega_dim(), n = ctx.triple().hilbert_dim();
  Matrix x(n * n, r);
  auto times = [&](const Matrix& op) {
    for (Index c = 0; c < r; ++c) x.col(c) = vectorize(om[static_cast<std::size_t>(c)] * op);
  };
  switch (kind) {
    case TableKind::Spectral:
      times(ctx.triple().dirac());
      return trace_table(ctx, x, kind);
    case TableKind::SpectralD2:
    case TableKind::Reduced:
      if (!d2) throw PreconditionError("functional_table: " + table_kind_name(kind) + " needs the D2 operator");
      times(*d2);
      return trace_table(ctx, x, kind, kind == TableKind::Reduced);
    case TableKind::Sigma2:
      if (!connection) throw PreconditionError("functional_table: sigma2 table needs a connection");
      return trace_table(ctx, ctx.torsion_sigma(*connection), kind);
    case TableKind::Psi:
      if (!connection) throw PreconditionError("functional_table: psi table needs a connection");
      return trace_table(ctx, ctx.multiply_columns(ctx.torsion_psi(*connection)), kind);
  }
  throw PreconditionError("functional_table: unknown kind");
}

namespace {

Matrix connection_from(const ConnectionSpace& cs, const Vector& theta) {
  return cs.count() ? Matrix(cs.base.coeffs + cs.combine(theta)) : cs.base.coeffs;
}

MatchSolution finish(const CalculusContext& ctx, const ConnectionSpace& cs, const Matrix& l, const Vector& rhs,
                     double scale) {
  MatchSolution out;
  if (l.cols() == 0) {
    out.theta = Vector::Zero(0);
    out.residual = rhs.norm();
  } else {
    const LeastSquares ls = least_squares(l, rhs, ctx.tol().rank_tol);
    out.theta = ls.solution;
    out.solution_dim = ls.nullity;
    out.residual = ls.residual;
  }
  out.connection.coeffs = connection_from(cs, out.theta);
  out.connection.leibniz_residual = leibniz_residual(ctx, out.connection.coeffs);
  out.matched = out.residual <= ctx.tol().compare(scale);
  return out;
}

}  // namespace

MatchSolution solve_matching_connection(const CalculusContext& ctx, const TorsionFunctionalTable& target,
                                        TorsionKind kind) {
  if (target.r != ctx.omega_dim()) throw DimensionError("solve_matching_connection: table size mismatch");
  const ConnectionSpace cs = connection_space(ctx);
  const TableKind tk = kind == TorsionKind::Sigma2 ? TableKind::Sigma2 : TableKind::Psi;
  auto linear_table = [&](const Matrix& m) {
    const Matrix x = kind == TorsionKind::Sigma2 ? ctx.sigma_linear(m) : ctx.multiply_columns(ctx.psi_linear(m));
    return trace_table(ctx, x, tk).values;
  };
  const Vector base = functional_table(ctx, tk, &cs.base.coeffs).values;
  Matrix l(base.size(), cs.count());
  for (Index k = 0; k < cs.count(); ++k) l.col(k) = linear_table(cs.module_map(k));
  return finish(ctx, cs, l, target.values - base, target.max_abs());
}

MatchSolution solve_torsion_map(const CalculusContext& ctx, const Matrix& target, TorsionKind kind) {
  const ConnectionSpace cs = connection_space(ctx);
  auto flat = [](const Matrix& m) { return Vector(m.reshaped()); };
  const Matrix base = kind == TorsionKind::Sigma2 ? ctx.torsion_sigma(cs.base.coeffs) : ctx.torsion_psi(cs.base.coeffs);
  if (base.rows() != target.rows() || base.cols() != target.cols())
    throw DimensionError("solve_torsion_map: target has the wrong shape");
  Matrix l(base.size(), cs.count());
  for (Index k = 0; k < cs.count(); ++k) {
    const Matrix m = cs.module_map(k);
    l.col(k) = flat(kind == TorsionKind::Sigma2 ? ctx.sigma_linear(m) : ctx.psi_linear(m));
  }
  const double scale = target.size() ? target.cwiseAbs().maxCoeff() : 0.0;
  return finish(ctx, cs, l, flat(target - base), scale);
}

double dixmier_constant(double n1, double n2) {
  if (!(n1 > 0) || !(n2 > 0) || !std::isfinite(n1) || !std::isfinite(n2))
    throw DomainError("dixmier_constant: dimensions must be positive and finite");
  const double n = n1 + n2;
  return std::exp(std::lgamma(n / 2 + 1) - std::lgamma(n1 / 2 + 1) - std::lgamma(n2 / 2 + 1));
}

CalculusContext make_plain_context(const FiniteSpectralTriple& t) {
  CalculusSpaces c = junk_spaces(t);
  PsiProjection psi = zero_psi(c);
  return CalculusContext(t, std::move(c), std::move(psi));
}

CalculusContext make_flip_context(const FiniteSpectralTriple& t) {
  CalculusSpaces c = junk_spaces(t);
  PsiProjection psi = flip_psi(c, t);
  return CalculusContext(t, std::move(c), std::move(psi));
}

CalculusContext make_product_context(const ProductTriple& pt) {
  CalculusSpaces c = junk_spaces(pt);
  PsiProjection psi = build_psi(pt, c);
  return CalculusContext(pt.total, std::move(c), std::move(psi));
}

}  // namespace nct
