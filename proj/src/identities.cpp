#include "nctorsion/identities.hpp"

#include <algorithm>
#include <random>

namespace nct {

namespace {

const TwoPointData& require_two_point(const ProductTriple& pt, const char* who) {
  if (!pt.two_point) throw PreconditionError(std::string(who) + ": the second factor must be a two-point space");
  return *pt.two_point;
}

}  // namespace

Complex trace_functional(const Matrix& u, const Matrix& v, const Matrix& w, const Matrix& x) {
  return (u * v * w * x).trace();
}

// ---------------------------------------------------------------- lemmas

double lemma_d2_df(const ProductTriple& pt) {
  const TwoPointData& td = require_two_point(pt, "lemma_d2_df");
  const auto& a1 = pt.factor1.algebra_basis();
  const auto& a2 = pt.factor2.algebra_basis();
  const Matrix& d2 = pt.D2_part;
  double worst = 0.0;
  for (const Matrix& x : a1)
    for (const Matrix& b : a2) {
      const Matrix a = kron(x, b);
      const Matrix at = kron(x, two_point_alpha(b, td));
      worst = std::max(worst, (commutator(d2, a) - (at - a) * d2).norm());
      worst = std::max(worst, (commutator(d2, at) + commutator(d2, a)).norm());
    }
  return worst;
}

double lemma_r_l_inner(const ProductTriple& pt, const PsiProjection& psi) {
  const AValuedInner inner(pt, InnerKind::E1Rule);
  const Index n = pt.total.hilbert_dim();
  const auto e1 = basis_matrices(pt.E1);
  const auto e2 = basis_matrices(pt.E2);
  std::vector<Matrix> ax;
  for (Index p = 0; p < pt.E1.dim(); ++p) ax.push_back(unvectorize(pt.E1.embed(psi.alpha1.col(p)), n, n));
  double worst = 0.0;
  for (std::size_t p = 0; p < e1.size(); ++p)
    for (std::size_t q = 0; q < e1.size(); ++q) {
      const Matrix l = inner(ax[p], e1[q]);
      const Matrix r = inner(e1[p], ax[q]);
      for (const Matrix& u : e2) worst = std::max(worst, (u * l - r * u).norm());
    }
  return worst;
}

JunkComponents junk_components(const ProductTriple& pt, const CalculusContext& ctx) {
  const PsiProjection& psi = ctx.psi();
  if (psi.blocks.size() != 4) throw PreconditionError("junk_components: needs the product Psi");
  const FiniteSpectralTriple& t = pt.total;
  const BalancedTensorSpace& ts = ctx.tensor();
  const Index k = t.algebra_dim();
  std::vector<Matrix> d1, d2;
  for (const Matrix& a : t.algebra_basis()) {
    d1.push_back(commutator(pt.D1_part, a));
    d2.push_back(commutator(pt.D2_part, a));
  }
  auto delta = [&](const Vector& kappa, const std::vector<Matrix>& l, const std::vector<Matrix>& r) {
    Vector out = Vector::Zero(ts.dim());
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j) {
        const Complex c = kappa(i * k + j);
        if (std::abs(c) > 0)
          out += c * ts.coords(l[static_cast<std::size_t>(i)], r[static_cast<std::size_t>(j)]);
      }
    return out;
  };
  JunkComponents out;
  const Subspace& ker = ctx.spaces().pi_kernel;
  out.kernel_dim = ker.dim();
  const Index dq = ts.dim();
  for (Index i = 0; i < ker.dim(); ++i) {
    const Vector kappa = ker.basis_vector(i);
    const Vector c11 = delta(kappa, d1, d1), c12 = delta(kappa, d1, d2);
    const Vector c21 = delta(kappa, d2, d1), c22 = delta(kappa, d2, d2);
    out.del22 = std::max(out.del22, c22.norm());
    out.del11 = std::max(out.del11, ((Matrix::Identity(dq, dq) - psi.beta11) * c11).norm());
    out.del12_21 = std::max(out.del12_21, (psi.beta12 * c12 - c21).norm());
  }
  return out;
}

// ---------------------------------------------------------------- perturbations

PerturbationLaw perturbation_law(const CalculusContext& ctx, const Matrix& n, int samples, std::uint64_t seed) {
  const ConnectionSpace cs = connection_space(ctx);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const BalancedTensorSpace& ts = ctx.tensor();
  const auto& om = ctx.omega_basis();
  const Index r = ctx.omega_dim();

  // torsion maps recomputed one one-form at a time
  auto t_sigma = [&](const Matrix& conn, Index j) {
    return Matrix(ctx.spaces().sigma(ts.multiply(conn.col(j))) - ctx.d_sigma2(om[static_cast<std::size_t>(j)]));
  };
  auto t_psi = [&](const Matrix& conn, Index j) {
    const Vector x = conn.col(j);
    return Vector(x - ctx.psi().map * x - ctx.d_psi(om[static_cast<std::size_t>(j)]));
  };

  PerturbationLaw out;
  out.samples = samples;
  out.scale = std::max(1.0, n.norm());
  for (int s = 0; s < samples; ++s) {
    Vector c(cs.count());
    for (Index k = 0; k < c.size(); ++k) {
      const double re = normal(rng);
      c(k) = Complex(re, normal(rng));
    }
    const Matrix m = cs.count() ? cs.combine(c) : Matrix(Matrix::Zero(ts.dim(), r));
    out.scale = std::max(out.scale, m.norm());
    out.left_linearity = std::max(out.left_linearity, left_linearity_residual(ctx, m));
    const Matrix nm = n + m;
    for (Index j = 0; j < r; ++j) {
      const Matrix sm = ctx.spaces().sigma(ts.multiply(m.col(j)));
      out.sigma_residual =
          std::max(out.sigma_residual, (t_sigma(nm, j) - t_sigma(n, j) - sm).norm());
      const Vector pm = m.col(j) - ctx.psi().map * m.col(j);
      out.psi_residual = std::max(out.psi_residual, (t_psi(nm, j) - t_psi(n, j) - pm).norm());
    }
  }
  return out;
}

// ---------------------------------------------------------------- suites

Z2Suite run_z2_suite(const Matrix& phi, const Tolerances& tol) {
  auto [t, td] = build_two_point(phi, tol);
  Z2Suite s;
  s.ctx = make_plain_context(t);
  s.td = td;
  s.spectral = functional_table(s.ctx, TableKind::Spectral);
  s.sigma_match = solve_matching_connection(s.ctx, s.spectral, TorsionKind::Sigma2);
  s.psi_match = solve_matching_connection(s.ctx, s.spectral, TorsionKind::Psi);
  s.sigma_c = z2_parameters(s.ctx, td, s.sigma_match.connection.coeffs);
  s.psi_c = z2_parameters(s.ctx, td, s.psi_match.connection.coeffs);
  s.sigma_table = functional_table(s.ctx, TableKind::Sigma2, &s.sigma_match.connection.coeffs);
  s.psi_table = functional_table(s.ctx, TableKind::Psi, &s.psi_match.connection.coeffs);
  const Index nn = t.hilbert_dim() * t.hilbert_dim();
  s.grassmann = solve_torsion_map(s.ctx, Matrix::Zero(nn, s.ctx.omega_dim()), TorsionKind::Sigma2);
  s.grassmann_c = z2_parameters(s.ctx, td, s.grassmann.connection.coeffs);
  return s;
}

ProductSuite run_product_suite(const FiniteSpectralTriple& factor1, const Matrix& phi, const Tolerances& tol) {
  auto [t2, td] = build_two_point(phi, tol);
  ProductSuite s;
  s.pt = build_product(factor1, t2, td);
  s.ctx = make_product_context(s.pt);
  s.ctx1_sigma = make_plain_context(factor1);
  s.ctx1_psi = make_flip_context(factor1);
  s.ctx2 = make_plain_context(t2);

  const Index h1 = factor1.hilbert_dim();
  s.n1_sigma = solve_torsion_map(s.ctx1_sigma, Matrix::Zero(h1 * h1, s.ctx1_sigma.omega_dim()), TorsionKind::Sigma2);
  s.n1_psi = solve_torsion_map(s.ctx1_psi, Matrix::Zero(s.ctx1_psi.tensor_dim(), s.ctx1_psi.omega_dim()),
                               TorsionKind::Psi);
  s.n2 = solve_matching_connection(s.ctx2, functional_table(s.ctx2, TableKind::Spectral), TorsionKind::Sigma2);

  s.prod_sigma = product_connection(s.pt, s.ctx, s.ctx1_sigma, s.n1_sigma.connection.coeffs, s.ctx2,
                                    s.n2.connection.coeffs);
  s.prod_psi = product_connection(s.pt, s.ctx, s.ctx1_psi, s.n1_psi.connection.coeffs, s.ctx2,
                                  s.n2.connection.coeffs);
  s.s = perturbation_S(s.pt, s.ctx);
  s.s_left_linearity = left_linearity_residual(s.ctx, s.s);

  const BalancedTensorSpace& ts = s.ctx.tensor();
  const auto& om = s.ctx.omega_basis();
  const Matrix& d2 = s.pt.D2_part;
  const Index r = s.ctx.omega_dim(), r1 = s.pt.E1.dim();
  auto wd2 = [&](Index j) { return Matrix(om[static_cast<std::size_t>(j)] * d2); };
  for (Index j = 0; j < r1; ++j) s.ms_on_e1 = std::max(s.ms_on_e1, (ts.multiply(s.s.col(j)) - wd2(j)).norm());

  const Matrix tp = s.ctx.torsion_psi(s.prod_psi.connection.coeffs);
  for (Index j = 0; j < r; ++j) {
    if (j < r1)
      s.ty1 = std::max(s.ty1, tp.col(j).norm());
    else
      s.ty2 = std::max(s.ty2, (ts.multiply(tp.col(j)) - wd2(j)).norm());
  }
  const Matrix tsg = s.ctx.torsion_sigma(s.prod_sigma.connection.coeffs);
  for (Index j = 0; j < r; ++j) {
    if (j < r1)
      s.tsig1 = std::max(s.tsig1, tsg.col(j).norm());
    else
      s.tsig2 = std::max(s.tsig2, (tsg.col(j) - vectorize(s.ctx.spaces().sigma(wd2(j)))).norm());
  }
  const Matrix np = s.prod_psi.connection.coeffs + s.s;
  const Matrix ns = s.prod_sigma.connection.coeffs + s.s;
  const Matrix tps = s.ctx.torsion_psi(np);
  const Matrix tss = s.ctx.torsion_sigma(ns);
  for (Index j = 0; j < r; ++j) {
    s.second_main = std::max(s.second_main, (ts.multiply(tps.col(j)) - wd2(j)).norm());
    s.tvscn = std::max(s.tvscn, (tss.col(j) - vectorize(s.ctx.spaces().sigma(wd2(j)))).norm());
  }

  s.psi_table = functional_table(s.ctx, TableKind::Psi, &np);
  s.sigma_table = functional_table(s.ctx, TableKind::Sigma2, &ns);
  s.spectral_d2 = functional_table(s.ctx, TableKind::SpectralD2, nullptr, &d2);
  s.reduced = functional_table(s.ctx, TableKind::Reduced, nullptr, &d2);
  s.spectral = functional_table(s.ctx, TableKind::Spectral);
  s.scale = std::max({1.0, s.pt.total.dirac_norm(), np.norm(), ns.norm()});
  return s;
}

// ---------------------------------------------------------------- diagnostics

JunkVsAlgebra junk_vs_algebra(const CalculusContext& ctx) {
  const Subspace& j2 = ctx.spaces().junk2;
  const Subspace& alg = ctx.triple().algebra_span();
  JunkVsAlgebra out;
  out.junk_dim = j2.dim();
  out.junk_in_algebra = contains(alg, j2, 0.0).max_residual;
  out.algebra_in_junk = contains(j2, alg, 0.0).max_residual;
  for (Index i = 0; i < j2.dim(); ++i)
    out.star_closure = std::max(out.star_closure, j2.residual(vectorize(Matrix(j2.basis_matrix(i).adjoint()))));
  return out;
}

double spectral_closedness_defect(const ProductSuite& s) {
  const auto& om = s.ctx.omega_basis();
  Matrix x(s.pt.total.hilbert_dim() * s.pt.total.hilbert_dim(), s.ctx.omega_dim());
  for (Index c = 0; c < x.cols(); ++c) x.col(c) = vectorize(om[static_cast<std::size_t>(c)] * s.pt.D1_part);
  return trace_table(s.ctx, x, TableKind::Spectral).max_abs();
}

double degenerate_collapse(const ProductSuite& s) {
  double worst = 0.0;
  for (const Matrix& w : s.ctx.omega_basis())
    worst = std::max(worst, s.ctx.spaces().sigma(w * s.pt.D2_part).norm());
  return worst;
}

}  // namespace nct
