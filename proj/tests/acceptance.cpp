#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "nctorsion/identities.hpp"
#include "nctorsion/verify.hpp"

using namespace nct;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s criterion %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = Complex(u(rng), u(rng));
  return m;
}

Matrix scalar(double x) {
  Matrix m(1, 1);
  m << x;
  return m;
}

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Complex trace_functional_oracle(const Matrix& u, const Matrix& v, const Matrix& w, const Matrix& x) {
  Complex t = 0;
  const Matrix p = u * v * w * x;
  for (Index i = 0; i < p.rows(); ++i) t += p(i, i);
  return t;
}

void criterion1(std::mt19937_64& rng) {
  const std::vector<Matrix> phis{scalar(2.0), random_matrix(2, 2, rng), random_matrix(2, 3, rng)};
  double worst_ratio = 0, worst_c = 0;
  Index worst_dim = 0;
  for (const Matrix& phi : phis) {
    const Z2Suite z = run_z2_suite(phi);
    const double dn = z.ctx.triple().dirac_norm();
    const double tol = 1e-8 * (1 + dn * dn * dn);
    const double r = std::max(max_abs(z.sigma_table.values - z.spectral.values),
                              max_abs(z.psi_table.values - z.spectral.values));
    worst_ratio = std::max(worst_ratio, r / tol);
    worst_dim = std::max({worst_dim, z.sigma_match.solution_dim, z.psi_match.solution_dim});
    for (const Z2Parameters& p : {z.sigma_c, z.psi_c})
      worst_c = std::max({worst_c, std::abs(p.c_plus - 1.0), std::abs(p.c_minus + 1.0)});
  }
  const bool ok = worst_ratio <= 1.0 && worst_dim == 0 && worst_c <= 1e-8;
  report(1, "z2 tables agree", ok,
         fmt("residual/tol %.3g, |c - diag(1,-1)| %.3g", worst_ratio, worst_c) +
             ", solution dim " + std::to_string(worst_dim));
}

void criterion2() {
  // independent 2x2 arithmetic for phi = [[2]]
  Matrix eta(2, 2), ep(2, 2), d(2, 2);
  eta << 0, -2, 2, 0;
  ep << 1, 0, 0, 0;
  d << 0, 2, 2, 0;
  const Complex want1 = trace_functional_oracle(eta, eta, ep * eta, d);
  const Complex want0 = trace_functional_oracle(eta, eta, eta, d);

  const auto [t, td] = build_two_point(scalar(2.0));
  const CalculusContext ctx = make_plain_context(t);
  const TorsionFunctionalTable tab = functional_table(ctx, TableKind::Spectral);
  const Vector h = ctx.spaces().omega1.coordinates(vectorize(td.eta));
  const Vector g = ctx.spaces().omega1.coordinates(vectorize(Matrix(td.e_plus * td.eta)));
  Complex v1 = 0, v0 = 0;
  for (Index a = 0; a < tab.r; ++a)
    for (Index b = 0; b < tab.r; ++b)
      for (Index c = 0; c < tab.r; ++c) {
        v1 += h(a) * h(b) * g(c) * tab.at(a, b, c);
        v0 += h(a) * h(b) * h(c) * tab.at(a, b, c);
      }
  const double e1 = std::max(std::abs(v1 - 16.0), std::abs(want1 - 16.0));
  const double e0 = std::max(std::abs(v0), std::abs(want0));
  report(2, "spot values", e1 <= 1e-10 && e0 <= 1e-10,
         fmt("|T(eta,eta,e+eta) - 16| %.3g, |T(eta,eta,eta)| %.3g", e1, e0));
}

void criterion3(const Z2Suite& z, const ProductSuite& p) {
  const PerturbationLaw a = perturbation_law(z.ctx, z.sigma_match.connection.coeffs, 20, 101);
  const PerturbationLaw b = perturbation_law(p.ctx, p.prod_psi.connection.coeffs, 20, 102);
  double ratio = 0;
  for (const PerturbationLaw* l : {&a, &b}) {
    const double tol = 1e-8 * l->scale;
    ratio = std::max(ratio, std::max(l->sigma_residual, l->psi_residual) / tol);
  }
  report(3, "perturbation law", ratio <= 1.0 && a.samples == 20 && b.samples == 20,
         fmt("worst residual/(1e-8 scale) %.3g over %g samples per scenario", ratio, 20));
}

void criterion4(const ProductSuite& unit, const ProductSuite& rnd) {
  double cert = 0, junk = 0;
  for (const ProductSuite* s : {&unit, &rnd}) {
    const PsiCertificates& c = s->ctx.psi().cert;
    cert = std::max({cert, c.idempotent, c.self_adjoint, c.beta21_beta12, c.beta12_beta21, c.beta11_square,
                     c.junk_in_image});
    const JunkComponents j = junk_components(s->pt, s->ctx);
    junk = std::max({junk, j.del22, j.del11, j.del12_21});
  }
  report(4, "Psi certificates", cert <= 1e-8 && junk <= 1e-8,
         fmt("certificates %.3g, junk components %.3g", cert, junk));
}

void criterion5(const ProductSuite& s) {
  const double tol = 1e-8 * s.scale;
  const double table = max_abs(s.psi_table.values - s.spectral_d2.values);
  report(5, "Psi torsion of the product connection", s.second_main <= tol && table <= 1e-8,
         fmt("operator residual %.3g, table residual %.3g", s.second_main, table));
}

void criterion6(const ProductSuite& s) {
  const double table = max_abs(s.sigma_table.values - s.reduced.values);
  report(6, "sigma2 torsion of the product connection", s.tvscn <= 1e-8 && table <= 1e-8,
         fmt("operator residual %.3g, table residual %.3g", s.tvscn, table));
}

void criterion7(const ProductSuite& s) {
  const double sig = max_abs(s.sigma_table.values);
  const double psi = max_abs(s.psi_table.values);
  report(7, "junk kills sigma2 torsion", sig <= 1e-10 && psi >= 0.1,
         fmt("max |sigma2 table| %.3g (need <= 1e-10), max |Psi table| %.3g (need >= 0.1)", sig, psi));
}

void criterion8(const ProductSuite& s, std::mt19937_64& rng) {
  const Matrix t1 = random_matrix(4, 4, rng), t2 = random_matrix(4, 4, rng);
  const double trace_err = std::abs(kron(t1, t2).trace() - t1.trace() * t2.trace());
  const double d2 = s.pt.dirac_square_residual;
  const double lem = std::max(lemma_d2_df(s.pt), lemma_r_l_inner(s.pt, s.ctx.psi()));
  const double orth = std::max(s.pt.block_overlap, s.ctx.psi().cert.block_orthogonality);
  const bool ok = d2 <= 1e-10 && trace_err <= 1e-10 && lem <= 1e-8 && orth <= 1e-10;
  report(8, "structural identities", ok,
         fmt("D^2 %.3g, trace %.3g", d2, trace_err) + fmt(", lemmas %.3g, orthogonality %.3g", lem, orth));
}

void criterion9() {
  const double want = std::tgamma(3.0) / (std::tgamma(2.0) * std::tgamma(2.0));
  const double got = dixmier_constant(2, 2);
  report(9, "dixmier constant", std::abs(got - 2.0) <= 1e-12 && std::abs(got - want) <= 1e-12,
         fmt("value %.17g, gamma oracle %.17g", got, want));
}

void criterion10() {
  const char* configs[] = {
      R"({"scenario": "z2", "phi": [[[2, 0]]], "checks": "all", "seed": 7})",
      R"({"scenario": "product", "phi": [[[1, 0]]], "factor1": {"type": "graded_two_point", "z": [1, 0]},
          "checks": "all", "seed": 7})",
      R"({"scenario": "product", "phi": [[[0.3, -1.1], [0.7, 0.2]], [[-0.4, 0.5], [1.3, -0.6]]],
          "factor1": {"type": "graded_two_point", "z": [0.8, 0.6]}, "checks": "all", "seed": 11})"};
  bool same = true;
  for (const char* text : configs) {
    const ScenarioConfig cfg = parse_config(text);
    same = same && report_json(run_checks(cfg), "") == report_json(run_checks(cfg), "");
  }
  report(10, "determinism", same, same ? "reports byte-identical" : "reports differ");
}

}  // namespace

int main() {
  std::mt19937_64 rng(20240611);
  criterion1(rng);
  criterion2();
  const Z2Suite z = run_z2_suite(random_matrix(2, 2, rng));
  const ProductSuite unit = run_product_suite(build_graded_two_point(Complex(1.0, 0.0)), scalar(1.0));
  const ProductSuite rnd = run_product_suite(build_graded_two_point(Complex(1.0, 0.0)), random_matrix(2, 2, rng));
  criterion3(z, rnd);
  criterion4(unit, rnd);
  criterion5(unit);
  criterion6(unit);
  criterion7(unit);
  criterion8(rnd, rng);
  criterion9();
  criterion10();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
