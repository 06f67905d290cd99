#include "nctorsion/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nctorsion/identities.hpp"

namespace nct {

using json = nlohmann::json;

std::string scenario_name(Scenario s) { return s == Scenario::Z2 ? "z2" : "product"; }

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

const std::vector<std::string> kZ2Checks = {
    "z2agree_sigma", "z2agree_psi", "z2_uniqueness", "z2_parameter",
    "z2_spot_value", "grassmann_unique", "leibniz", "perturbation_law",
};

const std::vector<std::string> kProductChecks = {
    "dirac_square_split", "e1_e2_orthogonal", "psi_descent", "alpha_consistency",
    "psi_idempotent", "psi_self_adjoint", "beta21_beta12", "beta12_beta21",
    "beta11_square", "beta11_self_adjoint", "beta12_adjoint", "junk_in_image",
    "block_orthogonality", "del22", "del11", "del12_21",
    "lemma_d2_df", "lemma_r_l_inner", "first_factor_torsion_free", "product_leibniz",
    "prop_tsig", "prop_ty", "lemma_m_s", "second_main",
    "second_main_table", "tvscn", "tvscn_table", "perturbation_law",
    "spectral_closedness", "junk_vs_algebra", "right_inclusion", "junk_kills_torsion",
    "degenerate_collapse",
};

// ---------------------------------------------------------------- parsing

Complex parse_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(where + ": expected a number or [re, im]");
}

Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(where + ": expected a nested row-major array");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j[0].size());
  if (cols == 0) throw ConfigError(where + ": empty row");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw ConfigError(where + ": row " + std::to_string(r) + " has the wrong length");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = parse_complex(row[static_cast<std::size_t>(c)],
                              where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

double positive(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(where + ": must be positive");
  return v;
}

Factor1Config parse_factor1(const json& j) {
  if (!j.is_object()) throw ConfigError("factor1: expected an object");
  Factor1Config f;
  const std::string type = j.value("type", "");
  if (type == "graded_two_point") {
    reject_unknown(j, {"type", "z"}, "factor1");
    f.kind = Factor1Config::Kind::GradedTwoPoint;
    if (j.contains("z")) f.z = parse_complex(j["z"], "factor1.z");
  } else if (type == "clifford_torus") {
    reject_unknown(j, {"type", "N", "d"}, "factor1");
    f.kind = Factor1Config::Kind::CliffordTorus;
    if (!j.contains("N") || !j["N"].is_number_integer()) throw ConfigError("factor1.N: expected an integer");
    f.n = j["N"].get<Index>();
    if (j.contains("d")) {
      if (!j["d"].is_number_integer()) throw ConfigError("factor1.d: expected an integer");
      f.d = j["d"].get<Index>();
    }
    if (f.n < 2 || f.d < 1) throw ConfigError("factor1: need N >= 2 and d >= 1");
  } else if (type == "user") {
    reject_unknown(j, {"type", "algebra", "dirac", "grading"}, "factor1");
    f.kind = Factor1Config::Kind::User;
    if (!j.contains("algebra") || !j["algebra"].is_array() || j["algebra"].empty())
      throw ConfigError("factor1.algebra: expected a non-empty list of matrices");
    for (std::size_t i = 0; i < j["algebra"].size(); ++i)
      f.algebra.push_back(parse_matrix(j["algebra"][i], "factor1.algebra[" + std::to_string(i) + "]"));
    if (!j.contains("dirac")) throw ConfigError("factor1.dirac: missing");
    f.dirac = parse_matrix(j["dirac"], "factor1.dirac");
    if (j.contains("grading")) f.grading = parse_matrix(j["grading"], "factor1.grading");
  } else {
    throw ConfigError("factor1.type: expected graded_two_point, clifford_torus or user");
  }
  return f;
}

std::vector<std::string> resolve_checks(Scenario s, const std::vector<std::string>& requested) {
  const auto& known = known_checks(s);
  if (requested.size() == 1 && requested[0] == "all") return known;
  std::set<std::string> want;
  for (const std::string& name : requested) {
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ConfigError("unknown check '" + name + "' for scenario " + scenario_name(s));
    want.insert(name);
  }
  std::vector<std::string> out;
  for (const std::string& name : known)
    if (want.count(name)) out.push_back(name);
  return out;
}

std::vector<std::string> split_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::vector<std::string> known_checks(Scenario s) { return s == Scenario::Z2 ? kZ2Checks : kProductChecks; }

namespace {

ScenarioConfig parse_document(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(j,
                 {"scenario", "phi", "factor1", "tolerances", "checks", "output", "table_output", "seed",
                  "perturbation_samples"},
                 "config");
  ScenarioConfig cfg;
  const std::string sc = j.value("scenario", "");
  if (sc == "z2")
    cfg.scenario = Scenario::Z2;
  else if (sc == "product")
    cfg.scenario = Scenario::Product;
  else
    throw ConfigError("scenario: expected \"z2\" or \"product\"");

  if (!j.contains("phi")) throw ConfigError("phi: missing");
  cfg.phi = parse_matrix(j["phi"], "phi");

  if (cfg.scenario == Scenario::Product) {
    if (!j.contains("factor1")) throw ConfigError("factor1: required for the product scenario");
    cfg.factor1 = parse_factor1(j["factor1"]);
  } else if (j.contains("factor1")) {
    throw ConfigError("factor1: only allowed for the product scenario");
  }

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) throw ConfigError("tolerances: expected an object");
    reject_unknown(t, {"rank_tol", "compare_tol"}, "tolerances");
    if (t.contains("rank_tol")) cfg.tolerances.rank_tol = positive(t["rank_tol"], "tolerances.rank_tol");
    if (t.contains("compare_tol")) cfg.tolerances.compare_tol = positive(t["compare_tol"], "tolerances.compare_tol");
  }

  std::vector<std::string> requested{"all"};
  if (j.contains("checks")) {
    const json& c = j["checks"];
    if (c.is_string()) {
      requested = split_list(c.get<std::string>());
    } else if (c.is_array()) {
      requested.clear();
      for (const json& x : c) {
        if (!x.is_string()) throw ConfigError("checks: expected strings");
        requested.push_back(x.get<std::string>());
      }
    } else {
      throw ConfigError("checks: expected \"all\" or a list of names");
    }
    if (requested.empty()) throw ConfigError("checks: empty selection");
  }
  cfg.checks = resolve_checks(cfg.scenario, requested);

  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output: expected a path");
    cfg.output = j["output"].get<std::string>();
  }
  if (j.contains("table_output")) {
    if (!j["table_output"].is_string()) throw ConfigError("table_output: expected a path");
    cfg.table_output = j["table_output"].get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("perturbation_samples")) {
    if (!j["perturbation_samples"].is_number_integer() || j["perturbation_samples"].get<int>() < 1)
      throw ConfigError("perturbation_samples: expected a positive integer");
    cfg.perturbation_samples = j["perturbation_samples"].get<int>();
  }
  cfg.canonical = j.dump();
  return cfg;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_document(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void select_checks(ScenarioConfig& cfg, const std::string& list) {
  const auto names = split_list(list);
  if (names.empty()) throw ConfigError("--checks: empty selection");
  cfg.checks = resolve_checks(cfg.scenario, names);
}

namespace {

constexpr double kExactTol = 1e-10;

double exact(double scale) { return kExactTol * (1.0 + scale); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(Complex c) { return "(" + fmt(c.real()) + ", " + fmt(c.imag()) + ")"; }

double max_diff(const TorsionFunctionalTable& a, const TorsionFunctionalTable& b) {
  if (a.values.size() == 0) return 0.0;
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

class Recorder {
 public:
  void hard(const std::string& name, double residual, double tol, std::string details, bool extra_ok = true) {
    CheckRecord r{name, CheckStatus::Pass, residual, tol, std::move(details)};
    if (!(residual <= tol) || !extra_ok) r.status = CheckStatus::Fail;
    records_[name] = std::move(r);
  }
  void diagnostic(const std::string& name, double residual, double tol, const std::string& details) {
    const std::string verdict = residual <= tol ? "holds" : "does not hold";
    records_[name] = {name, CheckStatus::Diagnostic, residual, tol, verdict + "; " + details};
  }
  void fill(VerificationReport& rep, const std::vector<std::string>& order) const {
    for (const std::string& name : order) {
      const auto it = records_.find(name);
      if (it == records_.end()) continue;
      rep.checks.push_back(it->second);
      switch (it->second.status) {
        case CheckStatus::Pass: ++rep.passed; break;
        case CheckStatus::Fail: ++rep.failed; break;
        case CheckStatus::Diagnostic: ++rep.diagnostics; break;
      }
    }
  }

 private:
  std::map<std::string, CheckRecord> records_;
};

FiniteSpectralTriple make_factor1(const ScenarioConfig& cfg) {
  const Factor1Config& f = cfg.factor1;
  switch (f.kind) {
    case Factor1Config::Kind::GradedTwoPoint: return build_graded_two_point(f.z, cfg.tolerances);
    case Factor1Config::Kind::CliffordTorus: return build_clifford_torus(f.n, f.d, cfg.tolerances);
    case Factor1Config::Kind::User:
      return build_user_triple("user", f.algebra, f.dirac, f.grading, cfg.tolerances);
  }
  throw ConfigError("factor1: unknown kind");
}

void z2_checks(const ScenarioConfig& cfg, VerificationReport& rep, Recorder& rec) {
  const Tolerances& tol = cfg.tolerances;
  const Z2Suite z = run_z2_suite(cfg.phi, tol);
  const FiniteSpectralTriple& t = z.ctx.triple();
  if (t.degenerate()) {
    rep.degenerate = true;
    for (const std::string& name : kZ2Checks)
      rec.hard(name, 0.0, 0.0, "trivial: degenerate triple, Omega^1 = 0");
    return;
  }
  const double dn = t.dirac_norm();
  const double agree_tol = tol.compare_tol * (1.0 + dn * dn * dn);
  rec.hard("z2agree_sigma", max_diff(z.sigma_table, z.spectral), agree_tol,
           "max |T_sigma2 - T_D| over " + std::to_string(z.spectral.values.size()) + " basis triples");
  rec.hard("z2agree_psi", max_diff(z.psi_table, z.spectral), agree_tol,
           "max |T_Psi - T_D| over " + std::to_string(z.spectral.values.size()) + " basis triples");
  const Index dim = std::max(z.sigma_match.solution_dim, z.psi_match.solution_dim);
  rec.hard("z2_uniqueness", static_cast<double>(dim), 0.0,
           "solution-space dimension sigma2 " + std::to_string(z.sigma_match.solution_dim) + ", Psi " +
               std::to_string(z.psi_match.solution_dim));
  const Complex one(1.0, 0.0);
  const double cdev = std::max({std::abs(z.sigma_c.c_plus - one), std::abs(z.sigma_c.c_minus + one),
                                std::abs(z.psi_c.c_plus - one), std::abs(z.psi_c.c_minus + one)});
  rec.hard("z2_parameter", std::max({cdev, z.sigma_c.fit_residual, z.psi_c.fit_residual}), tol.compare_tol,
           "solved c = diag" + fmt(z.sigma_c.c_plus) + "," + fmt(z.sigma_c.c_minus) + ", expected diag(1, -1)");

  const Matrix& d = t.dirac();
  const Matrix pp = z.td.phi * z.td.phi.adjoint();
  const double oracle = (pp * pp).trace().real();
  const Complex v1 = trace_functional(z.td.eta, z.td.eta, z.td.e_plus * z.td.eta, d);
  const Complex v2 = trace_functional(z.td.eta, z.td.eta, z.td.eta, d);
  rec.hard("z2_spot_value", std::max(std::abs(v1 - oracle), std::abs(v2)), exact(oracle),
           "T_D(eta, eta, e+ eta) = " + fmt(v1) + " vs Tr((phi phi*)^2) = " + fmt(oracle) +
               "; T_D(eta, eta, eta) = " + fmt(v2));
  const double gdev = std::max({std::abs(z.grassmann_c.c_plus), std::abs(z.grassmann_c.c_minus),
                                z.grassmann.residual, z.grassmann_c.fit_residual});
  rec.hard("grassmann_unique", gdev, tol.compare(dn),
           "sigma2-torsion-free connection c = diag" + fmt(z.grassmann_c.c_plus) + "," +
               fmt(z.grassmann_c.c_minus) + ", dimension " + std::to_string(z.grassmann.solution_dim),
           z.grassmann.solution_dim == 0);
  rec.hard("leibniz",
           std::max(z.sigma_match.connection.leibniz_residual, z.psi_match.connection.leibniz_residual),
           tol.compare(dn), "Leibniz rule of the solved connections");
  const PerturbationLaw pl =
      perturbation_law(z.ctx, z.sigma_match.connection.coeffs, cfg.perturbation_samples, cfg.seed);
  rec.hard("perturbation_law", std::max({pl.sigma_residual, pl.psi_residual, pl.left_linearity}),
           tol.compare(pl.scale), std::to_string(pl.samples) + " random module maps");
}

void product_checks(const ScenarioConfig& cfg, VerificationReport& rep, Recorder& rec) {
  const Tolerances& tol = cfg.tolerances;
  const ProductSuite s = run_product_suite(make_factor1(cfg), cfg.phi, tol);
  rep.degenerate = s.pt.total.degenerate();
  const PsiCertificates& c = s.ctx.psi().cert;
  const double dn = s.pt.total.dirac_norm(), sc = s.scale;

  rec.hard("dirac_square_split", s.pt.dirac_square_residual, exact(dn * dn), "||D^2 - D1^2 - D2^2||");
  rec.hard("e1_e2_orthogonal", s.pt.block_overlap, kExactTol, "max |<e1, e2>| over E1, E2 bases");
  rec.hard("psi_descent", std::max({c.descent11, c.descent12, c.descent21}), tol.compare(1.0),
           "beta maps vanish on the balancing relations");
  rec.hard("alpha_consistency", std::max({c.alpha_consistency, c.twist_residual, c.twist_consistency}),
           tol.compare(1.0), "alpha_1 and the E2 twist are well defined");
  rec.hard("psi_idempotent", c.idempotent, tol.compare(1.0), "||Psi^2 - Psi||");
  rec.hard("psi_self_adjoint", c.self_adjoint, tol.compare(1.0), "||G Psi - Psi^* G||, trace-scalarized form");
  rec.hard("beta21_beta12", c.beta21_beta12, tol.compare(1.0), "||b21 b12 - 1|| on E(1,2)");
  rec.hard("beta12_beta21", c.beta12_beta21, tol.compare(1.0), "||b12 b21 - 1|| on E(2,1)");
  rec.hard("beta11_square", c.beta11_square, tol.compare(1.0), "||b11^2 - 1|| on E(1,1)");
  rec.hard("beta11_self_adjoint", c.beta11_adjoint, tol.compare(1.0), "||G b11 - b11^* G||");
  rec.hard("beta12_adjoint", c.beta12_adjoint, tol.compare(1.0), "||G b12 - b21^* G||");
  rec.hard("junk_in_image", c.junk_in_image, tol.compare(1.0),
           "JT^2 inside Im Psi, dim JT^2 = " + std::to_string(s.ctx.spaces().junk_tensors.dim()));
  rec.hard("block_orthogonality", c.block_orthogonality, kExactTol, "E(i,j) blocks mutually orthogonal");

  const JunkComponents jc = junk_components(s.pt, s.ctx);
  const std::string kd = "dim ker pi_D = " + std::to_string(jc.kernel_dim);
  rec.hard("del22", jc.del22, tol.compare(dn * dn), "E(2,2) component of delta(ker pi_D); " + kd);
  rec.hard("del11", jc.del11, tol.compare(dn * dn), "E(1,1) component is b11-fixed; " + kd);
  rec.hard("del12_21", jc.del12_21, tol.compare(dn * dn), "b12 maps the E(1,2) part to the E(2,1) part; " + kd);
  rec.hard("lemma_d2_df", lemma_d2_df(s.pt), tol.compare(dn), "[D2, a] = (alpha~ - 1)(a) D2");
  rec.hard("lemma_r_l_inner", lemma_r_l_inner(s.pt, s.ctx.psi()), tol.compare(1.0),
           "u <alpha1 x, y> = <x, alpha1 y> u");
  rec.hard("first_factor_torsion_free", std::max(s.n1_sigma.residual, s.n1_psi.residual), tol.compare(1.0),
           "solution dimensions sigma2 " + std::to_string(s.n1_sigma.solution_dim) + ", Psi " +
               std::to_string(s.n1_psi.solution_dim));
  rec.hard("product_leibniz",
           std::max({s.prod_sigma.connection.leibniz_residual, s.prod_psi.connection.leibniz_residual,
                     s.prod_sigma.consistency_residual, s.prod_psi.consistency_residual}),
           tol.compare(sc), "product connections are well defined and satisfy Leibniz");
  rec.hard("prop_tsig", std::max(s.tsig1, s.tsig2), tol.compare(sc),
           "T_sigma2 = 0 on E1, sigma2(w D2) on E2");
  rec.hard("prop_ty", std::max(s.ty1, s.ty2), tol.compare(sc), "T_Psi = 0 on E1, m T_Psi(w) = w D2 on E2");
  rec.hard("lemma_m_s", std::max(s.ms_on_e1, s.s_left_linearity), tol.compare(sc),
           "m S(w) = w D2 on E1 and S left linear");
  rec.hard("second_main", s.second_main, tol.compare(sc), "max_w ||m T_Psi(w) - w D2||");
  rec.hard("second_main_table", max_diff(s.psi_table, s.spectral_d2), tol.compare(s.spectral_d2.max_abs()),
           "T_Psi table vs Tr(u v w D2)");
  rec.hard("tvscn", s.tvscn, tol.compare(sc), "max_w ||T_sigma2(w) - sigma2(w D2)||");
  rec.hard("tvscn_table", max_diff(s.sigma_table, s.reduced), tol.compare(s.reduced.max_abs()),
           "T_sigma2 table vs Tr(sigma2(u v) w D2)");
  const PerturbationLaw pl =
      perturbation_law(s.ctx, s.prod_psi.connection.coeffs + s.s, cfg.perturbation_samples, cfg.seed);
  rec.hard("perturbation_law", std::max({pl.sigma_residual, pl.psi_residual, pl.left_linearity}),
           tol.compare(pl.scale), std::to_string(pl.samples) + " random module maps");

  rec.diagnostic("spectral_closedness", spectral_closedness_defect(s), kExactTol, "max |Tr(u v w D1)|");
  const JunkVsAlgebra jv = junk_vs_algebra(s.ctx);
  rec.diagnostic("junk_vs_algebra", std::max(jv.junk_in_algebra, jv.algebra_in_junk), tol.compare(1.0),
                 "dim J2 = " + std::to_string(jv.junk_dim) + ", dim A = " +
                     std::to_string(s.pt.total.algebra_dim()) + ", J2 star-closure " + fmt(jv.star_closure));
  rec.diagnostic("right_inclusion", c.image_in_junk, tol.compare(1.0), "m(Im Psi) inside J2");
  rec.diagnostic("junk_kills_torsion", s.sigma_table.max_abs(), kExactTol,
                 "max |T_sigma2| = " + fmt(s.sigma_table.max_abs()) + ", max |T_Psi| = " + fmt(s.psi_table.max_abs()));
  rec.diagnostic("degenerate_collapse", degenerate_collapse(s), tol.compare(1.0), "max_w ||sigma2(w D2)||");
}

std::string status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Diagnostic: return "diagnostic";
  }
  return "fail";
}

json::number_float_t finite_or_max(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

std::string csv_of(const TorsionFunctionalTable& t) {
  std::string out = "u,v,w,re,im\n";
  char buf[128];
  for (Index u = 0; u < t.r; ++u)
    for (Index v = 0; v < t.r; ++v)
      for (Index w = 0; w < t.r; ++w) {
        const Complex x = t.at(u, v, w);
        std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%.17g,%.17g\n", static_cast<long long>(u),
                      static_cast<long long>(v), static_cast<long long>(w), x.real(), x.imag());
        out += buf;
      }
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

}  // namespace

VerificationReport run_checks(const ScenarioConfig& cfg) {
  VerificationReport rep;
  rep.scenario = cfg.scenario;
  rep.tolerances = cfg.tolerances;
  rep.config_digest = fnv1a_hex(cfg.canonical);
  Recorder rec;
  if (cfg.scenario == Scenario::Z2)
    z2_checks(cfg, rep, rec);
  else
    product_checks(cfg, rep, rec);
  rec.fill(rep, cfg.checks);
  return rep;
}

std::string report_json(const VerificationReport& r, const std::string& timestamp) {
  nlohmann::ordered_json j;
  j["report_version"] = 1;
  j["scenario"] = scenario_name(r.scenario);
  j["degenerate"] = r.degenerate;
  j["checks"] = nlohmann::ordered_json::array();
  for (const CheckRecord& c : r.checks) {
    nlohmann::ordered_json x;
    x["name"] = c.name;
    x["status"] = status_name(c.status);
    x["max_residual"] = finite_or_max(c.max_residual);
    x["tolerance"] = c.tolerance;
    x["details"] = c.details;
    j["checks"].push_back(x);
  }
  nlohmann::ordered_json env;
  env["version"] = kVersion;
  env["tolerances"] = {{"rank_tol", r.tolerances.rank_tol}, {"compare_tol", r.tolerances.compare_tol}};
  env["config_digest"] = r.config_digest;
  if (!timestamp.empty()) env["timestamp"] = timestamp;
  j["environment"] = env;
  j["summary"] = {{"passed", r.passed},
                  {"failed", r.failed},
                  {"diagnostic", r.diagnostics},
                  {"overall", r.overall_pass() ? "pass" : "fail"}};
  return j.dump(2) + "\n";
}

std::vector<TableFile> build_tables(const ScenarioConfig& cfg, std::string& sidecar) {
  std::vector<TableFile> out;
  nlohmann::ordered_json side;
  side["scenario"] = scenario_name(cfg.scenario);
  side["columns"] = {"u", "v", "w", "re", "im"};
  side["value"] = "Tr(u v X(w)) with u, v, w running over the orthonormal one-form basis";
  Index r = 0;
  auto add = [&](const TorsionFunctionalTable& t, const std::string& kind, const std::string& formula) {
    out.push_back({kind, csv_of(t)});
    side["kinds"][kind] = {{"file", scenario_name(cfg.scenario) + "_" + kind + ".csv"}, {"formula", formula}};
  };
  if (cfg.scenario == Scenario::Z2) {
    const Z2Suite z = run_z2_suite(cfg.phi, cfg.tolerances);
    r = z.ctx.omega_dim();
    side["basis"] = "Hilbert-Schmidt orthonormal basis of Omega^1_D";
    add(z.spectral, "spectral", "Tr(u v w D)");
    add(z.sigma_table, "sigma2", "Tr(u v T_sigma2(w)), solved connection");
    add(z.psi_table, "psi", "Tr(u v m T_Psi(w)), solved connection");
  } else {
    const ProductSuite s = run_product_suite(make_factor1(cfg), cfg.phi, cfg.tolerances);
    r = s.ctx.omega_dim();
    side["basis"] = "orthonormal basis of E1 (first " + std::to_string(s.pt.E1.dim()) +
                    " labels) followed by E2";
    add(s.spectral, "spectral", "Tr(u v w D)");
    add(s.spectral_d2, "spectral_d2", "Tr(u v w D2)");
    add(s.psi_table, "psi", "Tr(u v m T_Psi(w)), product connection plus S");
    add(s.sigma_table, "sigma2", "Tr(u v T_sigma2(w)), product connection plus S");
    add(s.reduced, "reduced", "Tr(sigma2(u v) w D2)");
  }
  side["one_form_dim"] = r;
  side["index_order"] = "row index (u * r + v) * r + w";
  std::vector<std::string> labels;
  for (Index i = 0; i < r; ++i) labels.push_back("w" + std::to_string(i));
  side["labels"] = labels;
  sidecar = side.dump(2) + "\n";
  return out;
}

void write_tables(const ScenarioConfig& cfg, const std::string& dir) {
  std::string sidecar;
  const auto tables = build_tables(cfg, sidecar);
  const std::filesystem::path root(dir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec || !std::filesystem::is_directory(root)) throw IoError("cannot create table directory '" + dir + "'");
  const std::string stem = scenario_name(cfg.scenario);
  for (const TableFile& t : tables) write_file(root / (stem + "_" + t.kind + ".csv"), t.csv);
  write_file(root / (stem + "_tables.json"), sidecar);
}

std::string describe(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario_name(cfg.scenario);
  auto dims = [](const FiniteSpectralTriple& t, const CalculusSpaces& c) {
    nlohmann::ordered_json d;
    d["A"] = t.algebra_dim();
    d["H"] = t.hilbert_dim();
    d["Omega1"] = c.omega1.dim();
    d["Omega1_universal"] = c.universal.one_form_space.dim();
    d["ker_pi"] = c.pi_kernel.dim();
    d["junk2"] = c.junk2.dim();
    d["T2"] = c.tensor_square.dim();
    d["JT2"] = c.junk_tensors.dim();
    d["degenerate"] = t.degenerate();
    return d;
  };
  if (cfg.scenario == Scenario::Z2) {
    const auto [t, td] = build_two_point(cfg.phi, cfg.tolerances);
    j["dims"] = dims(t, junk_spaces(t));
  } else {
    const auto [t2, td] = build_two_point(cfg.phi, cfg.tolerances);
    const ProductTriple pt = build_product(make_factor1(cfg), t2, td);
    const CalculusSpaces c = junk_spaces(pt);
    j["dims"] = dims(pt.total, c);
    j["dims"]["E1"] = pt.E1.dim();
    j["dims"]["E2"] = pt.E2.dim();
    const char* names[] = {"E11", "E12", "E21", "E22"};
    const auto& blocks = c.tensor_square.block_ranges();
    for (std::size_t i = 0; i < blocks.size() && i < 4; ++i)
      j["dims"]["blocks"][names[i]] = blocks[i].second - blocks[i].first;
    j["factor1"] = {{"label", pt.factor1.label()}, {"A", pt.factor1.algebra_dim()}, {"H", pt.factor1.hilbert_dim()}};
    j["factor2"] = {{"A", pt.factor2.algebra_dim()}, {"H", pt.factor2.hilbert_dim()}};
  }
  return j.dump(2) + "\n";
}

}  // namespace nct
