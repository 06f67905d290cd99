#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nctorsion/verify.hpp"

namespace {

enum Exit { kPass = 0, kVerifyFail = 1, kConfigError = 2, kConstructionError = 3, kIoError = 4 };

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Options {
  std::string config;
  double tolerance = 0.0;
  std::string report;
  std::string tables;
  std::string checks;
};

nct::ScenarioConfig load(const Options& o) {
  nct::ScenarioConfig cfg = nct::load_config(o.config);
  if (o.tolerance != 0.0) {
    if (!(o.tolerance > 0)) throw nct::ConfigError("--tolerance must be positive");
    cfg.tolerances.compare_tol = o.tolerance;
  }
  if (!o.checks.empty()) nct::select_checks(cfg, o.checks);
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw nct::IoError("cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw nct::IoError("write failed for '" + path + "'");
}

int cmd_run(const Options& o) {
  const nct::ScenarioConfig cfg = load(o);
  const nct::VerificationReport rep = nct::run_checks(cfg);
  const std::string text = nct::report_json(rep, utc_timestamp());
  const std::string path = o.report.empty() ? cfg.output : o.report;
  if (path.empty())
    std::cout << text;
  else
    write_text(path, text);
  const std::string tables = o.tables.empty() ? cfg.table_output : o.tables;
  if (!tables.empty()) nct::write_tables(cfg, tables);
  for (const nct::CheckRecord& c : rep.checks)
    if (c.status == nct::CheckStatus::Fail)
      std::cerr << "FAIL " << c.name << ": residual " << c.max_residual << " > " << c.tolerance << "\n";
  std::cerr << "summary: " << rep.passed << " passed, " << rep.failed << " failed, " << rep.diagnostics
            << " diagnostic\n";
  return rep.overall_pass() ? kPass : kVerifyFail;
}

int cmd_tables(const Options& o) {
  const nct::ScenarioConfig cfg = load(o);
  const std::string dir = o.tables.empty() ? cfg.table_output : o.tables;
  if (dir.empty()) throw nct::ConfigError("tables: give --tables DIR or table_output in the config");
  nct::write_tables(cfg, dir);
  return kPass;
}

int cmd_describe(const Options& o) {
  const nct::ScenarioConfig cfg = load(o);
  std::cout << nct::describe(cfg);
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite spectral triples: torsion functionals and connection checks"};
  app.set_version_flag("--version", nct::kVersion);
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "scenario configuration (JSON)")->required();
    sub->add_option("--tolerance", o.tolerance, "override compare_tol");
    sub->add_option("--checks", o.checks, "comma-separated check names, or all");
  };
  CLI::App* run = app.add_subcommand("run", "run the verification suite and write a report");
  add_common(run);
  run->add_option("--report", o.report, "report path (default: config output, else stdout)");
  run->add_option("--tables", o.tables, "also write functional tables to this directory");
  CLI::App* tables = app.add_subcommand("tables", "write functional tables as CSV");
  add_common(tables);
  tables->add_option("--tables", o.tables, "output directory");
  CLI::App* desc = app.add_subcommand("describe", "print the dimensions of the calculus");
  add_common(desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (tables->parsed()) return cmd_tables(o);
    return cmd_describe(o);
  } catch (const nct::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const nct::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const nct::ConstructionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kConstructionError;
  } catch (const nct::PreconditionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kConstructionError;
  } catch (const nct::DimensionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kConstructionError;
  } catch (const nct::DomainError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kConstructionError;
  }
}
