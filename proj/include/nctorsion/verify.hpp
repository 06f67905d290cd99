#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nctorsion/linalg.hpp"

namespace nct {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { Z2, Product };

struct Factor1Config {
  enum class Kind { GradedTwoPoint, CliffordTorus, User } kind = Kind::GradedTwoPoint;
  Complex z{1.0, 0.0};
  Index n = 3, d = 2;
  std::vector<Matrix> algebra;
  Matrix dirac;
  std::optional<Matrix> grading;
};

struct ScenarioConfig {
  Scenario scenario = Scenario::Z2;
  Matrix phi;
  Factor1Config factor1;
  Tolerances tolerances;
  std::vector<std::string> checks;  // resolved names, in canonical order
  std::string output;
  std::string table_output;
  std::uint64_t seed = 20240611;
  int perturbation_samples = 20;
  std::string canonical;  // normalized config text, digested into reports
};

/// Check names for a scenario, in report order.
std::vector<std::string> known_checks(Scenario s);

/// Parses JSON config text; throws ConfigError.
ScenarioConfig parse_config(const std::string& text);
/// Reads and parses a file; throws IoError or ConfigError.
ScenarioConfig load_config(const std::string& path);
/// Replaces the check list with a comma-separated selection ("all" allowed).
void select_checks(ScenarioConfig& cfg, const std::string& list);

enum class CheckStatus { Pass, Fail, Diagnostic };

struct CheckRecord {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double max_residual = 0.0;
  double tolerance = 0.0;
  std::string details;
};

struct VerificationReport {
  Scenario scenario = Scenario::Z2;
  std::vector<CheckRecord> checks;
  Tolerances tolerances;
  std::string config_digest;
  bool degenerate = false;
  int passed = 0, failed = 0, diagnostics = 0;
  bool overall_pass() const { return failed == 0; }
};

VerificationReport run_checks(const ScenarioConfig& cfg);

/// JSON text; the timestamp field is omitted when `timestamp` is empty.
std::string report_json(const VerificationReport& r, const std::string& timestamp);

struct TableFile {
  std::string kind;
  std::string csv;  // header u,v,w,re,im
};

/// Tables for the scenario plus the sidecar JSON describing basis labels.
std::vector<TableFile> build_tables(const ScenarioConfig& cfg, std::string& sidecar);
/// Writes <dir>/<scenario>_<kind>.csv and <dir>/<scenario>_tables.json; throws IoError.
void write_tables(const ScenarioConfig& cfg, const std::string& dir);

/// Dimension report as JSON text.
std::string describe(const ScenarioConfig& cfg);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

std::string scenario_name(Scenario s);

}  // namespace nct
