#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "nctorsion/verify.hpp"

using namespace nct;
namespace fs = std::filesystem;

namespace {

const std::string kZ2 = R"({"scenario": "z2", "phi": [[[2, 0]]], "checks": "all", "seed": 7})";

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "nctorsion-test";
  fs::create_directories(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NCT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const ScenarioConfig cfg = parse_config(kZ2);
  CHECK(cfg.scenario == Scenario::Z2);
  CHECK(cfg.phi.rows() == 1);
  CHECK(cfg.phi(0, 0) == Complex(2.0, 0.0));
  CHECK(cfg.seed == 7);
  CHECK(cfg.checks == known_checks(Scenario::Z2));

  const ScenarioConfig p = parse_config(
      R"({"scenario": "product", "phi": [[1, [0, 1]]], "factor1": {"type": "graded_two_point", "z": 0.5}})");
  CHECK(p.scenario == Scenario::Product);
  CHECK(p.phi(0, 1) == Complex(0.0, 1.0));
  CHECK(p.factor1.z == Complex(0.5, 0.0));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": "z2"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": "z3", "phi": [[1]]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": "z2", "phi": [[1]], "colour": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": "z2", "phi": [[1], [1, 2]]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": "z2", "phi": [["a"]]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": "z2", "phi": [[1]], "checks": ["nope"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": "z2", "phi": [[1]], "tolerances": {"compare_tol": -1}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": "product", "phi": [[1]]})"), ConfigError);
  CHECK_THROWS_AS(load_config((scratch_dir() / "missing.json").string()), IoError);
}

TEST_CASE("check selection") {
  ScenarioConfig cfg = parse_config(kZ2);
  select_checks(cfg, "z2_spot_value,leibniz");
  REQUIRE(cfg.checks.size() == 2);
  // canonical order, not the order given
  const auto all = known_checks(Scenario::Z2);
  CHECK(std::find(all.begin(), all.end(), cfg.checks[0]) < std::find(all.begin(), all.end(), cfg.checks[1]));
  CHECK_THROWS_AS(select_checks(cfg, "leibniz,bogus"), ConfigError);
  const VerificationReport r = run_checks(cfg);
  CHECK(r.checks.size() == 2);
}

TEST_CASE("z2 report passes and is deterministic") {
  const ScenarioConfig cfg = parse_config(kZ2);
  const VerificationReport a = run_checks(cfg);
  const VerificationReport b = run_checks(cfg);
  CHECK(a.overall_pass());
  CHECK(a.failed == 0);
  const std::string ja = report_json(a, "");
  CHECK(ja == report_json(b, ""));
  CHECK(ja.find("timestamp") == std::string::npos);
  CHECK(report_json(a, "2000-01-01T00:00:00Z").find("timestamp") != std::string::npos);
  const auto j = nlohmann::json::parse(ja);
  CHECK(j["environment"]["config_digest"] == fnv1a_hex(cfg.canonical));
  CHECK(j["checks"].size() == known_checks(Scenario::Z2).size());
}

TEST_CASE("fnv1a digest") {
  // published FNV-1a 64 test vectors
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("z2 tables") {
  std::string sidecar;
  const std::vector<TableFile> tabs = build_tables(parse_config(kZ2), sidecar);
  REQUIRE_FALSE(tabs.empty());
  for (const TableFile& t : tabs) {
    std::istringstream in(t.csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "u,v,w,re,im");
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 8);
  }
  CHECK_NOTHROW((void)nlohmann::json::parse(sidecar));
}

TEST_CASE("degenerate z2 triple passes trivially") {
  const VerificationReport r = run_checks(parse_config(R"({"scenario": "z2", "phi": [[0]]})"));
  CHECK(r.degenerate);
  CHECK(r.overall_pass());
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch_dir();
  const fs::path good = write_config("good.json", kZ2);
  const fs::path bad = write_config("bad.json", R"({"scenario": "z2", "phi": [[1]], "colour": 1})");
  const fs::path odd = write_config(
      "odd.json",
      R"({"scenario": "product", "phi": [[1]], "factor1": {"type": "clifford_torus", "N": 3, "d": 3}})");
  const fs::path zero = write_config("zero.json", R"({"scenario": "z2", "phi": [[0]]})");
  const fs::path report = dir / "report.json";

  CHECK(run_cli("run --config " + good.string() + " --report " + report.string()) == 0);
  CHECK(nlohmann::json::parse(slurp(report))["summary"]["failed"] == 0);
  CHECK(run_cli("run --config " + zero.string() + " --report " + report.string()) == 0);
  CHECK(run_cli("run --config " + bad.string()) == 2);
  CHECK(run_cli("run") == 2);
  CHECK(run_cli("run --config " + good.string() + " --checks bogus") == 2);
  CHECK(run_cli("run --config " + good.string() + " --tolerance -1") == 2);
  CHECK(run_cli("run --config " + odd.string()) == 3);
  CHECK(run_cli("run --config " + (dir / "absent.json").string()) == 4);
  CHECK(run_cli("run --config " + good.string() + " --report /nonexistent-dir/r.json") == 4);
  CHECK(run_cli("tables --config " + good.string() + " --tables " + (dir / "tabs").string()) == 0);
  CHECK(fs::exists(dir / "tabs" / "z2_tables.json"));
  CHECK(run_cli("describe --config " + good.string()) == 0);
}
