#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcurv/cli.hpp"

using namespace qc;
using namespace qc::cli;

namespace {

json round_s3() {
  return json::parse(R"j({"manifold": {"backend": "homogeneous-analytic", "model": {"kind": "round-sphere", "n": 3}}})j");
}

json chart_t3(const std::string& task) {
  json j = json::parse(R"j({"manifold": {"backend": "periodic-chart", "dimension": 3, "resolution": 8},
                           "metric": {"kind": "conformal", "factor": "0.1*sin(x1)"}})j");
  j["task"] = task;
  return j;
}

std::string code_of(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config defaults and echo") {
  JobConfig c = parse_config(chart_t3("green"));
  CHECK(c.grid.resolution == std::vector<int>{8, 8, 8});
  CHECK(c.options["operator"] == "paneitz");
  json r = resolved_config(c);
  CHECK(r["manifold"]["scheme"] == "fd4");
  CHECK(r["metric"]["convention"] == "e2w");
  CHECK(r["seed"] == 20240601);
  // the echoed config parses back to itself
  CHECK(resolved_config(parse_config(r)) == r);
}

TEST_CASE("config rejects unknown keys and bad values") {
  json j = chart_t3("describe");
  j["colour"] = 1;
  CHECK(code_of(j) == "UnknownKey");
  j = chart_t3("describe");
  j["manifold"]["schem"] = "fd4";
  CHECK(code_of(j) == "UnknownKey");
  j = chart_t3("green");
  j["options"] = {{"pivot", "north"}};
  CHECK(code_of(j) == "ConfigType");
  j = chart_t3("green");
  j["options"] = {{"operatr", "paneitz"}};
  CHECK(code_of(j) == "UnknownKey");
  j = chart_t3("frobnicate");
  CHECK(code_of(j) == "UnknownTask");
  j = chart_t3("describe");
  j["metric"]["factor"] = "0.1*sin(x1";
  CHECK(code_of(j) == "ExprSyntax");
  j = chart_t3("describe");
  j["manifold"].erase("resolution");
  CHECK(code_of(j) == "MissingKey");
  j = json::parse(R"j({"task": "verify", "options": {"settings": {"spectra_degre": 4}}})j");
  CHECK(code_of(j) == "UnknownKey");
}

TEST_CASE("verify configs carry the job seed into the suite settings") {
  JobConfig c = parse_config(json::parse(R"j({"task": "verify", "seed": 7})j"));
  CHECK(c.options["settings"]["seed"] == 7);
  CHECK(parse_suite_options(c.options["settings"]).seed == 7);
  CHECK(suite_criteria("identities") == std::vector<int>{2, 3, 6, 7, 13});
  CHECK_THROWS_AS(suite_criteria("everything"), Error);
}

TEST_CASE("describe on the round sphere") {
  JobConfig c = parse_config(round_s3());
  RunReport r = run_job(c);
  const json& q = r.outputs["curvature"]["Q"];
  CHECK(q["min"].get<double>() == doctest::Approx(15.0 / 8).epsilon(1e-15));
  CHECK(q["max"].get<double>() == doctest::Approx(15.0 / 8).epsilon(1e-15));
  CHECK(r.passed());
}

TEST_CASE("reports are reproducible and matrices are row-major CSV") {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "qcurv-test-cli";
  fs::remove_all(base);
  std::string report[2], csv[2];
  for (int i = 0; i < 2; ++i) {
    json j = chart_t3("green");
    j["output"] = {{"dir", (base / std::to_string(i)).string()}, {"tsv", true}};
    JobConfig c = parse_config(j);
    RunReport r = run_job(c);
    CHECK(r.passed());
    write_report(r, c, "run");
    json rep = json::parse(slurp(base / std::to_string(i) / "report.json"));
    rep["config"]["output"].erase("dir");
    report[i] = rep.dump();
    csv[i] = slurp(base / std::to_string(i) / "green.csv");
  }
  CHECK(report[0] == report[1]);
  CHECK(csv[0] == csv[1]);
  std::istringstream rows(csv[0]);
  std::string line;
  int n = 0;
  while (std::getline(rows, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 511);
    ++n;
  }
  CHECK(n == 512);
  CHECK(fs::exists(base / "0" / "green_column.tsv"));
  fs::remove_all(base);
}

TEST_CASE("smoke criterion") {
  Criterion c = evaluate_criterion(1, SuiteOptions{});
  CHECK(c.pass);
  CHECK(c.details.size() == 4);
}
