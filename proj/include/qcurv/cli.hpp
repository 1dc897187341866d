// Job configs, instance construction, task dispatch, report files and the
// acceptance criteria behind the qcurv command line.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qcurv/invariants.hpp"

namespace qc::cli {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.9.0";

enum Exit { kPass = 0, kVerifyFail = 2, kConfigError = 3, kNumericError = 4 };

struct MetricSpec {
  std::string kind = "standard";  // standard | conformal | components
  std::string factor;             // conformal factor expression
  Convention convention = Convention::E2W;
  std::vector<std::string> components;  // upper-triangular chart components
};

struct OutputSpec {
  std::string dir = "qcurv-out";
  bool matrices = true;  // CSV for kernels and dense operators
  bool tsv = false;      // one gnuplot-ready TSV per field
  int matrix_limit = 4096;  // largest node count written as a matrix
};

struct JobConfig {
  GridSpec grid;
  MetricSpec metric;
  std::string task = "describe";  // describe | assemble | green | neumann | invariant | solve | verify
  json options = json::object();  // task options, validated per task
  OutputSpec output;
  std::uint64_t seed = 20240601;
  int threads = 0;  // 0 keeps the runtime default
};

// Throws Error{Config} naming the JSON path of the offending entry.
JobConfig parse_config(const json& j);
JobConfig load_config(const std::string& path);
json read_json_file(const std::string& path);
// every field with its effective value, task options included
json resolved_config(const JobConfig& c);

struct Instance {
  GridPtr grid;
  std::optional<MetricField> metric;  // empty on the homogeneous backend
};
Instance build_instance(const JobConfig& c);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunReport {
  json outputs = json::object();
  json grid = json::object();
  std::vector<Check> checks;
  std::vector<std::pair<std::string, Mat>> matrices;
  std::vector<std::pair<std::string, Vec>> fields;
  double seconds = 0;
  json timing = json::object();  // wall-clock per part, kept out of report.json
  bool passed() const;
};

RunReport run_job(const JobConfig& c);
// report.json, timing.json, CSV matrices and TSV fields under c.output.dir
std::vector<std::string> write_report(const RunReport& r, const JobConfig& c, const std::string& command);
json report_json(const RunReport& r, const JobConfig& c, const std::string& command);

// acceptance criteria 1..13 and the suites that group them
struct SuiteOptions {
  std::uint64_t seed = 20240601;
  std::vector<int> smoke_resolution{16, 12, 8};  // T³, T⁴, T⁵
  int spectra_degree = 12;
  std::vector<int> green_degree{12, 16};
  int kappa_resolution = 12;
  std::vector<int> covariance_t3{16, 32}, covariance_t4{12, 16}, covariance_t5{8, 12};
  int covariance_s3_degree = 12;
  int kernel_degree = 6;
  int identity_degree = 12;
  std::vector<int> identity_product{6, 8};  // S²×S¹ degrees, torus points 8 and 12
  std::vector<int> gamma_degree{8, 12};
  int gamma_t5_resolution = 4;
  int continuation_degree = 10;
  int functional_resolution = 12;
  int functional_info_resolution = 16;  // 0 skips the information run
  int nu_degree = 12, nu_family_degree = 6;
  int decomposition_degree = 8;
  int theta_resolution = 4, theta_restarts = 3, theta_max_iter = 1500;
};
SuiteOptions parse_suite_options(const json& j, const std::string& path = "suite");
json suite_options_json(const SuiteOptions& o);

struct Criterion {
  int id = 0;
  std::string title;
  bool pass = false;
  std::vector<std::string> details;
  json data = json::object();
  double seconds = 0;
};

const std::vector<std::string>& suite_names();
std::vector<int> suite_criteria(const std::string& suite);
std::string criterion_title(int id);
Criterion evaluate_criterion(int id, const SuiteOptions& o);
RunReport run_suite(const std::string& suite, const SuiteOptions& o);

}  // namespace qc::cli
