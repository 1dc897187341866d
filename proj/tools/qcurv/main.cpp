#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qcurv/cli.hpp"

using namespace qc;
using namespace qc::cli;

namespace {

struct Overrides {
  int threads = -1;
  std::string out;
  long long seed = -1;
};

json with_overrides(json j, const Overrides& o) {
  if (o.threads >= 0) j["threads"] = o.threads;
  if (!o.out.empty()) j["output"]["dir"] = o.out;
  if (o.seed >= 0) {
    j["seed"] = static_cast<std::uint64_t>(o.seed);
    if (j.contains("options") && j["options"].contains("settings") && j["options"]["settings"].contains("seed"))
      j["options"]["settings"]["seed"] = static_cast<std::uint64_t>(o.seed);
  }
  return j;
}

void print_summary(const RunReport& r, const std::vector<std::string>& written) {
  if (r.outputs.contains("criteria")) {
    for (const auto& c : r.outputs["criteria"]) {
      std::printf("criterion %2d  %-4s  %s\n", c["id"].get<int>(), c["pass"].get<bool>() ? "PASS" : "FAIL",
                  c["title"].get<std::string>().c_str());
      for (const auto& d : c["details"]) std::printf("    %s\n", d.get<std::string>().c_str());
    }
  } else {
    for (const Check& c : r.checks)
      std::printf("%-4s  %s  %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  }
  for (const auto& w : written) std::printf("wrote %s\n", w.c_str());
  std::printf("%s in %.2f s\n", r.passed() ? "passed" : "FAILED", r.seconds);
}

int execute(const json& j, const std::string& command) {
  JobConfig c = parse_config(j);
  if (c.threads > 0) set_thread_count(c.threads);
  RunReport r = run_job(c);
  print_summary(r, write_report(r, c, command));
  return r.passed() ? kPass : kVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qcurv: discrete Q-curvature, Paneitz operators and conformal invariants on closed manifolds"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Overrides ov;
  app.add_option("--threads", ov.threads, "OpenMP thread count (overrides the config)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", ov.out, "output directory (overrides the config)");
  app.add_option("--seed", ov.seed, "random seed (overrides the config)")->check(CLI::NonNegativeNumber);

  std::string run_path, describe_path, suite, suite_config;
  auto* run = app.add_subcommand("run", "run the task named in a job config");
  run->add_option("config", run_path, "job config (JSON)")->required();
  auto* describe = app.add_subcommand("describe", "curvature summary of the instance in a job config");
  describe->add_option("config", describe_path, "job config (JSON)")->required();
  auto* verify = app.add_subcommand("verify", "run an acceptance suite");
  verify->add_option("suite", suite, "smoke | identities | covariance | solvers | invariants")->required();
  verify->add_option("--config", suite_config, "verify job config with suite settings and output options");
  for (auto* s : {run, describe, verify}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  std::string command = "run";
  try {
    json j;
    if (*run) {
      j = read_json_file(run_path);
    } else if (*describe) {
      command = "describe";
      j = read_json_file(describe_path);
      if (!j.is_object()) config_error("ConfigType", "config: expected an object");
      j["task"] = "describe";
      j.erase("options");
    } else {
      command = "verify";
      if (!suite_config.empty()) j = read_json_file(suite_config);
      else j = json::object();
      if (!j.is_object()) config_error("ConfigType", "config: expected an object");
      if (j.contains("task") && j["task"] != "verify") config_error("ConfigValue", "task: verify configs take task 'verify'");
      j["task"] = "verify";
      if (!j.contains("options")) j["options"] = json::object();
      if (!j["options"].is_object()) config_error("ConfigType", "options: expected an object");
      j["options"]["suite"] = suite;
    }
    return execute(with_overrides(j, ov), command);
  } catch (const Error& e) {
    std::fprintf(stderr, "qcurv %s: %s\n", command.c_str(), e.what());
    return e.kind() == ErrorKind::Config ? kConfigError : kNumericError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qcurv %s: %s\n", command.c_str(), e.what());
    return kNumericError;
  }
}
