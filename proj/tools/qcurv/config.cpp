#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qcurv/cli.hpp"

namespace qc::cli {

namespace {

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) config_error("ConfigType", path + ": expected an object");
}

void allow_keys(const json& j, const std::string& path, const std::vector<std::string>& keys) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      config_error("UnknownKey", at(path, it.key()) + ": unknown key");
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) config_error("ConfigType", path + ": expected an integer");
  return v.get<int>();
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) config_error("ConfigType", path + ": expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) config_error("ConfigType", path + ": expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) config_error("ConfigType", path + ": expected true or false");
  return v.get<bool>();
}

// a scalar is repeated `count` times
std::vector<int> int_list(const json& v, const std::string& path, int count) {
  if (v.is_array()) {
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_int(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  return std::vector<int>(std::max(count, 0), as_int(v, path));
}

std::vector<double> number_list(const json& v, const std::string& path, int count) {
  if (v.is_array()) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  return std::vector<double>(std::max(count, 0), as_number(v, path));
}

const std::vector<std::pair<HomogeneousModel::Kind, std::string>> kModels = {
    {HomogeneousModel::Kind::RoundSphere, "round-sphere"},
    {HomogeneousModel::Kind::Berger, "berger"},
    {HomogeneousModel::Kind::ProductS2Tk, "product-s2-tk"},
    {HomogeneousModel::Kind::ProductS2S1, "product-s2-s1"}};

std::string model_name(HomogeneousModel::Kind k) {
  for (const auto& [kind, name] : kModels)
    if (kind == k) return name;
  return "?";
}

HomogeneousModel parse_model(const json& j, const std::string& path) {
  allow_keys(j, path, {"kind", "n", "r", "lambda", "L", "periods"});
  HomogeneousModel m;
  if (!j.contains("kind")) config_error("MissingKey", at(path, "kind") + ": required");
  const std::string k = as_string(j["kind"], at(path, "kind"));
  auto it = std::find_if(kModels.begin(), kModels.end(), [&](const auto& p) { return p.second == k; });
  if (it == kModels.end()) config_error("UnknownModel", at(path, "kind") + ": unknown model '" + k + "'");
  m.kind = it->first;
  if (j.contains("n")) m.n = as_int(j["n"], at(path, "n"));
  if (j.contains("r")) m.r = as_number(j["r"], at(path, "r"));
  if (j.contains("lambda")) m.lambda = as_number(j["lambda"], at(path, "lambda"));
  if (j.contains("L")) m.L = as_number(j["L"], at(path, "L"));
  if (j.contains("periods")) m.periods = number_list(j["periods"], at(path, "periods"), 0);
  if (m.kind == HomogeneousModel::Kind::ProductS2Tk && m.periods.empty())
    m.periods.assign(std::max(m.n - 2, 0), 2 * std::numbers::pi);
  return m;
}

GridSpec parse_manifold(const json& j) {
  const std::string path = "manifold";
  allow_keys(j, path, {"backend", "dimension", "resolution", "period", "scheme", "degree", "radius", "model"});
  GridSpec g;
  if (!j.contains("backend")) config_error("MissingKey", "manifold.backend: required");
  g.backend = backend_from_name(as_string(j["backend"], "manifold.backend"));
  if (g.backend == Backend::Homogeneous) {
    for (const char* k : {"resolution", "period", "scheme", "degree", "radius"})
      if (j.contains(k)) config_error("UnknownKey", at(path, k) + ": not used by the homogeneous-analytic backend");
    if (!j.contains("model")) config_error("MissingKey", "manifold.model: required by the homogeneous-analytic backend");
    g.model = parse_model(j["model"], "manifold.model");
    g.dim = g.model.n;
    if (j.contains("dimension") && as_int(j["dimension"], "manifold.dimension") != g.dim)
      config_error("ConfigValue", "manifold.dimension: does not match manifold.model.n");
    return g;
  }
  if (j.contains("model")) config_error("UnknownKey", "manifold.model: only the homogeneous-analytic backend takes a model");
  if (g.backend == Backend::Sphere3) g.dim = 3;
  if (g.backend == Backend::Sphere2) g.dim = 2;
  if (j.contains("dimension")) g.dim = as_int(j["dimension"], "manifold.dimension");
  int axes = 0;
  if (g.backend == Backend::Chart) axes = g.dim;
  if (g.backend == Backend::Product) axes = g.dim - 2;
  if (j.contains("resolution")) g.resolution = int_list(j["resolution"], "manifold.resolution", axes);
  if (g.backend == Backend::Chart && g.resolution.empty()) config_error("MissingKey", "manifold.resolution: required");
  g.period.assign(g.resolution.size(), 2 * std::numbers::pi);
  if (j.contains("period")) g.period = number_list(j["period"], "manifold.period", static_cast<int>(g.resolution.size()));
  if (j.contains("scheme")) {
    const std::string s = as_string(j["scheme"], "manifold.scheme");
    if (s == "fd4") g.scheme = DiffScheme::FD4;
    else if (s == "fourier") g.scheme = DiffScheme::Fourier;
    else config_error("ConfigValue", "manifold.scheme: expected 'fd4' or 'fourier'");
  }
  if (j.contains("degree")) g.degree = as_int(j["degree"], "manifold.degree");
  if (j.contains("radius")) g.radius = as_number(j["radius"], "manifold.radius");
  if (g.backend != Backend::Chart && !j.contains("degree")) config_error("MissingKey", "manifold.degree: required");
  return g;
}

MetricSpec parse_metric(const json& j) {
  const std::string path = "metric";
  allow_keys(j, path, {"kind", "factor", "convention", "components"});
  MetricSpec m;
  if (j.contains("kind")) m.kind = as_string(j["kind"], "metric.kind");
  if (m.kind == "standard") {
    for (const char* k : {"factor", "convention", "components"})
      if (j.contains(k)) config_error("UnknownKey", at(path, k) + ": not used by a standard metric");
  } else if (m.kind == "conformal") {
    if (!j.contains("factor")) config_error("MissingKey", "metric.factor: required");
    m.factor = as_string(j["factor"], "metric.factor");
    try {
      parse_expr(m.factor);
    } catch (const Error& e) {
      config_error(e.code(), std::string("metric.factor: ") + e.message());
    }
    if (j.contains("convention")) m.convention = convention_from_name(as_string(j["convention"], "metric.convention"));
    if (j.contains("components")) config_error("UnknownKey", "metric.components: not used by a conformal metric");
  } else if (m.kind == "components") {
    if (!j.contains("components") || !j["components"].is_array())
      config_error("MissingKey", "metric.components: required array of expressions");
    for (std::size_t i = 0; i < j["components"].size(); ++i) {
      m.components.push_back(as_string(j["components"][i], "metric.components[" + std::to_string(i) + "]"));
      try {
        parse_expr(m.components.back());
      } catch (const Error& e) {
        config_error(e.code(), "metric.components[" + std::to_string(i) + "]: " + e.message());
      }
    }
    for (const char* k : {"factor", "convention"})
      if (j.contains(k)) config_error("UnknownKey", at(path, k) + ": not used by a component metric");
  } else {
    config_error("ConfigValue", "metric.kind: expected 'standard', 'conformal' or 'components'");
  }
  return m;
}

const std::vector<std::string> kTasks = {"describe", "assemble", "green", "neumann", "invariant", "solve", "verify"};

json task_defaults(const std::string& task) {
  if (task == "describe") return {{"fields", true}};
  if (task == "assemble") return {{"operator", "paneitz"}, {"eigenvalues", 6}};
  if (task == "green") return {{"operator", "paneitz"}, {"pivot", 0}};
  if (task == "neumann") return {{"tol", 1e-10}, {"kmax", 200}};
  if (task == "invariant")
    return {{"quotients", true}, {"theta", true}, {"gamma_radius", true}, {"theta_restarts", 20}};
  if (task == "solve")
    return {{"solver", "auto"}, {"tol", 1e-10},       {"steps", 20},        {"damping", 0.5},
            {"beta", -1.0 / 6}, {"max_iter", 2000}, {"positive_only", false}};
  if (task == "verify") return {{"suite", "smoke"}, {"settings", json::object()}};
  config_error("UnknownTask", "task: unknown task '" + task + "'");
}

// user values over defaults; keys and value types must match the defaults
json merge_options(const std::string& task, const json& user) {
  json out = task_defaults(task);
  if (user.is_null()) return out;
  require_object(user, "options");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string p = "options." + it.key();
    if (!out.contains(it.key())) config_error("UnknownKey", p + ": unknown option for task '" + task + "'");
    const json& d = out[it.key()];
    const json& v = it.value();
    if (d.is_boolean()) as_bool(v, p);
    else if (d.is_number_integer()) as_int(v, p);
    else if (d.is_number()) as_number(v, p);
    else if (d.is_string()) as_string(v, p);
    else if (d.is_object()) require_object(v, p);
    out[it.key()] = v;
  }
  if (task == "verify") {
    const std::string s = out["suite"].get<std::string>();
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), s) == names.end())
      config_error("UnknownSuite", "options.suite: unknown suite '" + s + "'");
    out["settings"] = suite_options_json(parse_suite_options(out["settings"], "options.settings"));
  }
  if (task == "solve") {
    const std::string s = out["solver"].get<std::string>();
    for (const char* k : {"auto", "continuation", "dual", "functional_ii", "y4", "phi_beta"})
      if (s == k) return out;
    config_error("ConfigValue", "options.solver: unknown solver '" + s + "'");
  }
  if (task == "assemble" || task == "green") op_kind_from_name(out["operator"].get<std::string>());
  return out;
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("ConfigRead", path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    config_error("ConfigSyntax", path + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

JobConfig parse_config(const json& j) {
  allow_keys(j, "", {"manifold", "metric", "task", "options", "output", "seed", "threads"});
  JobConfig c;
  if (j.contains("task")) c.task = as_string(j["task"], "task");
  if (c.task == "verify") {
    if (j.contains("manifold") || j.contains("metric"))
      config_error("UnknownKey", "manifold: the verify task builds its own instances");
  } else {
    if (!j.contains("manifold")) config_error("MissingKey", "manifold: required");
    c.grid = parse_manifold(j["manifold"]);
  }
  if (j.contains("metric")) c.metric = parse_metric(j["metric"]);
  if (c.grid.backend == Backend::Homogeneous && c.metric.kind != "standard")
    config_error("ConfigValue", "metric.kind: the homogeneous-analytic backend carries its model metric only");
  if (c.metric.kind == "components" && c.grid.backend != Backend::Chart)
    config_error("ConfigValue", "metric.kind: component metrics need the periodic-chart backend");
  if (std::find(kTasks.begin(), kTasks.end(), c.task) == kTasks.end())
    config_error("UnknownTask", "task: unknown task '" + c.task + "'");
  c.options = merge_options(c.task, j.contains("options") ? j["options"] : json());
  if (j.contains("output")) {
    const json& o = j["output"];
    allow_keys(o, "output", {"dir", "matrices", "tsv", "matrix_limit"});
    if (o.contains("dir")) c.output.dir = as_string(o["dir"], "output.dir");
    if (o.contains("matrices")) c.output.matrices = as_bool(o["matrices"], "output.matrices");
    if (o.contains("tsv")) c.output.tsv = as_bool(o["tsv"], "output.tsv");
    if (o.contains("matrix_limit")) c.output.matrix_limit = as_int(o["matrix_limit"], "output.matrix_limit");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) config_error("ConfigType", "seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (c.task == "verify") {
    const bool own = j.contains("options") && j["options"].contains("settings") &&
                     j["options"]["settings"].contains("seed");
    if (!own) c.options["settings"]["seed"] = c.seed;
  }
  if (j.contains("threads")) c.threads = as_int(j["threads"], "threads");
  if (c.threads < 0) config_error("ConfigValue", "threads: must be non-negative");
  return c;
}

JobConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

json resolved_config(const JobConfig& c) {
  if (c.task == "verify")
    return {{"task", c.task},
            {"options", c.options},
            {"output",
             {{"dir", c.output.dir},
              {"matrices", c.output.matrices},
              {"tsv", c.output.tsv},
              {"matrix_limit", c.output.matrix_limit}}},
            {"seed", c.seed},
            {"threads", c.threads}};
  json m;
  m["backend"] = backend_name(c.grid.backend);
  m["dimension"] = c.grid.dim;
  if (c.grid.backend == Backend::Homogeneous) {
    const HomogeneousModel& h = c.grid.model;
    m["model"] = {{"kind", model_name(h.kind)}, {"n", h.n}, {"r", h.r}, {"lambda", h.lambda}, {"L", h.L},
                  {"periods", h.periods}};
  } else {
    m["resolution"] = c.grid.resolution;
    m["period"] = c.grid.period;
    if (c.grid.backend == Backend::Chart) m["scheme"] = c.grid.scheme == DiffScheme::FD4 ? "fd4" : "fourier";
    else m["degree"] = c.grid.degree, m["radius"] = c.grid.radius;
  }
  json g = {{"kind", c.metric.kind}};
  if (c.metric.kind == "conformal") {
    g["factor"] = print_expr(parse_expr(c.metric.factor));
    g["convention"] = convention_name(c.metric.convention);
  }
  if (c.metric.kind == "components") {
    json comps = json::array();
    for (const auto& e : c.metric.components) comps.push_back(print_expr(parse_expr(e)));
    g["components"] = comps;
  }
  return {{"manifold", m},
          {"metric", g},
          {"task", c.task},
          {"options", c.options},
          {"output",
           {{"dir", c.output.dir},
            {"matrices", c.output.matrices},
            {"tsv", c.output.tsv},
            {"matrix_limit", c.output.matrix_limit}}},
          {"seed", c.seed},
          {"threads", c.threads}};
}

namespace {

std::vector<int> opt_list(const json& v, const std::string& path, std::size_t len) {
  if (!v.is_array() || v.size() != len)
    config_error("ConfigType", path + ": expected an array of " + std::to_string(len) + " integers");
  return int_list(v, path, 0);
}

}  // namespace

SuiteOptions parse_suite_options(const json& j, const std::string& path) {
  SuiteOptions o;
  if (j.is_null()) return o;
  const json defaults = suite_options_json(o);
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!defaults.contains(it.key())) config_error("UnknownKey", at(path, it.key()) + ": unknown suite setting");
  auto get_int = [&](const char* k, int& dst) {
    if (j.contains(k)) dst = as_int(j[k], at(path, k));
  };
  auto get_list = [&](const char* k, std::vector<int>& dst) {
    if (j.contains(k)) dst = opt_list(j[k], at(path, k), dst.size());
  };
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) config_error("ConfigType", at(path, "seed") + ": expected a non-negative integer");
    o.seed = j["seed"].get<std::uint64_t>();
  }
  get_list("smoke_resolution", o.smoke_resolution);
  get_int("spectra_degree", o.spectra_degree);
  get_list("green_degree", o.green_degree);
  get_int("kappa_resolution", o.kappa_resolution);
  get_list("covariance_t3", o.covariance_t3);
  get_list("covariance_t4", o.covariance_t4);
  get_list("covariance_t5", o.covariance_t5);
  get_int("covariance_s3_degree", o.covariance_s3_degree);
  get_int("kernel_degree", o.kernel_degree);
  get_int("identity_degree", o.identity_degree);
  get_list("identity_product", o.identity_product);
  get_list("gamma_degree", o.gamma_degree);
  get_int("gamma_t5_resolution", o.gamma_t5_resolution);
  get_int("continuation_degree", o.continuation_degree);
  get_int("functional_resolution", o.functional_resolution);
  get_int("functional_info_resolution", o.functional_info_resolution);
  get_int("nu_degree", o.nu_degree);
  get_int("nu_family_degree", o.nu_family_degree);
  get_int("decomposition_degree", o.decomposition_degree);
  get_int("theta_resolution", o.theta_resolution);
  get_int("theta_restarts", o.theta_restarts);
  get_int("theta_max_iter", o.theta_max_iter);
  return o;
}

json suite_options_json(const SuiteOptions& o) {
  return {{"seed", o.seed},
          {"smoke_resolution", o.smoke_resolution},
          {"spectra_degree", o.spectra_degree},
          {"green_degree", o.green_degree},
          {"kappa_resolution", o.kappa_resolution},
          {"covariance_t3", o.covariance_t3},
          {"covariance_t4", o.covariance_t4},
          {"covariance_t5", o.covariance_t5},
          {"covariance_s3_degree", o.covariance_s3_degree},
          {"kernel_degree", o.kernel_degree},
          {"identity_degree", o.identity_degree},
          {"identity_product", o.identity_product},
          {"gamma_degree", o.gamma_degree},
          {"gamma_t5_resolution", o.gamma_t5_resolution},
          {"continuation_degree", o.continuation_degree},
          {"functional_resolution", o.functional_resolution},
          {"functional_info_resolution", o.functional_info_resolution},
          {"nu_degree", o.nu_degree},
          {"nu_family_degree", o.nu_family_degree},
          {"decomposition_degree", o.decomposition_degree},
          {"theta_resolution", o.theta_resolution},
          {"theta_restarts", o.theta_restarts},
          {"theta_max_iter", o.theta_max_iter}};
}

}  // namespace qc::cli
