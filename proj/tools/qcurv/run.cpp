#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qcurv/cli.hpp"

namespace qc::cli {

namespace {

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json range_json(const Vec& v, const Vec& w) {
  return {{"min", v.minCoeff()}, {"max", v.maxCoeff()}, {"mean", weighted_sum(v, w) / pairwise_sum(w)}};
}

json grid_json(const Grid& g) {
  json out = {{"description", g.describe()},
              {"backend", backend_name(g.backend())},
              {"dimension", g.dim()},
              {"nodes", g.size()},
              {"variables", g.variable_names()}};
  if (g.backend() == Backend::Chart)
    out["node_order"] = "lexicographic in (x1, ..., xn), last axis fastest";
  else if (g.backend() == Backend::Homogeneous)
    out["node_order"] = "single node";
  else
    out["node_order"] = "quadrature order of the grid; coordinates per node are in the field TSV files";
  return out;
}

OpKind parse_op(const json& o) { return op_kind_from_name(o["operator"].get<std::string>()); }

void add_check(RunReport& r, std::string name, bool pass, std::string detail) {
  r.checks.push_back({std::move(name), pass, std::move(detail)});
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void curvature_outputs(const CurvatureBundle& b, const Vec& w, json& out) {
  out["volume"] = pairwise_sum(w);
  out["Q"] = range_json(b.Q, w);
  out["R"] = range_json(b.R, w);
  out["J"] = range_json(b.J, w);
  out["sigma2"] = range_json(b.sigma2, w);
  out["abs_A2"] = range_json(b.absA2, w);
  out["q_integral"] = weighted_sum(b.Q, w);
  if (b.n == 4) out["kappa"] = weighted_sum(b.Q, w);
  if (b.has_weyl) {
    GaussBonnet gb = weyl_gauss_bonnet(b);
    out["weyl_energy"] = gb.weyl_energy;
    out["gauss_bonnet_lhs"] = gb.cgb_lhs;
  } else if (b.n == 4) {
    out["weyl"] = "not computed";
  }
}

void task_describe(const JobConfig& c, const Instance& inst, RunReport& r) {
  if (!inst.metric) {
    CurvatureBundle b = homogeneous_catalog(c.grid.model);
    curvature_outputs(b, inst.grid->weights(), r.outputs["curvature"]);
    return;
  }
  CurvatureBundle b = curvature_from_metric(*inst.metric);
  curvature_outputs(b, inst.metric->dmu, r.outputs["curvature"]);
  if (c.options["fields"].get<bool>())
    for (const auto& [name, v] : std::vector<std::pair<std::string, const Vec*>>{
             {"Q", &b.Q}, {"J", &b.J}, {"R", &b.R}, {"sigma2", &b.sigma2}, {"dmu", &inst.metric->dmu}})
      r.fields.emplace_back(name, *v);
}

const MetricField& need_metric(const Instance& inst, const std::string& task) {
  if (!inst.metric)
    config_error("NoFields", "task '" + task + "' needs a discretized backend; the homogeneous-analytic backend has no fields");
  return *inst.metric;
}

void task_assemble(const JobConfig& c, const Instance& inst, RunReport& r) {
  const MetricField& g = need_metric(inst, c.task);
  CurvatureBundle b = curvature_from_metric(g);
  OperatorPtr op = assemble_operator(parse_op(c.options), g, b);
  const int k = std::min<int>(c.options["eigenvalues"].get<int>(), static_cast<int>(op->dofs()));
  json& o = r.outputs["operator"];
  o["kind"] = op_kind_name(op->kind());
  o["route"] = op->route();
  o["dofs"] = op->dofs();
  if (k > 0) {
    Spectrum s = spectrum(*op, k);
    o["eigenvalues"] = vec_json(s.values);
    o["multiplicity"] = s.multiplicity;
    o["eigen_method"] = s.method;
  }
  Invertibility inv = invertibility(*op);
  o["smallest_abs_eigenvalue"] = inv.smallest;
  o["largest_abs_eigenvalue"] = inv.norm;
  o["invertible"] = inv.invertible();
  // symmetry of the quadratic form on two fixed test functions
  Vec u = inst.grid->field(inst.grid->variable_names().front());
  Vec v = (u.array() * 1.7 + 0.3).sin().matrix();
  const double a = op->bilinear(u, v), bb = op->bilinear(v, u);
  const double defect = std::abs(a - bb) / std::max({std::abs(a), std::abs(bb), 1e-300});
  o["symmetry_defect"] = defect;
  add_check(r, "quadratic form is symmetric", defect <= 1e-10, fmt(defect));
  if (c.output.matrices && op->space().nodal() && op->dofs() <= c.output.matrix_limit)
    r.matrices.emplace_back("stiffness", op->stiffness_dense());
}

void task_green(const JobConfig& c, const Instance& inst, RunReport& r) {
  const MetricField& g = need_metric(inst, c.task);
  CurvatureBundle b = curvature_from_metric(g);
  OperatorPtr op = assemble_operator(parse_op(c.options), g, b);
  const Eigen::Index pivot = c.options["pivot"].get<int>();
  if (pivot < 0 || pivot >= inst.grid->size()) config_error("ConfigValue", "options.pivot: outside the grid");
  Kernel G = greens_kernel(*op);
  json& o = r.outputs["green"];
  o["operator"] = op_kind_name(op->kind());
  o["representation"] = G.dense() ? "dense" : "operator-backed";
  o["pivot"] = pivot;
  Vec col = kernel_column(G, Pivot::at_node(pivot));
  r.fields.emplace_back("green_column", col);
  Vec phi = inst.grid->field(inst.grid->variable_names().front());
  phi = (phi.array().cos() + 0.5).matrix();
  phi = op->space().project(phi);
  Vec back = op->apply(kernel_apply(G, phi));
  const double inv = max_abs(back - phi) / max_abs(phi);
  o["inverse_defect"] = inv;
  add_check(r, "operator applied to T_G phi returns phi", inv <= 1e-8, fmt(inv));
  int expected = 0;
  if (op->kind() == OpKind::ConformalLaplacian) expected = 1;
  if (op->kind() == OpKind::Paneitz && op->dim() >= 5) expected = 1;
  if (op->kind() == OpKind::Paneitz && op->dim() == 3) expected = -1;
  if (expected != 0) {
    std::vector<Eigen::Index> piv;
    if (!G.dense()) piv = pivot_sample(*inst.grid, 64);
    SignReport s = sign_scan(G, expected, piv);
    o["sign"] = {{"expected", expected},    {"min_off_diagonal", s.min_off}, {"max_off_diagonal", s.max_off},
                 {"violations", s.violations}, {"checked", s.checked}};
  }
  if (G.dense()) {
    Vec pv = pole_values(G);
    o["pole_values"] = {{"min", pv.minCoeff()}, {"max", pv.maxCoeff()}};
    o["symmetry_defect"] = kernel_symmetry_defect(G);
    if (c.output.matrices && inst.grid->size() <= c.output.matrix_limit) r.matrices.emplace_back("green", kernel_nodes(G));
  }
}

void task_neumann(const JobConfig& c, const Instance& inst, RunReport& r) {
  const MetricField& g = need_metric(inst, c.task);
  CurvatureBundle b = curvature_from_metric(g);
  DiscreteOperator L(OpKind::ConformalLaplacian, g, b), P(OpKind::Paneitz, g, b);
  HGamma hg = build_H_gamma(greens_kernel(L), P);
  RadiusReport rr = spectral_radius(hg.gamma);
  const double rs = rowsum_check(hg.H, hg.gamma, b.Q, g.n);
  json& o = r.outputs["neumann"];
  o["prefactor"] = hg.prefactor;
  o["spectral_radius"] = rr.radius;
  o["dense_radius"] = rr.dense_radius;
  o["rowsum_bound"] = rr.rowsum_bound;
  o["gamma_nonnegative"] = rr.nonnegative;
  o["rowsum_identity"] = rs;
  add_check(r, "row-sum identity", rs <= 1e-10, fmt(rs));
  const double rho = rr.dense_radius >= 0 ? rr.dense_radius : rr.radius;
  if (rho < 1) {
    NeumannResult nr = neumann_green(hg.H, hg.gamma, c.options["tol"].get<double>(), c.options["kmax"].get<int>());
    const double d = (kernel_nodes(nr.GP) - kernel_nodes(greens_kernel(P))).cwiseAbs().maxCoeff();
    o["terms"] = nr.terms;
    o["tail_bound"] = nr.tail_bound;
    o["fitted_ratio"] = nr.fitted_ratio;
    o["term_norms"] = nr.term_norms;
    o["difference_to_direct"] = d;
    if (rho < 0.95) {
      add_check(r, "Neumann sum equals the direct Green's function", d <= 1e-8, fmt(d));
      add_check(r, "fitted tail ratio matches the radius", std::abs(nr.fitted_ratio - rho) <= 0.05,
                fmt(nr.fitted_ratio) + " vs " + fmt(rho));
    }
  } else {
    o["note"] = "spectral radius >= 1: the Neumann series is not summed";
  }
}

void task_invariant(const JobConfig& c, const Instance& inst, RunReport& r) {
  InvariantOptions io;
  io.quotients = c.options["quotients"].get<bool>();
  io.theta = c.options["theta"].get<bool>();
  io.gamma_radius = c.options["gamma_radius"].get<bool>();
  io.theta_restarts = c.options["theta_restarts"].get<int>();
  io.seed = c.seed;
  MetricField g = inst.metric ? *inst.metric : MetricField{};
  if (!inst.metric) g.grid = inst.grid;
  InvariantReport ir = collect_invariants(g, io);
  json& o = r.outputs["invariants"];
  o["values"] = ir.values;
  o["flags"] = ir.flags;
  o["hypotheses"] = ir.hypotheses;
  o["labels"] = ir.labels;
  if (!ir.nu_nodes.empty()) {
    o["nu_nodes"] = ir.nu_nodes;
    o["nu"] = ir.nu_table;
  }
  o["notes"] = ir.notes;
  o["sign_constrained_classes"] = "NN+ and P+ are reported only as implied by NN and P, never certified independently";
}

json solve_json(const SolveReport& s) {
  json o = {{"converged", s.converged}, {"iterations", s.iterations}, {"residual", s.residual},
            {"value", s.value},         {"gauge", s.gauge},           {"status", s.status},
            {"scalars", s.scalars}};
  if (s.solution.size()) o["solution"] = range_json(s.solution, Vec::Ones(s.solution.size()));
  if (!s.energies.empty()) o["energies"] = s.energies;
  if (!s.path_t.empty())
    o["path"] = {{"t", s.path_t}, {"umin", s.path_umin}, {"umax", s.path_umax}, {"newton", s.path_newton},
                 {"halvings", s.halvings}};
  return o;
}

void task_solve(const JobConfig& c, const Instance& inst, RunReport& r) {
  const MetricField& g = need_metric(inst, c.task);
  CurvatureBundle b = curvature_from_metric(g);
  DiscreteOperator P(OpKind::Paneitz, g, b);
  const json& op = c.options;
  std::string solver = op["solver"].get<std::string>();
  const int n = g.n;
  if (solver == "auto") solver = n == 3 ? "continuation" : n == 4 ? "functional_ii" : "dual";
  const double tol = op["tol"].get<double>();
  QuotientOptions qo;
  qo.tol = tol;
  qo.seed = c.seed;
  qo.max_iter = op["max_iter"].get<int>();
  qo.positive_only = op["positive_only"].get<bool>();
  SolveReport s;
  if (solver == "continuation") {
    if (n != 3) config_error("WrongDimension", "continuation solves the n = 3 equation");
    Kernel K = kernel_scale_add(-1.0, greens_kernel(P), 0.0, constant_kernel(P.space_ptr(), 0.0));
    ContinuationOptions co;
    co.steps = op["steps"].get<int>();
    co.newton_tol = tol;
    s = continuation_dim3(K, P, co);
  } else if (solver == "dual") {
    if (n < 5) config_error("WrongDimension", "the dual fixed point needs n >= 5");
    s = dual_fixed_point(greens_kernel(P), n, op["damping"].get<double>(), tol, qo.max_iter, &P);
  } else if (solver == "functional_ii") {
    s = functional_II_min(P, tol);
  } else if (solver == "y4") {
    s = y4_minimize(P, qo);
  } else {
    const double beta = op["beta"].get<double>();
    s = phi_beta_minimize(P, beta, qo);
    PhiBetaCheck e = phi_beta_check(g, s.solution, beta);
    r.outputs["phi_beta_check"] = {{"residual", e.residual}, {"mean", e.mean}, {"F", e.F}};
  }
  r.outputs["solver"] = solver;
  r.outputs["solve"] = solve_json(s);
  r.fields.emplace_back("solution", s.solution);
  add_check(r, solver + " converged", s.converged, s.status);
}

}  // namespace

bool RunReport::passed() const {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

RunReport run_job(const JobConfig& c) {
  if (c.threads > 0) set_thread_count(c.threads);
  const auto t0 = std::chrono::steady_clock::now();
  RunReport r;
  if (c.task == "verify") {
    r = run_suite(c.options["suite"].get<std::string>(), parse_suite_options(c.options["settings"], "options.settings"));
  } else {
    Instance inst = build_instance(c);
    r.grid = grid_json(*inst.grid);
    try {
      if (c.task == "describe") task_describe(c, inst, r);
      else if (c.task == "assemble") task_assemble(c, inst, r);
      else if (c.task == "green") task_green(c, inst, r);
      else if (c.task == "neumann") task_neumann(c, inst, r);
      else if (c.task == "invariant") task_invariant(c, inst, r);
      else task_solve(c, inst, r);
    } catch (const Error& e) {
      throw Error(e.kind(), e.code(), "task " + c.task + ": " + e.message());
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

json report_json(const RunReport& r, const JobConfig& c, const std::string& command) {
  json checks = json::array();
  for (const Check& k : r.checks) checks.push_back({{"name", k.name}, {"pass", k.pass}, {"detail", k.detail}});
  json fields = json::object();
  for (const auto& [name, v] : r.fields) fields[name] = vec_json(v);
  json mats = json::array();
  for (const auto& [name, m] : r.matrices)
    mats.push_back({{"name", name}, {"file", name + ".csv"}, {"rows", m.rows()}, {"cols", m.cols()}});
  return {{"tool", "qcurv"},   {"version", kVersion}, {"command", command},     {"config", resolved_config(c)},
          {"grid", r.grid},    {"outputs", r.outputs}, {"fields", fields},      {"matrices", mats},
          {"checks", checks},  {"passed", r.passed()}};
}

std::vector<std::string> write_report(const RunReport& r, const JobConfig& c, const std::string& command) {
  namespace fs = std::filesystem;
  const fs::path dir(c.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) config_error("OutputDir", c.output.dir + ": " + ec.message());
  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    const fs::path p = dir / name;
    std::ofstream f(p);
    if (!f) config_error("OutputDir", p.string() + ": cannot write");
    written.push_back(p.string());
    return f;
  };
  {
    std::ofstream f = open("report.json");
    f << report_json(r, c, command).dump(2) << "\n";
  }
  {
    std::ofstream f = open("timing.json");
    f << json{{"wall_seconds", r.seconds}, {"threads", thread_count()}, {"parts", r.timing}}.dump(2) << "\n";
  }
  char buf[32];
  if (c.output.matrices)
    for (const auto& [name, m] : r.matrices) {
      std::ofstream f = open(name + ".csv");
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
          f << (j ? "," : "") << buf;
        }
        f << "\n";
      }
    }
  if (c.output.tsv && c.task != "verify") {
    GridPtr grid = build_grid(c.grid);
    const auto names = grid->variable_names();
    for (const auto& [name, v] : r.fields) {
      std::ofstream f = open(name + ".tsv");
      f << "# node";
      for (const auto& n : names) f << "\t" << n;
      f << "\t" << name << "\n";
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        f << i;
        for (const auto& n : names) {
          std::snprintf(buf, sizeof buf, "%.17g", (*grid->variable(n))[i]);
          f << "\t" << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        f << "\t" << buf << "\n";
      }
    }
  }
  return written;
}

}  // namespace qc::cli
