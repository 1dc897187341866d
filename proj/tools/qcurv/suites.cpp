#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>

#include "qcurv/cli.hpp"

namespace qc::cli {

namespace {

constexpr double pi = std::numbers::pi;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string yes(bool b) { return b ? "ok" : "FAIL"; }

// measured order between resolutions a < b from errors ea, eb
double order(double ea, double eb, double a, double b) { return std::log(ea / eb) / std::log(b / a); }

GridSpec chart(int n, int N, DiffScheme s = DiffScheme::FD4) {
  GridSpec g;
  g.backend = Backend::Chart;
  g.dim = n;
  g.resolution.assign(n, N);
  g.period.assign(n, 2 * pi);
  g.scheme = s;
  return g;
}

GridSpec sphere3(int K) {
  GridSpec g;
  g.backend = Backend::Sphere3;
  g.dim = 3;
  g.degree = K;
  return g;
}

GridSpec product(int K, std::vector<int> N) {
  GridSpec g;
  g.backend = Backend::Product;
  g.dim = 2 + static_cast<int>(N.size());
  g.degree = K;
  g.period.assign(N.size(), 2 * pi);
  g.resolution = std::move(N);
  return g;
}

OperatorPtr build(OpKind k, const MetricField& g) { return assemble_operator(k, g, curvature_from_metric(g)); }

Vec north() {
  Vec x = Vec::Zero(4);
  x[3] = 1;
  return x;
}

MetricField perturbed_t5(int N) {
  auto g = build_grid(chart(5, N, DiffScheme::Fourier));
  std::vector<std::string> c = {"1+0.1*sin(x2)", "0", "0", "0", "0", "1+0.1*cos(x3)", "0", "0",
                                "0",             "1", "0", "0", "1", "0", "1"};
  std::vector<Vec> v;
  for (const auto& e : c) v.push_back(g->field(e));
  return metric_components(g, v);
}

MetricField curved_t3(int N) {
  auto g = build_grid(chart(3, N));
  std::vector<std::string> c = {"1 + 0.2*sin(x2)", "0.1*cos(x3)", "0", "1 + 0.1*cos(x1)", "0.05*sin(x1)",
                                "1.2 + 0.1*sin(x3)"};
  std::vector<Vec> v;
  for (const auto& e : c) v.push_back(g->field(e));
  return metric_components(g, v);
}

// first-harmonic chart test functions
std::vector<Vec> chart_tests(const Grid& g) {
  const int n = g.dim();
  const std::string tail = "sin(x" + std::to_string(n - 1) + " - x" + std::to_string(n) + ") + 0.5*cos(x2)";
  return {g.field("cos(x1 + x2) + 0.5*sin(x3)"), g.field(tail)};
}

std::vector<Vec> sphere_tests(const Grid& g) {
  return {g.field("0.3 + x1 - 0.5*x2*x3 + 0.2*x4*x4"), g.field("x2*x4 + 0.4*x1*x1*x3 - 0.1")};
}

Vec random_harmonic(const FrameGrid& fg, int kmax, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec c = Vec::Zero(fg.dofs());
  for (Eigen::Index j = 0; j < fg.dofs(); ++j)
    if (fg.basis_degree()[j] <= kmax) c[j] = nd(rng);
  c[0] += 3.0;
  return fg.synthesis(c);
}

Vec random_trig(const Grid& g, int kmax, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Vec &x = *g.variable("x1"), &y = *g.variable("x2"), &z = *g.variable("x3");
  Vec u = Vec::Constant(g.size(), 2.0);
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = -kmax; b <= kmax; ++b)
      for (int c = 0; c <= kmax; ++c) {
        Vec ph = a * x + b * y + c * z;
        u += 0.3 * nd(rng) * Vec(ph.array().cos()) + 0.3 * nd(rng) * Vec(ph.array().sin());
      }
  return u;
}

// ---------------------------------------------------------------------------

void c1_smoke(const SuiteOptions& o, Criterion& c) {
  const auto t0 = Clock::now();
  bool ok = true;
  for (int i = 0; i < 3; ++i) {
    const int n = 3 + i, N = o.smoke_resolution[i];
    auto g = build_grid(chart(n, N));
    MetricField mg = metric_standard(g);
    CurvatureBundle b = curvature_from_metric(mg);
    DiscreteOperator P(OpKind::Paneitz, mg, b);
    const auto& cg = static_cast<const ChartGrid&>(*g);
    auto lap = [&](const Vec& x) {
      Vec out = Vec::Zero(x.size());
      for (int a = 0; a < n; ++a) out += cg.diff(x, a, 2);
      return out;
    };
    const double q = max_abs(b.Q);
    const double d = operator_distance(P, [&](const Vec& x) { return lap(lap(x)); });
    const bool pass = q <= 1e-10 && d <= 1e-10;
    ok = ok && pass;
    const std::string name = "T" + std::to_string(n) + " " + std::to_string(N) + "^" + std::to_string(n);
    c.details.push_back(name + ": max|Q| " + fmt(q) + ", |P - bilaplacian| " + fmt(d) + " " + yes(pass));
    c.data[name] = {{"max_abs_Q", q}, {"operator_distance", d}};
  }
  const double t = since(t0);
  c.details.push_back("runtime " + fmt(t) + " s (limit 30 s) " + yes(t < 30));
  c.pass = ok && t < 30;
}

void c2_spectra(const SuiteOptions& o, Criterion& c) {
  const auto t0 = Clock::now();
  auto s3 = build_grid(sphere3(o.spectra_degree));
  auto P = build(OpKind::Paneitz, metric_standard(s3));
  std::vector<double> expect;
  for (int k = 0; k <= 6; ++k) {
    const double X = k * (k + 2.0);
    for (int i = 0; i < (k + 1) * (k + 1); ++i) expect.push_back((X - 1.25) * (X + 0.75));
  }
  Spectrum sp = spectrum(*P, static_cast<int>(expect.size()));
  double worst = 0;
  for (std::size_t i = 0; i < expect.size(); ++i)
    worst = std::max(worst, std::abs(sp.values[i] - expect[i]) / std::abs(expect[i]));
  const double t = since(t0);
  c.data = {{"degree", o.spectra_degree}, {"eigenvalues", expect.size()}, {"max_relative_error", worst}};
  c.details.push_back("degree " + std::to_string(o.spectra_degree) + ", " + std::to_string(expect.size()) +
                      " eigenvalues (k <= 6): max relative error " + fmt(worst) + " " + yes(worst <= 1e-9));
  c.details.push_back("runtime " + fmt(t) + " s (limit 60 s) " + yes(t < 60));
  c.pass = worst <= 1e-9 && t < 60;
}

void c3_green(const SuiteOptions& o, Criterion& c) {
  std::vector<double> err, pole;
  for (int K : o.green_degree) {
    auto s3 = build_grid(sphere3(K));
    auto P = build(OpKind::Paneitz, metric_standard(s3));
    Kernel G = greens_kernel(*P);
    Vec col = kernel_column(G, Pivot::at_point(north()));
    Vec gam = s3->field("theta");
    double e = 0;
    for (Eigen::Index j = 0; j < col.size(); ++j) {
      if (gam[j] < 0.3) continue;
      const double ref = -std::sin(gam[j] / 2) / (4 * pi);
      e = std::max(e, std::abs(col[j] - ref) / std::abs(ref));
    }
    err.push_back(e);
    pole.push_back(kernel_value(G, Pivot::at_point(north()), Pivot::at_point(north())));
    c.details.push_back("degree " + std::to_string(K) + ": max relative error for gamma >= 0.3 " + fmt(e) +
                        ", pole value " + fmt(pole.back()));
  }
  const bool golden = err[0] <= 1e-3, improving = err[1] < err[0], at_pole = std::abs(pole[0]) <= 2e-3;
  c.details.push_back("error <= 1e-3 at degree " + std::to_string(o.green_degree[0]) + " " + yes(golden));
  c.details.push_back("improving at degree " + std::to_string(o.green_degree[1]) + " " + yes(improving));
  c.details.push_back("|G_P(N,N)| <= 2e-3 " + yes(at_pole));
  c.data = {{"degrees", o.green_degree}, {"relative_error", err}, {"pole_value", pole}, {"gamma_min", 0.3}};
  c.pass = golden && improving && at_pole;
}

void c4_kappa(const SuiteOptions& o, Criterion& c) {
  GridSpec s4;
  s4.backend = Backend::Homogeneous;
  s4.dim = 4;
  s4.model.kind = HomogeneousModel::Kind::RoundSphere;
  s4.model.n = 4;
  auto pg = build_grid(s4);
  const double k4 = kappa_invariant(homogeneous_catalog(s4.model), *pg);
  const double e4 = std::abs(k4 - 16 * pi * pi) / (16 * pi * pi);
  bool ok = e4 <= 1e-14;
  c.details.push_back("round S4: kappa " + fmt(k4) + ", relative deviation from 16 pi^2 " + fmt(e4) + " " + yes(ok));
  auto g = build_grid(chart(4, o.kappa_resolution, DiffScheme::Fourier));
  json tori = json::array();
  for (std::string w : {"0.2*sin(x1)*sin(x2)", "0.1*cos(x1+x3) - 0.05*sin(x4)", "0.15*cos(x2)*cos(x3)*sin(x4)"}) {
    const double k = kappa_invariant(curvature_from_metric(metric_conformal(g, g->field(w))), *g);
    const bool p = std::abs(k) <= 1e-8;
    ok = ok && p;
    c.details.push_back("T4 " + std::to_string(o.kappa_resolution) + "^4, w = " + w + ": kappa " + fmt(k) + " " + yes(p));
    tori.push_back({{"w", w}, {"kappa", k}});
  }
  c.data = {{"s4_kappa", k4}, {"tori", tori}};
  c.pass = ok;
}

void c5_covariance(const SuiteOptions& o, Criterion& c) {
  bool ok = true;
  auto two = [&](const std::string& name, const std::vector<int>& res, const std::function<std::vector<double>(int)>& run,
                 const std::vector<std::string>& labels) {
    std::vector<std::vector<double>> r;
    for (int N : res) r.push_back(run(N));
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const double p = order(r[0][k], r[1][k], res[0], res[1]);
      const bool pass = p >= 3;
      ok = ok && pass;
      c.details.push_back(name + " " + labels[k] + ": " + fmt(r[0][k]) + " (" + std::to_string(res[0]) + ") -> " +
                          fmt(r[1][k]) + " (" + std::to_string(res[1]) + "), order " + fmt(p) + " " + yes(pass));
      c.data[name + " " + labels[k]] = {{"resolutions", res}, {"residuals", {r[0][k], r[1][k]}}, {"order", p}};
    }
  };
  two("T5 P", o.covariance_t5, [](int N) {
    auto g = build_grid(chart(5, N));
    auto P = build(OpKind::Paneitz, metric_standard(g));
    return std::vector<double>{
        covariance_residual(*P, g->field("1 + 0.05*sin(x1)"), Convention::RhoN4, chart_tests(*g)).residual};
  }, {"covariance"});
  two("T4", o.covariance_t4, [](int N) {
    auto g = build_grid(chart(4, N));
    MetricField mg = metric_standard(g);
    auto P = build(OpKind::Paneitz, mg);
    Vec w = g->field("0.1*sin(x1) + 0.05*cos(x2 - x4)");
    const double rp = covariance_residual(*P, w, Convention::E2W, chart_tests(*g)).residual;
    Vec q1 = q_from_transformation(*P, w, Convention::E2W);
    CurvatureBundle b2 = curvature_from_metric(conformal_deform(mg, w, Convention::E2W));
    return std::vector<double>{rp, max_abs(q1 - b2.Q) / max_abs(b2.Q)};
  }, {"P covariance", "Q transformation"});
  two("T3 P", o.covariance_t3, [](int N) {
    auto g = build_grid(chart(3, N));
    auto P = build(OpKind::Paneitz, metric_standard(g));
    return std::vector<double>{
        covariance_residual(*P, g->field("1 + 0.2*sin(x1)"), Convention::RhoN4, chart_tests(*g)).residual};
  }, {"covariance"});
  auto s3 = build_grid(sphere3(o.covariance_s3_degree));
  auto P3 = build(OpKind::Paneitz, metric_standard(s3));
  const double r3 =
      covariance_residual(*P3, s3->field("1 + 0.1*cos(theta)"), Convention::RhoNeg4, sphere_tests(*s3)).residual;
  const bool p3 = r3 <= 1e-6;
  ok = ok && p3;
  c.details.push_back("S3 degree " + std::to_string(o.covariance_s3_degree) + " P covariance " + fmt(r3) + " " + yes(p3));
  c.data["S3 P covariance"] = r3;
  c.pass = ok;
}

void c6_kernel_algebra(const SuiteOptions& o, Criterion& c) {
  bool rows_ok = true, neumann_ok = true;
  int exercised = 0;
  json inst = json::array();
  auto check = [&](const std::string& name, const MetricField& mg) {
    CurvatureBundle b = curvature_from_metric(mg);
    DiscreteOperator L(OpKind::ConformalLaplacian, mg, b), P(OpKind::Paneitz, mg, b);
    HGamma hg = build_H_gamma(greens_kernel(L), P);
    const double rs = rowsum_check(hg.H, hg.gamma, b.Q, mg.n);
    RadiusReport rr = spectral_radius(hg.gamma);
    const double rho = rr.dense_radius >= 0 ? rr.dense_radius : rr.radius;
    rows_ok = rows_ok && rs <= 1e-10;
    std::string line = name + ": row sums " + fmt(rs) + " " + yes(rs <= 1e-10) + ", rho(T_Gamma1) " + fmt(rho);
    json d = {{"instance", name}, {"rowsum", rs}, {"radius", rho}};
    if (rho < 0.95) {
      ++exercised;
      NeumannResult nr = neumann_green(hg.H, hg.gamma, 1e-12, 2000);
      const double diff = (kernel_nodes(nr.GP) - kernel_nodes(greens_kernel(P))).cwiseAbs().maxCoeff();
      const bool p = diff <= 1e-8 && std::abs(nr.fitted_ratio - rho) <= 0.05;
      neumann_ok = neumann_ok && p;
      line += ", Neumann difference " + fmt(diff) + ", fitted ratio " + fmt(nr.fitted_ratio) + " " + yes(p);
      d["neumann_difference"] = diff;
      d["fitted_ratio"] = nr.fitted_ratio;
    } else {
      line += " >= 0.95: Neumann clause not exercised";
    }
    c.details.push_back(line);
    inst.push_back(d);
  };
  auto s3 = build_grid(sphere3(o.kernel_degree));
  check("round S3", metric_standard(s3));
  check("conformal S3", metric_conformal(s3, s3->field("0.1*x1 + 0.05*x2*x3")));
  auto p = build_grid(product(std::max(o.kernel_degree - 2, 2), {5}));
  check("S2xS1", metric_standard(p));

  // information: H = G_P + eps with a known radius exercises the series itself
  auto P = build(OpKind::Paneitz, metric_standard(s3));
  Kernel GP = greens_kernel(*P);
  const double eps = 0.02, rho = eps * 15.0 / 16.0 * 2 * pi * pi;
  Kernel H = kernel_scale_add(1.0, GP, eps, constant_kernel(P->space_ptr(), 1.0));
  NeumannResult nr = neumann_green(H, gamma_residual(H, *P), 1e-13, 500);
  const double diff = (kernel_nodes(nr.GP) - kernel_nodes(GP)).cwiseAbs().maxCoeff();
  c.details.push_back("information, synthetic H = G_P + " + fmt(eps) + " on round S3: rho " + fmt(rho) +
                      ", difference " + fmt(diff) + ", fitted ratio " + fmt(nr.fitted_ratio));
  c.details.push_back("instances with rho < 0.95: " + std::to_string(exercised));
  c.data = {{"instances", inst}, {"synthetic", {{"rho", rho}, {"difference", diff}, {"fitted_ratio", nr.fitted_ratio}}}};
  c.pass = rows_ok && neumann_ok && exercised > 0;
}

// max |Γ₁ discrete − Γ₁ closed form| / max |closed form| outside the mask, over sampled pivots
double gamma_gap(const MetricField& mg, double radius) {
  CurvatureBundle b = curvature_from_metric(mg);
  DiscreteOperator L(OpKind::ConformalLaplacian, mg, b), P(OpKind::Paneitz, mg, b);
  Kernel GL = greens_kernel(L);
  std::vector<Eigen::Index> piv = pivot_sample(*mg.grid, 4);
  MaskedRows mr = gamma_analytic(GL, mg, piv, radius);
  HGamma hg = build_H_gamma(GL, P);
  double gap = 0, scale = 0;
  for (std::size_t r = 0; r < piv.size(); ++r) {
    Vec row = kernel_column(hg.gamma, Pivot::at_node(piv[r]));
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      if (mr.masked(r, j)) continue;
      gap = std::max(gap, std::abs(row[j] - mr.values(r, j)));
      scale = std::max(scale, std::abs(mr.values(r, j)));
    }
  }
  return gap / std::max(scale, 1e-300);
}

void c7_identity(const SuiteOptions& o, Criterion& c) {
  bool ok = true;
  {
    auto s3 = build_grid(sphere3(o.identity_degree));
    MetricField mg = metric_standard(s3);
    CurvatureBundle b = curvature_from_metric(mg);
    DiscreteOperator L(OpKind::ConformalLaplacian, mg, b), P(OpKind::Paneitz, mg, b);
    IdentityResidual ir = identity_residual(P, greens_kernel(L), Pivot::at_point(north()), {pi / 4});
    const bool p = ir.residual[0] <= 1e-3;
    ok = ok && p;
    c.details.push_back("round S3 degree " + std::to_string(o.identity_degree) + ", residual outside pi/4: " +
                        fmt(ir.residual[0]) + " " + yes(p));
    c.data["s3_residual"] = ir.residual[0];
  }
  {
    std::vector<double> res;
    const std::vector<int> torus{8, 12};
    for (int i = 0; i < 2; ++i) {
      auto g = build_grid(product(o.identity_product[i], {torus[i]}));
      MetricField mg = metric_standard(g);
      CurvatureBundle b = curvature_from_metric(mg);
      DiscreteOperator L(OpKind::ConformalLaplacian, mg, b), P(OpKind::Paneitz, mg, b);
      res.push_back(identity_residual(P, greens_kernel(L), Pivot::at_node(0), {0.5}).residual[0]);
    }
    const double p = order(res[0], res[1], o.identity_product[0], o.identity_product[1]);
    ok = ok && p >= 1.5;
    c.details.push_back("S2xS1 residual outside 0.5: " + fmt(res[0]) + " -> " + fmt(res[1]) + ", order " + fmt(p) +
                        " " + yes(p >= 1.5));
    c.data["s2s1_residual"] = res;
    c.data["s2s1_order"] = p;
  }
  {
    std::vector<double> gap;
    for (int K : o.gamma_degree) {
      auto s3 = build_grid(sphere3(K));
      gap.push_back(gamma_gap(metric_conformal(s3, s3->field("0.1*x1 + 0.05*x2*x3")), default_mask_radius(*s3)));
    }
    const double p = order(gap[0], gap[1], o.gamma_degree[0], o.gamma_degree[1]);
    ok = ok && p >= 1;
    c.details.push_back("perturbed conformal S3 Gamma1 discrete vs closed form: " + fmt(gap[0]) + " -> " +
                        fmt(gap[1]) + ", order " + fmt(p) + " " + yes(p >= 1));
    c.data["s3_gamma_gap"] = gap;
    c.data["s3_gamma_order"] = p;
  }
  try {
    const double g5 = gamma_gap(perturbed_t5(o.gamma_t5_resolution), pi / 4);
    c.details.push_back("perturbed T5 Gamma1 gap " + fmt(g5) + " at a single resolution: FAIL");
    c.data["t5_gamma_gap"] = g5;
    ok = false;
  } catch (const Error& e) {
    c.details.push_back(std::string("perturbed T5: ") + e.what() + " FAIL");
    c.data["t5_error"] = e.what();
    ok = false;
  }
  try {
    auto p = build_grid(product(4, {4, 4, 4}));
    const double gp = gamma_gap(metric_standard(p), pi / 4);
    c.details.push_back("information, S2xT3 Gamma1 gap " + fmt(gp));
    c.data["s2t3_gamma_gap"] = gp;
  } catch (const Error& e) {
    c.details.push_back(std::string("information, S2xT3: ") + e.what());
  }
  c.pass = ok;
}

void c8_continuation(const SuiteOptions& o, Criterion& c) {
  const auto t0 = Clock::now();
  auto s3 = build_grid(sphere3(o.continuation_degree));
  auto P = build(OpKind::Paneitz, metric_standard(s3));
  Kernel K = kernel_scale_add(-1.0, greens_kernel(*P), 0.0, constant_kernel(P->space_ptr(), 0.0));
  SolveReport r = continuation_dim3(K, *P);
  const double t = since(t0);
  const int steps = static_cast<int>(r.path_t.size()) - 1;
  const double u1 = std::pow(8.0 / 15.0, 0.125);
  const double err = max_abs(r.solution - Vec::Constant(r.solution.size(), u1));
  const bool reach = r.converged && r.path_t.back() == 1.0 && steps <= 40;
  c.details.push_back("reached t = 1 in " + std::to_string(steps) + " steps " + yes(reach));
  c.details.push_back("strong-form residual " + fmt(r.residual) + " " + yes(r.residual <= 1e-4));
  c.details.push_back("max |u - (8/15)^(1/8)| " + fmt(err) + " " + yes(err <= 1e-3));
  c.details.push_back("runtime " + fmt(t) + " s (limit 300 s) " + yes(t < 300));
  c.data = {{"degree", o.continuation_degree}, {"steps", steps}, {"residual", r.residual}, {"constant_error", err}};
  c.pass = reach && r.residual <= 1e-4 && err <= 1e-3 && t < 300;
}

SolveReport functional_run(int N) {
  auto g = build_grid(chart(4, N, DiffScheme::Fourier));
  auto P = build(OpKind::Paneitz, metric_conformal(g, g->field("0.2*sin(x1)*sin(x2)")));
  return functional_II_min(*P, 1e-10);
}

void c9_functional(const SuiteOptions& o, Criterion& c) {
  const auto t0 = Clock::now();
  SolveReport r = functional_run(o.functional_resolution);
  const double t = since(t0);
  const double q = r.scalars["q_tilde_max"];
  const double dk = std::abs(r.scalars["kappa_after"] - r.scalars["kappa"]);
  const double k = std::abs(r.scalars["kappa"]);
  c.details.push_back(std::to_string(o.functional_resolution) + "^4: max|Q~| " + fmt(q) + " " + yes(q <= 1e-4));
  c.details.push_back("kappa " + fmt(k) + ", change " + fmt(dk) + " " + yes(dk <= 1e-8 && k <= 1e-8));
  c.details.push_back("runtime " + fmt(t) + " s (limit 300 s) " + yes(t < 300));
  c.data = {{"resolution", o.functional_resolution}, {"q_tilde_max", q}, {"kappa", k}, {"kappa_change", dk},
            {"el_residual", r.residual}};
  c.pass = r.converged && q <= 1e-4 && dk <= 1e-8 && k <= 1e-8 && t < 300;
  if (o.functional_info_resolution > 0) {
    const auto t1 = Clock::now();
    SolveReport s = functional_run(o.functional_info_resolution);
    c.details.push_back("information, " + std::to_string(o.functional_info_resolution) + "^4: max|Q~| " +
                        fmt(s.scalars["q_tilde_max"]) + " in " + fmt(since(t1)) + " s");
    c.data["information"] = {{"resolution", o.functional_info_resolution}, {"q_tilde_max", s.scalars["q_tilde_max"]}};
  }
}

void c10_nu(const SuiteOptions& o, Criterion& c) {
  auto s3 = build_grid(sphere3(o.nu_degree));
  NuReport r = nu_invariants(*build(OpKind::Paneitz, metric_standard(s3)), 64);
  const bool golden = std::abs(r.nu_global) <= 1e-3;
  c.details.push_back("round S3 degree " + std::to_string(o.nu_degree) + ": nu_global " + fmt(r.nu_global) + " " +
                      yes(golden));
  json table = json::array();
  bool agree = true;
  auto sf = build_grid(sphere3(o.nu_family_degree));
  for (std::string w : {"0", "0.1*x1", "0.2*x1*x2 - 0.1*x3", "0.15*cos(theta)"}) {
    NuReport f = nu_invariants(*build(OpKind::Paneitz, metric_conformal(sf, sf->field(w))), 64);
    const bool a = (f.lambda2 > 0) == f.NN;
    agree = agree && a;
    c.details.push_back("w = " + w + ": lambda2 " + fmt(f.lambda2) + ", nu_global " + fmt(f.nu_global) + " " +
                        (a ? "agree" : "DISAGREE"));
    table.push_back({{"w", w}, {"lambda2", f.lambda2}, {"nu_global", f.nu_global}, {"NN", f.NN}, {"agree", a}});
  }
  c.data = {{"nu_global", r.nu_global}, {"table", table}};
  c.pass = golden && agree;
}

void c11_decomposition(const SuiteOptions& o, Criterion& c) {
  bool ok = true;
  {
    auto s3 = build_grid(sphere3(o.decomposition_degree));
    const auto& fg = static_cast<const FrameGrid&>(*s3);
    auto P = build(OpKind::Paneitz, metric_standard(s3));
    std::vector<Vec> tests;
    for (int s = 0; s < 10; ++s) tests.push_back(random_harmonic(fg, 4, o.seed + s));
    const double d = energy_decomposition_check(*P, tests).discrepancy;
    ok = ok && d <= 1e-8;
    c.details.push_back("round S3 two-route discrepancy " + fmt(d) + " " + yes(d <= 1e-8));
    c.data["s3_discrepancy"] = d;
  }
  {
    double d[2];
    const int res[2] = {12, 24};
    for (int i = 0; i < 2; ++i) {
      auto g = build_grid(chart(3, res[i]));
      auto P = build(OpKind::Paneitz, metric_conformal(g, g->field("0.1*sin(x1) + 0.05*cos(x2 + x3)")));
      std::vector<Vec> t;
      for (int s = 0; s < 10; ++s) t.push_back(random_trig(*g, 1, o.seed + 100 + s));
      d[i] = energy_decomposition_check(*P, t).discrepancy;
    }
    const double p = order(d[0], d[1], res[0], res[1]);
    ok = ok && p >= 3;
    c.details.push_back("chart T3 discrepancy " + fmt(d[0]) + " -> " + fmt(d[1]) + ", order " + fmt(p) + " " + yes(p >= 3));
    c.data["t3_discrepancy"] = {d[0], d[1]};
    c.data["t3_order"] = p;
  }
  {
    auto g = build_grid(product(6, {8}));
    const auto& fg = static_cast<const FrameGrid&>(*g);
    auto P = build(OpKind::Paneitz, metric_standard(g));
    std::vector<Vec> tests;
    for (int s = 0; s < 10; ++s) tests.push_back(random_harmonic(fg, 3, o.seed + 200 + s));
    EnergyDecomposition r = energy_decomposition_check(*P, tests);
    const double l1 = spectrum(*P, 1).values[0];
    const bool p = r.sigma2_negative && r.two_j_dominates && l1 > 0;
    ok = ok && p;
    c.details.push_back("S2xS1: sigma2 < 0 " + std::string(r.sigma2_negative ? "true" : "false") + ", 2Jg >= A " +
                        (r.two_j_dominates ? "true" : "false") + ", lambda1(P) " + fmt(l1) + " " + yes(p));
    c.data["s2s1"] = {{"sigma2_max", r.sigma2_max}, {"two_j_min_eig", r.two_j_min_eig}, {"lambda1", l1},
                      {"discrepancy", r.discrepancy}};
  }
  c.pass = ok;
}

void c12_theta(const SuiteOptions& o, Criterion& c) {
  MetricField mg = perturbed_t5(o.theta_resolution);
  auto P = build(OpKind::Paneitz, mg);
  Invertibility inv = invertibility(*P);
  c.details.push_back("perturbed T5 " + std::to_string(o.theta_resolution) + "^5: |lambda|min " + fmt(inv.smallest) +
                      ", |lambda|max " + fmt(inv.norm) + ", ker P = 0 " + yes(inv.invertible()));
  c.data["smallest_abs_eigenvalue"] = inv.smallest;
  if (!inv.invertible()) return;
  Theta4Options to;
  to.seed = o.seed;
  to.restarts = o.theta_restarts;
  to.max_iter = o.theta_max_iter;
  Theta4 t = theta4(greens_kernel(*P), *P, 5, to);
  const double gap = std::abs(t.kernel_form - t.pu_form) / std::abs(t.kernel_form);
  c.details.push_back("kernel form " + fmt(t.kernel_form) + ", pu form " + fmt(t.pu_form) + ", relative gap " +
                      fmt(gap) + " " + yes(gap <= 1e-6));
  c.details.push_back("q form " + fmt(t.q_form) + ", " + t.status);
  Y4Pair y = y4_pair(*P);
  const bool ord = y.all.value <= y.positive.value;
  c.details.push_back("Y4 " + fmt(y.all.value) + " <= Y4+ " + fmt(y.positive.value) + " " + yes(ord));
  c.data["kernel_form"] = t.kernel_form;
  c.data["pu_form"] = t.pu_form;
  c.data["q_form"] = t.q_form;
  c.data["y4"] = y.all.value;
  c.data["y4_plus"] = y.positive.value;
  c.pass = gap <= 1e-6 && ord;
}

void c13_integral(const SuiteOptions&, Criterion& c) {
  std::vector<std::pair<std::string, std::function<CurvatureBundle()>>> cat;
  auto s3 = build_grid(sphere3(6));
  auto p = build_grid(product(6, {8}));
  auto t3 = build_grid(chart(3, 12));
  cat.emplace_back("round S3", [=] { return curvature_from_metric(metric_standard(s3)); });
  for (std::string w : {"0.1*x1 + 0.05*x2*x3", "0.2*x1*x2 - 0.1*x3", "0.15*cos(theta)"})
    cat.emplace_back("conformal S3 " + w, [=] { return curvature_from_metric(metric_conformal(s3, s3->field(w))); });
  cat.emplace_back("S2xS1", [=] { return curvature_from_metric(metric_standard(p)); });
  cat.emplace_back("conformal S2xS1", [=] { return curvature_from_metric(metric_conformal(p, p->field("0.1*cos(x1)"))); });
  cat.emplace_back("flat T3", [=] { return curvature_from_metric(metric_standard(t3)); });
  cat.emplace_back("conformal T3",
                   [=] { return curvature_from_metric(metric_conformal(t3, t3->field("0.1*sin(x1) + 0.05*cos(x2 + x3)"))); });
  cat.emplace_back("curved T3", [] { return curvature_from_metric(curved_t3(12)); });
  for (auto [kind, name] : {std::pair{HomogeneousModel::Kind::RoundSphere, "round S3 (analytic)"},
                            std::pair{HomogeneousModel::Kind::Berger, "Berger sphere (analytic)"},
                            std::pair{HomogeneousModel::Kind::ProductS2S1, "S2xS1 (analytic)"}}) {
    HomogeneousModel m;
    m.kind = kind;
    m.n = 3;
    m.lambda = 0.5;
    cat.emplace_back(name, [m] { return homogeneous_catalog(m); });
  }
  bool ok = true;
  json rows = json::array();
  for (const auto& [name, make] : cat) {
    Sigma2Diagnostics r = sigma2_diagnostics(make());
    const bool p = r.sigma2_residual <= 1e-9;
    ok = ok && p;
    c.details.push_back(name + ": residual " + fmt(r.sigma2_residual) + " " + yes(p));
    rows.push_back({{"instance", name}, {"residual", r.sigma2_residual}, {"sigma2_integral", r.sigma2_integral}});
  }
  c.data = {{"instances", rows}};
  c.pass = ok;
}

const std::vector<std::string> kTitles = {
    "",
    "flat-torus smoke",
    "round-S3 Paneitz spectra",
    "round-S3 Paneitz Green's function golden test",
    "kappa anchors",
    "covariance laws",
    "exact discrete kernel algebra",
    "identity residual and Gamma1 convergence",
    "continuation solver on round S3",
    "functional II on a conformally flat T4",
    "nu golden test and lambda2 sign agreement",
    "energy decomposition",
    "Theta4 duality and Y4 ordering",
    "integral identity for sigma2"};

using Eval = void (*)(const SuiteOptions&, Criterion&);
const Eval kEval[] = {nullptr,           c1_smoke,        c2_spectra,    c3_green,    c4_kappa,
                      c5_covariance,     c6_kernel_algebra, c7_identity, c8_continuation, c9_functional,
                      c10_nu,            c11_decomposition, c12_theta,   c13_integral};

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"smoke", "identities", "covariance", "solvers", "invariants"};
  return names;
}

std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "smoke") return {1};
  if (suite == "identities") return {2, 3, 6, 7, 13};
  if (suite == "covariance") return {5};
  if (suite == "solvers") return {8, 9};
  if (suite == "invariants") return {4, 10, 11, 12};
  config_error("UnknownSuite", "unknown suite '" + suite + "'");
}

std::string criterion_title(int id) {
  if (id < 1 || id > 13) config_error("UnknownCriterion", "criteria are numbered 1 to 13");
  return kTitles[id];
}

Criterion evaluate_criterion(int id, const SuiteOptions& o) {
  Criterion c;
  c.id = id;
  c.title = criterion_title(id);
  const auto t0 = Clock::now();
  try {
    kEval[id](o, c);
  } catch (const Error& e) {
    c.pass = false;
    c.details.push_back(std::string("error: ") + e.what());
  }
  c.seconds = since(t0);
  return c;
}

RunReport run_suite(const std::string& suite, const SuiteOptions& o) {
  RunReport r;
  json list = json::array();
  for (int id : suite_criteria(suite)) {
    Criterion c = evaluate_criterion(id, o);
    r.checks.push_back({std::to_string(id) + " " + c.title, c.pass, c.details.empty() ? "" : c.details.front()});
    list.push_back({{"id", id}, {"title", c.title}, {"pass", c.pass}, {"details", c.details}, {"data", c.data}});
    r.timing[std::to_string(id)] = c.seconds;
  }
  r.outputs["suite"] = suite;
  r.outputs["settings"] = suite_options_json(o);
  r.outputs["criteria"] = list;
  return r;
}

}  // namespace qc::cli
