#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qcurv/operators.hpp"
#include "support.hpp"

using namespace qc;
using namespace qct;

namespace {

const std::vector<std::string> kCurvedT3 = {"1 + 0.2*sin(x2)", "0.1*cos(x3)", "0", "1 + 0.1*cos(x1)",
                                            "0.05*sin(x1)", "1.2 + 0.1*sin(x3)"};

MetricField chart_metric(GridPtr g, const std::vector<std::string>& comps) {
  std::vector<Vec> v;
  for (const auto& c : comps) v.push_back(g->field(c));
  return metric_components(g, v);
}

OperatorPtr build(OpKind k, const MetricField& g) { return assemble_operator(k, g, curvature_from_metric(g)); }

// band-limited trigonometric test function on a periodic chart
Vec chart_test_function(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  Vec f = Vec::Zero(g.size());
  for (int t = 0; t < 4; ++t) {
    std::string e = std::to_string(U(rng)) + "*cos(";
    for (int a = 0; a < g.dim(); ++a) {
      int k = static_cast<int>(std::floor(3 * (U(rng) + 1) / 2)) - 1;
      e += (a ? "+" : "") + std::to_string(k) + "*x" + std::to_string(a + 1);
    }
    e += "+" + std::to_string(U(rng)) + ")";
    f += g.field(e);
  }
  return f;
}

Vec sphere_test_function(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  Vec f = Vec::Constant(g.size(), U(rng));
  const char* v[] = {"x1", "x2", "x3", "x4"};
  for (int a = 0; a < 4; ++a) {
    f += U(rng) * g.field(v[a]);
    for (int b = a; b < 4; ++b) f += U(rng) * g.field(std::string(v[a]) + "*" + v[b]);
  }
  f += U(rng) * g.field("x1*x2*x3");
  return f;
}

}  // namespace

TEST_CASE("flat torus: Paneitz equals the bilaplacian") {
  for (int n : {3, 4}) {
    auto g = build_grid(chart(n, n == 3 ? 16 : 8));
    auto P = build(OpKind::Paneitz, metric_standard(g));
    const auto& cg = static_cast<const ChartGrid&>(*g);
    auto lap = [&](const Vec& x) {
      Vec o = Vec::Zero(x.size());
      for (int a = 0; a < n; ++a) o += cg.diff(x, a, 2);
      return o;
    };
    double d = operator_distance(*P, [&](const Vec& x) { return lap(lap(x)); });
    CHECK(d <= 1e-10);
  }
}

TEST_CASE("quadratic-form assembly is symmetric in the measure inner product") {
  auto g = build_grid(chart(3, 10));
  auto mg = chart_metric(g, kCurvedT3);
  auto b = curvature_from_metric(mg);
  for (OpKind k : {OpKind::Laplacian, OpKind::ConformalLaplacian, OpKind::Paneitz}) {
    DiscreteOperator op(k, mg, b);
    Vec u = chart_test_function(*g, 1), v = chart_test_function(*g, 2);
    const Space& sp = op.space();
    double lhs = sp.inner(op.apply(u), v), rhs = sp.inner(u, op.apply(v));
    double nu = std::sqrt(sp.inner(u, u)), nv = std::sqrt(sp.inner(v, v));
    const Mat& S = op.stiffness_dense();
    double norm = Eigen::SelfAdjointEigenSolver<Mat>(S).eigenvalues().cwiseAbs().maxCoeff() /
                  sp.weights().minCoeff();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * norm * nu * nv);
  }
  auto s3 = build_grid(sphere3(8));
  auto ms = metric_conformal(s3, s3->field("0.1*cos(theta) + 0.05*x1*x2"));
  auto bs = curvature_from_metric(ms);
  for (OpKind k : {OpKind::ConformalLaplacian, OpKind::Paneitz}) {
    DiscreteOperator op(k, ms, bs);
    Vec u = sphere_test_function(*s3, 3), v = sphere_test_function(*s3, 4);
    const Space& sp = op.space();
    double lhs = sp.inner(op.apply(u), v), rhs = sp.inner(u, op.apply(v));
    double scale = std::sqrt(sp.inner(op.apply(u), op.apply(u)) * sp.inner(v, v));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
  }
}

TEST_CASE("operators applied to constants") {
  auto g = build_grid(chart(3, 12));
  auto mg = chart_metric(g, kCurvedT3);
  auto b = curvature_from_metric(mg);
  Vec one = Vec::Ones(g->size());
  DiscreteOperator L(OpKind::ConformalLaplacian, mg, b), P(OpKind::Paneitz, mg, b);
  CHECK(max_abs(L.apply(one) - b.R) <= 1e-10 * (1 + max_abs(b.R)));
  CHECK(max_abs(P.apply(one) + 0.5 * b.Q) <= 1e-10 * (1 + max_abs(b.Q)));
  auto s3 = build_grid(sphere3(8));
  auto P3 = build(OpKind::Paneitz, metric_standard(s3));
  CHECK(max_abs(P3->apply(Vec::Ones(s3->size())) + Vec::Constant(s3->size(), 15.0 / 16.0)) <= 1e-10);
}

TEST_CASE("round S3 spectra") {
  auto s3 = build_grid(sphere3(12));
  auto mg = metric_standard(s3);
  auto b = curvature_from_metric(mg);
  DiscreteOperator P(OpKind::Paneitz, mg, b);
  std::vector<double> expect;
  for (int k = 0; k <= 6; ++k) {
    double X = k * (k + 2.0);
    for (int i = 0; i < (k + 1) * (k + 1); ++i) expect.push_back((X - 1.25) * (X + 0.75));
  }
  Spectrum sp = spectrum(P, static_cast<int>(expect.size()));
  double worst = 0;
  for (std::size_t i = 0; i < expect.size(); ++i)
    worst = std::max(worst, std::abs(sp.values[i] - expect[i]) / std::abs(expect[i]));
  CHECK(worst <= 1e-9);
  CHECK(sp.multiplicity[0] == 1);
  CHECK(sp.multiplicity[1] == 4);
  CHECK(sp.values[1] == doctest::Approx(105.0 / 16).epsilon(1e-10));

  DiscreteOperator L(OpKind::ConformalLaplacian, mg, b);
  Spectrum sl = spectrum(L, 5, true);
  CHECK(sl.values[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(sl.values[1] == doctest::Approx(8 * 3 + 6.0).epsilon(1e-12));
  Vec v0 = sl.vectors.col(0);
  CHECK(max_abs(v0 - Vec::Constant(v0.size(), v0[0])) <= 1e-10);
  CHECK(v0[0] > 0);
}

TEST_CASE("flat torus spectrum and kernel") {
  auto g = build_grid(chart(3, 8, DiffScheme::Fourier));
  auto P = build(OpKind::Paneitz, metric_standard(g));
  Spectrum sp = spectrum(*P, 2, true);
  CHECK(std::abs(sp.values[0]) <= 1e-10);
  CHECK(sp.values[1] == doctest::Approx(1.0).epsilon(1e-10));
  Vec v0 = sp.vectors.col(0);
  CHECK(max_abs(v0 - Vec::Constant(v0.size(), v0[0])) <= 1e-8);
  auto L = build(OpKind::ConformalLaplacian, metric_standard(g));
  CHECK(std::abs(spectrum(*L, 1).values[0]) <= 1e-10);
}

TEST_CASE("block eigensolver agrees with the dense solver") {
  auto g = build_grid(chart(3, 13));
  auto mg = chart_metric(g, kCurvedT3);
  auto b = curvature_from_metric(mg);
  for (OpKind k : {OpKind::ConformalLaplacian, OpKind::Paneitz}) {
    DiscreteOperator iter(k, mg, b), dense(k, mg, b);
    Spectrum si = spectrum(iter, 4);
    CHECK(si.method.rfind("lobpcg", 0) == 0);
    dense.stiffness_dense();
    Spectrum sd = spectrum(dense, 4);
    CHECK(sd.method == "dense");
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(si.values[i] - sd.values[i]) <= 1e-7 * std::max(1.0, std::abs(sd.values[i])));
  }
}

TEST_CASE("product S2xT1 spectra and sign of L") {
  auto g = build_grid(product(6, {9}, {2 * pi}, 0.5));
  auto mg = metric_standard(g);
  auto b = curvature_from_metric(mg);
  DiscreteOperator L(OpKind::ConformalLaplacian, mg, b);
  Spectrum sl = spectrum(L, 2);
  // R = 2/r² = 8, L = -8Δ + 8 in dimension 3; first mode is the T¹ mode |k|=1
  CHECK(sl.values[0] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(sl.values[1] == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("energy identity: term-by-term integrand equals the quadratic form") {
  auto g = build_grid(chart(3, 12));
  auto mg = chart_metric(g, kCurvedT3);
  auto b = curvature_from_metric(mg);
  for (OpKind k : {OpKind::Laplacian, OpKind::ConformalLaplacian, OpKind::Paneitz}) {
    DiscreteOperator op(k, mg, b);
    Vec u = chart_test_function(*g, 7);
    double E = op.energy(u), I = weighted_sum(op.energy_density(u), op.space().weights());
    CHECK(std::abs(E - I) <= 1e-11 * std::abs(E));
  }
  for (bool deform : {false, true}) {
    auto s3 = build_grid(sphere3(8));
    auto ms = deform ? metric_conformal(s3, s3->field("0.1*cos(theta)")) : metric_standard(s3);
    auto bs = curvature_from_metric(ms);
    for (OpKind k : {OpKind::Laplacian, OpKind::ConformalLaplacian, OpKind::Paneitz}) {
      DiscreteOperator op(k, ms, bs);
      Vec u = sphere_test_function(*s3, 8);
      double E = op.energy(u), I = weighted_sum(op.energy_density(u), op.space().weights());
      CHECK(std::abs(E - I) <= 1e-11 * std::abs(E));
    }
  }
  auto pg = build_grid(product(5, {7}, {2 * pi}, 1.0));
  auto mp = metric_standard(pg);
  auto bp = curvature_from_metric(mp);
  DiscreteOperator op(OpKind::Paneitz, mp, bp);
  Vec u = pg->field("x1*sin(theta)*cos(phi) + cos(theta)^2");
  double E = op.energy(u), I = weighted_sum(op.energy_density(u), op.space().weights());
  CHECK(std::abs(E - I) <= 1e-11 * std::abs(E));
}

TEST_CASE("quadratic form and strong form agree") {
  auto s3 = build_grid(sphere3(12));
  auto ms = metric_conformal(s3, s3->field("0.1*cos(theta)"));
  auto bs = curvature_from_metric(ms);
  for (OpKind k : {OpKind::ConformalLaplacian, OpKind::Paneitz}) {
    DiscreteOperator op(k, ms, bs);
    Vec u = sphere_test_function(*s3, 11), v = sphere_test_function(*s3, 12);
    double a = op.bilinear(u, v);
    double s = op.space().inner(strong_apply(k, ms, bs, op.space().project(u)), op.space().project(v));
    CHECK(std::abs(a - s) <= 1e-10 * std::abs(a));
  }
  std::vector<double> err;
  for (int N : {16, 32}) {
    auto g = build_grid(chart(3, N));
    auto mg = chart_metric(g, kCurvedT3);
    auto b = curvature_from_metric(mg);
    DiscreteOperator op(OpKind::Paneitz, mg, b);
    Vec u = chart_test_function(*g, 21), v = chart_test_function(*g, 22);
    err.push_back(std::abs(op.bilinear(u, v) - op.space().inner(strong_apply(OpKind::Paneitz, mg, b, u), v)));
  }
  MESSAGE("strong/quadratic discrepancy " << err[0] << " " << err[1]);
  CHECK(std::log2(err[0] / err[1]) >= 3.0);
}

TEST_CASE("covariance of P and L") {
  auto g = build_grid(chart(3, 12));
  auto mg = chart_metric(g, kCurvedT3);
  auto P = build(OpKind::Paneitz, mg);
  std::vector<Vec> tests = {chart_test_function(*g, 31), chart_test_function(*g, 32)};
  CHECK(covariance_residual(*P, Vec::Ones(g->size()), Convention::RhoN4, tests).residual <= 1e-12);

  std::vector<double> res;
  for (int N : {16, 32}) {
    auto gt = build_grid(chart(3, N));
    auto Pt = build(OpKind::Paneitz, metric_standard(gt));
    std::vector<Vec> tf;
    for (int s = 0; s < 5; ++s) tf.push_back(chart_test_function(*gt, 40 + s));
    res.push_back(covariance_residual(*Pt, gt->field("1 + 0.2*sin(x1)"), Convention::RhoN4, tf).residual);
  }
  MESSAGE("T3 covariance residual " << res[0] << " " << res[1]);
  CHECK(std::log2(res[0] / res[1]) >= 3.0);

  auto s3 = build_grid(sphere3(12));
  auto P3 = build(OpKind::Paneitz, metric_standard(s3));
  std::vector<Vec> ts = {sphere_test_function(*s3, 51), sphere_test_function(*s3, 52)};
  double r3 = covariance_residual(*P3, s3->field("1 + 0.1*cos(theta)"), Convention::RhoNeg4, ts).residual;
  MESSAGE("S3 covariance residual " << r3);
  CHECK(r3 <= 1e-6);
  auto L3 = build(OpKind::ConformalLaplacian, metric_standard(s3));
  CHECK(covariance_residual(*L3, s3->field("1 + 0.1*cos(theta)"), Convention::RhoNeg4, ts).residual <= 1e-6);

  auto g4 = build_grid(chart(4, 12, DiffScheme::Fourier));
  auto P4 = build(OpKind::Paneitz, metric_standard(g4));
  std::vector<Vec> t4 = {chart_test_function(*g4, 61)};
  double r4 = covariance_residual(*P4, g4->field("0.05*cos(x1 + x3)"), Convention::E2W, t4).residual;
  MESSAGE("T4 covariance residual " << r4);
  CHECK(r4 <= 1e-5);
}

TEST_CASE("Q through the transformation law") {
  auto s3 = build_grid(sphere3(8));
  auto P3 = build(OpKind::Paneitz, metric_standard(s3));
  Vec one = Vec::Ones(s3->size());
  CHECK(max_abs(q_from_transformation(*P3, one, Convention::RhoNeg4) - P3->bundle().Q) <= 1e-10);
  for (double c : {0.8, 1.3}) {
    Vec q = q_from_transformation(*P3, c * one, Convention::RhoNeg4);
    CHECK(max_abs(q - Vec::Constant(q.size(), 15.0 / 8.0 * std::pow(c, 8))) <= 1e-10 * std::pow(c, 8));
  }
  auto g4 = build_grid(chart(4, 12, DiffScheme::Fourier));
  auto mg = metric_standard(g4);
  auto P4 = build(OpKind::Paneitz, mg);
  Vec w = g4->field("0.1*sin(x1) + 0.05*cos(x2 - x4)");
  Vec q1 = q_from_transformation(*P4, w, Convention::E2W);
  auto b2 = curvature_from_metric(conformal_deform(mg, w, Convention::E2W));
  double e = max_abs(q1 - b2.Q) / max_abs(b2.Q);
  MESSAGE("T4 Q two-route discrepancy " << e);
  CHECK(e <= 1e-6);
  std::vector<double> err;
  for (int N : {16, 32}) {
    auto g3 = build_grid(chart(3, N));
    auto P3c = build(OpKind::Paneitz, metric_standard(g3));
    Vec rho = g3->field("exp(-0.1*sin(x1)/2)");
    Vec q3 = q_from_transformation(*P3c, rho, Convention::RhoN4);
    auto b3 = curvature_from_metric(conformal_deform(metric_standard(g3), rho, Convention::RhoN4));
    err.push_back(max_abs(q3 - b3.Q));
  }
  MESSAGE("T3 Q two-route discrepancy " << err[0] << " " << err[1]);
  CHECK(std::log2(err[0] / err[1]) >= 3.0);
}

TEST_CASE("operator errors") {
  auto s2 = build_grid([] {
    GridSpec s;
    s.backend = Backend::Sphere2;
    s.dim = 2;
    s.degree = 6;
    return s;
  }());
  auto m2 = metric_standard(s2);
  CHECK_THROWS_AS(build(OpKind::ConformalLaplacian, m2), Error);
  auto s3 = build_grid(sphere3(6));
  auto P = build(OpKind::Paneitz, metric_standard(s3));
  CHECK_THROWS_AS(spectrum(*P, 0), Error);
  CHECK_THROWS_AS(spectrum(*P, static_cast<int>(P->dofs()) + 1), Error);
  Vec neg = Vec::Ones(s3->size());
  neg[3] = -1;
  CHECK_THROWS_AS(q_from_transformation(*P, neg, Convention::RhoNeg4), Error);
  CHECK_THROWS_AS(q_from_transformation(*P, neg, Convention::E2W), Error);
  CHECK_THROWS_AS(op_kind_from_name("biharmonic"), Error);
}
