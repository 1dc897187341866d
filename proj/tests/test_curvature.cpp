#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qcurv/curvature.hpp"
#include "support.hpp"

using namespace qc;
using namespace qct;
using Kind = HomogeneousModel::Kind;

namespace {

void check_bundle_identities(const CurvatureBundle& b) {
  CHECK(max_abs(tensor_trace(b, b.A) - b.J) <= 1e-10 * (1 + max_abs(b.J)));
  CHECK(max_abs(tensor_trace(b, b.Aring)) <= 1e-10 * (1 + max_abs(b.J)));
  CHECK(max_abs(tensor_trace(b, b.E)) <= 1e-10 * (1 + max_abs(b.R)));
  double scale = 1 + max_abs(b.Q);
  for (const auto& [name, q] : b.q_forms) CHECK_MESSAGE(max_abs(q - b.Q) <= 1e-10 * scale, name);
  if (b.n == 3) {
    Vec lhs = b.Q - b.lapJ / 3.0 - b.J.cwiseAbs2() / 6.0;
    Vec rhs = -4.0 / 3.0 * b.lapJ - 2.0 * tensor_norm2(b, b.Aring) + 2.0 / 3.0 * b.J.cwiseAbs2();
    CHECK(max_abs(lhs - rhs) <= 1e-9 * scale);
  }
}

MetricField chart_metric(GridPtr g, const std::vector<std::string>& comps) {
  std::vector<Vec> v;
  for (const auto& c : comps) v.push_back(g->field(c));
  return metric_components(g, v);
}

}  // namespace

TEST_CASE("flat tori have vanishing curvature") {
  for (int n : {3, 4, 5}) {
    auto g = build_grid(chart(n, n == 5 ? 6 : 8));
    auto b = curvature_from_metric(metric_standard(g));
    CHECK(max_abs(b.R) <= 1e-12);
    CHECK(max_abs(b.Q) <= 1e-12);
    CHECK(max_abs(b.absA2) <= 1e-12);
    CHECK(b.has_weyl == (n == 4));
  }
}

TEST_CASE("round S3 curvature on the spectral grid") {
  auto g = build_grid(sphere3(6));
  auto b = curvature_from_metric(metric_standard(g));
  // Rc = 2g: R = 6, J = 6/4, A = Rc - Jg = g/2, |A|^2 = 3/4, Q = -2(3/4) + (3/2)(9/4) = 15/8
  CHECK(max_abs(b.R.array() - 6.0) <= 1e-8);
  CHECK(max_abs(b.J.array() - 1.5) <= 1e-8);
  CHECK(max_abs(b.absA2.array() - 0.75) <= 1e-8);
  CHECK(max_abs(b.Q.array() - 15.0 / 8.0) <= 1e-8);
  CHECK(max_abs(b.sigma2.array() - 0.75) <= 1e-8);
  check_bundle_identities(b);
}

TEST_CASE("radius-2 S3 scales curvature") {
  auto g = build_grid(sphere3(4, 2.0));
  auto b = curvature_from_metric(metric_standard(g));
  CHECK(max_abs(b.R.array() - 1.5) <= 1e-10);
  CHECK(max_abs(b.Q.array() - 15.0 / 8.0 / 16.0) <= 1e-10);
}

TEST_CASE("conformally flat T3: scalar curvature against the closed form, order >= 3.5") {
  // n=3, g = e^{2w}δ: R = -e^{-2w}(4Δw + 2|∇w|²); w = 0.1 sin x1
  auto err = [](int N) {
    auto g = build_grid(chart(3, N));
    Vec w = g->field("0.1*sin(x1)");
    auto b = curvature_from_metric(metric_conformal(g, w));
    check_bundle_identities(b);
    Vec ref = -(-2.0 * w).array().exp() * (4.0 * g->field("-0.1*sin(x1)").array() +
                                            2.0 * g->field("0.01*cos(x1)^2").array());
    return max_abs(b.R - ref);
  };
  double e16 = err(16), e32 = err(32);
  CHECK(std::log2(e16 / e32) >= 3.5);
}

TEST_CASE("non-flat chart metric converges at order >= 3.5 against a fine reference") {
  std::vector<std::string> comps = {"1+0.1*sin(x2)", "0.05*cos(x3)", "0", "1", "0.05*sin(x1)", "1+0.1*cos(x1)*sin(x2)"};
  auto run = [&](int N) {
    auto g = build_grid(chart(3, N));
    auto b = curvature_from_metric(chart_metric(g, comps));
    check_bundle_identities(b);
    return b;
  };
  auto b48 = run(48);
  auto b16 = run(16), b32 = run(32);
  // compare at the coarse nodes, which all grids share
  auto sub = [](const Vec& fine, int Nf, int Nc) {
    Vec out(Nc * Nc * Nc);
    int s = Nf / Nc;
    for (int i = 0; i < Nc; ++i)
      for (int j = 0; j < Nc; ++j)
        for (int k = 0; k < Nc; ++k) out[(i * Nc + j) * Nc + k] = fine[((i * s) * Nf + j * s) * Nf + k * s];
    return out;
  };
  double e16 = max_abs(b16.Q - sub(b48.Q, 48, 16));
  double e32 = max_abs(sub(b32.Q, 32, 16) - sub(b48.Q, 48, 16));
  CHECK(std::log2(e16 / e32) >= 3.5);
  double r16 = max_abs(b16.R - sub(b48.R, 48, 16));
  double r32 = max_abs(sub(b32.R, 32, 16) - sub(b48.R, 48, 16));
  CHECK(std::log2(r16 / r32) >= 3.5);
}

TEST_CASE("catalog: round spheres, products, Berger") {
  auto s4 = homogeneous_catalog(model(Kind::RoundSphere, 4));
  CHECK(s4.Q[0] == doctest::Approx(6.0).epsilon(1e-14));
  auto gb = weyl_gauss_bonnet(s4);
  CHECK(gb.q_integral == doctest::Approx(16 * pi * pi).epsilon(1e-13));
  CHECK(gb.weyl_energy == doctest::Approx(0.0));
  for (int n = 3; n <= 6; ++n) {
    auto b1 = homogeneous_catalog(model(Kind::RoundSphere, n, 1.0));
    auto b2 = homogeneous_catalog(model(Kind::RoundSphere, n, 1.7));
    CHECK(b2.Q[0] == doctest::Approx(b1.Q[0] / std::pow(1.7, 4)).epsilon(1e-13));
    // Einstein data Rc = (n-1)g: Q = n(n²-4)/8
    CHECK(b1.Q[0] == doctest::Approx(n * (n * n - 4) / 8.0).epsilon(1e-13));
  }
  HomogeneousModel m = model(Kind::ProductS2S1);
  m.L = 2 * pi;
  auto p = homogeneous_catalog(m);
  CHECK(p.R[0] == doctest::Approx(2.0));
  CHECK(p.J[0] == doctest::Approx(0.5));
  CHECK(p.sigma2[0] < 0.0);
  Mat twoJgA(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) twoJgA(a, c) = 2 * p.J[0] * p.g[a * 3 + c][0] - p.A[a * 3 + c][0];
  CHECK(Eigen::SelfAdjointEigenSolver<Mat>(twoJgA).eigenvalues().minCoeff() >= 0.0);
  check_bundle_identities(p);
  auto round3 = homogeneous_catalog(model(Kind::RoundSphere, 3));
  HomogeneousModel bm = model(Kind::Berger);
  bm.lambda = 1.0;
  auto b1 = homogeneous_catalog(bm);
  CHECK(b1.Q[0] == doctest::Approx(round3.Q[0]).epsilon(1e-14));
  for (int k = 0; k < 9; ++k) CHECK(b1.Rc[k][0] == doctest::Approx(round3.Rc[k][0]).epsilon(1e-14));
  // Berger closed form in the adapted orthonormal frame: Rc = diag(2λ², 4-2λ², 4-2λ²)
  for (double l : {0.5, 0.8, 1.3}) {
    bm.lambda = l;
    auto b = homogeneous_catalog(bm);
    CHECK(b.Rc[0][0] == doctest::Approx(2 * l * l).epsilon(1e-13));
    CHECK(b.Rc[4][0] == doctest::Approx(4 - 2 * l * l).epsilon(1e-13));
    CHECK(b.Rc[8][0] == doctest::Approx(4 - 2 * l * l).epsilon(1e-13));
    CHECK(std::abs(b.Rc[1][0]) <= 1e-14);
    check_bundle_identities(b);
  }
  bm.lambda = -1.0;
  CHECK_THROWS_AS(homogeneous_catalog(bm), Error);
}

TEST_CASE("conformal deformation conventions") {
  auto t4 = build_grid(chart(4, 6));
  auto g0 = metric_standard(t4);
  auto g1 = conformal_deform(g0, Vec::Constant(t4->size(), 0.3), Convention::E2W);
  CHECK(pairwise_sum(g1.dmu) == doctest::Approx(std::exp(4 * 0.3) * pairwise_sum(g0.dmu)).epsilon(1e-13));
  auto same = conformal_deform(g0, Vec::Zero(t4->size()), Convention::E2W);
  for (int k = 0; k < 16; ++k) CHECK(max_abs(same.g[k] - g0.g[k]) == 0.0);
  CHECK_THROWS_AS(conformal_deform(g0, Vec::Ones(t4->size()), Convention::RhoN4), Error);
  auto s3 = build_grid(sphere3(4));
  auto h0 = metric_standard(s3);
  auto h1 = conformal_deform(h0, Vec::Constant(s3->size(), 1.3), Convention::RhoNeg4);
  CHECK(pairwise_sum(h1.dmu) == doctest::Approx(std::pow(1.3, -6) * 2 * pi * pi).epsilon(1e-12));
  auto h2 = conformal_deform(h0, Vec::Ones(s3->size()), Convention::RhoNeg4);
  CHECK(max_abs(h2.w) == 0.0);
  Vec bad = Vec::Ones(s3->size());
  bad[5] = -1;
  CHECK_THROWS_AS(conformal_deform(h0, bad, Convention::RhoNeg4), Error);
  auto t5 = build_grid(chart(5, 5));
  auto k1 = conformal_deform(metric_standard(t5), Vec::Constant(t5->size(), 2.0), Convention::RhoN4);
  CHECK(k1.g[0][0] == doctest::Approx(16.0));
}

TEST_CASE("non-positive-definite metric is rejected with the worst node") {
  auto g = build_grid(chart(3, 6));
  try {
    chart_metric(g, {"1", "2*cos(x1)", "0", "1", "0", "1"});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "MetricNotPositiveDefinite");
    CHECK(std::string(e.what()).find("node") != std::string::npos);
  }
  GridSpec h;
  h.backend = Backend::Homogeneous;
  CHECK_THROWS_AS(metric_standard(build_grid(h)), Error);
}

TEST_CASE("Gauss-Bonnet on T4: flat and conformally flat") {
  auto g = build_grid(chart(4, 16, DiffScheme::Fourier));
  auto flat = weyl_gauss_bonnet(curvature_from_metric(metric_standard(g)));
  CHECK(std::abs(flat.weyl_energy) <= 1e-12);
  CHECK(std::abs(flat.q_integral) <= 1e-12);
  auto b = curvature_from_metric(metric_conformal(g, g->field("0.2*sin(x1)*cos(x2)")));
  check_bundle_identities(b);
  auto cf = weyl_gauss_bonnet(b);
  CHECK(std::abs(cf.weyl_energy) <= 1e-8);
  CHECK(std::abs(cf.cgb_lhs) <= 1e-8);
  auto g3 = build_grid(chart(3, 6));
  CHECK_THROWS_AS(weyl_gauss_bonnet(curvature_from_metric(metric_standard(g3))), Error);
}

TEST_CASE("pointwise conformal invariance of |W|^2 dmu in dimension 4") {
  std::vector<std::string> comps = {"1", "0.1*sin(x3)", "0", "0", "1", "0", "0", "1", "0.1*cos(x1)", "1"};
  auto diff = [&](int N) {
    auto g = build_grid(chart(4, N));
    std::vector<Vec> v;
    for (const auto& c : comps) v.push_back(g->field(c));
    auto m0 = metric_components(g, v);
    auto m1 = conformal_deform(m0, g->field("0.1*sin(x1)*cos(x4)"), Convention::E2W);
    auto b0 = curvature_from_metric(m0), b1 = curvature_from_metric(m1);
    CHECK(max_abs(b0.absW2) > 1e-4);
    return max_abs(b0.absW2.cwiseProduct(m0.sqrt_det) - b1.absW2.cwiseProduct(m1.sqrt_det));
  };
  double e12 = diff(12), e16 = diff(16);
  CHECK(std::log(e12 / e16) / std::log(16.0 / 12.0) >= 3.0);
}

TEST_CASE("product S2 x S1 frame curvature matches the catalog") {
  auto g = build_grid(product(4, {8}, {2 * pi}));
  auto b = curvature_from_metric(metric_standard(g));
  check_bundle_identities(b);
  CHECK(max_abs(b.R.array() - 2.0) <= 1e-10);
  CHECK(max_abs(b.Q.array() - homogeneous_catalog([] {
                                 HomogeneousModel m = model(Kind::ProductS2S1);
                                 return m;
                               }()).Q[0]) <= 1e-10);
  auto w = g->field("0.1*cos(theta)*sin(x1)");
  auto bw = curvature_from_metric(metric_conformal(g, w));
  check_bundle_identities(bw);
  // integral of the divergence-form Laplacian vanishes
  CHECK(std::abs(weighted_sum(bw.lapJ, bw.dmu)) <= 1e-12);
}

TEST_CASE("curvature is deterministic") {
  auto g = build_grid(chart(3, 10));
  auto m = metric_conformal(g, g->field("0.1*sin(x1)*cos(x2)"));
  auto a = curvature_from_metric(m), b = curvature_from_metric(m);
  CHECK((a.Q.array() == b.Q.array()).all());
}

TEST_CASE("contracted Ricci (n=5) and full Riemann (n=4) agree with the conformally flat closed form") {
  // g = e^{2w}δ: R = -e^{-2w}(2(n-1)Δw + (n-2)(n-1)|∇w|²), w = 0.1 sin x1
  for (int n : {4, 5}) {
    GridSpec s = chart(n, 4, DiffScheme::Fourier);
    s.resolution[0] = 16;
    auto g = build_grid(s);
    Vec w = g->field("0.1*sin(x1)");
    auto b = curvature_from_metric(metric_conformal(g, w));
    check_bundle_identities(b);
    Vec lap = g->field("-0.1*sin(x1)"), grad2 = g->field("0.01*cos(x1)^2");
    Vec ref = -(-2.0 * w).array().exp() * (2.0 * (n - 1) * lap.array() + (n - 2.0) * (n - 1) * grad2.array());
    CHECK(max_abs(b.R - ref) <= 1e-9);
  }
}
