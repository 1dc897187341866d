#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qcurv/grid.hpp"
#include "qcurv/quadrature.hpp"

using namespace qc;
constexpr double pi = std::numbers::pi;

namespace {

GridSpec chart(int n, int N, DiffScheme s = DiffScheme::FD4, double L = 2 * pi) {
  GridSpec g;
  g.backend = Backend::Chart;
  g.dim = n;
  g.resolution.assign(n, N);
  g.period.assign(n, L);
  g.scheme = s;
  return g;
}

GridSpec sphere3(int K, double r = 1.0) {
  GridSpec g;
  g.backend = Backend::Sphere3;
  g.dim = 3;
  g.degree = K;
  g.radius = r;
  return g;
}

GridSpec sphere2(int K) {
  GridSpec g;
  g.backend = Backend::Sphere2;
  g.dim = 2;
  g.degree = K;
  return g;
}

GridSpec product(int K, std::vector<int> N, std::vector<double> L, double r = 1.0) {
  GridSpec g;
  g.backend = Backend::Product;
  g.dim = 2 + static_cast<int>(N.size());
  g.degree = K;
  g.radius = r;
  g.resolution = N;
  g.period = L;
  return g;
}

double err_sin_d2(int N) {
  ChartGrid g(chart(3, N));
  Vec f = g.field("sin(x1)");
  return max_abs(g.diff(f, 0, 2) + f);
}

}  // namespace

TEST_CASE("chart weights are uniform and sum to the torus volume") {
  auto g = build_grid(chart(3, 16));
  CHECK(g->size() == 16 * 16 * 16);
  double h = 2 * pi / 16;
  CHECK(max_abs(g->weights().array() - h * h * h) == doctest::Approx(0.0));
  CHECK(g->volume() == doctest::Approx(std::pow(2 * pi, 3)).epsilon(1e-12));
}

TEST_CASE("field sampling and integration on T3") {
  auto g = build_grid(chart(3, 16));
  CHECK(max_abs(g->field("1").array() - 1.0) == 0.0);
  Vec f = g->field("sin(x1)*cos(x2)");
  const Vec& x1 = *g->variable("x1");
  const Vec& x2 = *g->variable("x2");
  Vec ref = x1.array().sin() * x2.array().cos();
  CHECK(max_abs(f - ref) <= 1e-15);
  CHECK(g->integrate(g->field("sin(x1)^2")) == doctest::Approx(std::pow(2 * pi, 3) / 2).epsilon(1e-12));
  CHECK(g->integrate(g->field("cos(3*x1)*cos(3*x1)*sin(x2)^2")) == doctest::Approx(std::pow(2 * pi, 3) / 4).epsilon(1e-12));
}

TEST_CASE("domain and identifier errors") {
  auto g = build_grid(chart(3, 8));
  try {
    g->field("1/(x1-x1)");
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == "ExprDomain");
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("node 0") != std::string::npos);
  }
  CHECK_THROWS_AS(g->field("log(x1)"), Error);
  CHECK_THROWS_AS(g->field("eta"), Error);
  try {
    parse_expr("1 + * 2");
    FAIL("expected a syntax error");
  } catch (const Error& e) {
    CHECK(e.code() == "ExprSyntax");
    CHECK(std::string(e.what()).find("byte 4") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_expr("2 x1"), Error);
  CHECK_THROWS_AS(parse_expr("foo(1)"), Error);
  CHECK_THROWS_AS(parse_expr("y1"), Error);
}

TEST_CASE("parser roundtrip corpus") {
  const char* corpus[] = {
      "1", "-1", "x1", "-x1", "pi", "1.5e-3", "2e10", "x1+x2", "x1-x2-x3", "x1*x2/x3",
      "x1^2", "x1^x2^x3", "-x1^2", "(x1+x2)*x3", "sin(x1)", "cos(x2)*sin(x3)", "exp(-x1^2)",
      "log(2+sin(x1))", "sqrt(1+x1*x1)", "abs(x1-pi)", "1/(2+cos(x1))", "0.1*sin(x1)*sin(x2)",
      "1 + 0.2*sin(x1)", "1+0.1*cos(theta)", "eta*phi", "theta^2-phi", "x4+x5+x6",
      "((x1))", "-(x1+x2)", "2^-1", "2^-x1", "x1/x2/x3", "x1-(x2-x3)", "exp(sin(cos(x1)))",
      "sqrt(abs(x1))*log(3)", "0.5*(x1^2+x2^2)", "1e-300*x1", "123456789.123456789",
      "x1*-x2", "-(-(-x1))", "sin(x1)^2+cos(x1)^2", "pi*pi/4", "x2^0.5", "abs(-3)",
      "exp(0.2*sin(x1)*sin(x2))", "1/(1+x1^2)^2", "cos(2*pi*x1/3)", "x1+x2*x3-x4/x5^x6",
      "(1+x1)^(1+x2)", "0.3333333333333333"};
  int count = 0;
  for (const char* text : corpus) {
    ExprPtr a = parse_expr(text);
    ExprPtr b = parse_expr(print_expr(a));
    CHECK_MESSAGE(expr_equal(a, b), text);
    CHECK(print_expr(a) == print_expr(b));
    ++count;
  }
  CHECK(count == 50);
  CHECK(expr_equal(parse_expr("2^3^2"), parse_expr("2^(3^2)")));
  CHECK(!expr_equal(parse_expr("2^3^2"), parse_expr("(2^3)^2")));
}

TEST_CASE("fourth-order differences converge at order >= 3.5") {
  double e16 = err_sin_d2(16), e32 = err_sin_d2(32);
  CHECK(std::log2(e16 / e32) >= 3.5);
  auto first = [](int N) {
    ChartGrid g(chart(3, N));
    return max_abs(g.diff(g.field("sin(x1)"), 0, 1) - g.field("cos(x1)"));
  };
  CHECK(std::log2(first(16) / first(32)) >= 3.5);
}

TEST_CASE("difference matrices match the matrix-free stencils") {
  for (DiffScheme s : {DiffScheme::FD4, DiffScheme::Fourier}) {
    ChartGrid g(chart(3, 8, s));
    Vec f = g.field("exp(sin(x1))*cos(x2)+sin(2*x3)");
    for (int a = 0; a < 3; ++a)
      for (int o : {1, 2}) CHECK(max_abs(g.diff_matrix(a, o) * f - g.diff(f, a, o)) <= 1e-11);
  }
}

TEST_CASE("Fourier scheme is exact on resolved modes") {
  ChartGrid g(chart(3, 12, DiffScheme::Fourier));
  Vec f = g.field("sin(3*x1)*cos(2*x2)");
  CHECK(max_abs(g.diff(f, 0, 1) - g.field("3*cos(3*x1)*cos(2*x2)")) <= 1e-12);
  CHECK(max_abs(g.diff(f, 1, 2) + 4.0 * f) <= 1e-12);
}

TEST_CASE("flat bilaplacian solve inverts (sum D2)^2 + eps") {
  for (DiffScheme s : {DiffScheme::FD4, DiffScheme::Fourier}) {
    ChartGrid g(chart(3, 8, s));
    Vec f = g.field("exp(sin(x1)*cos(x2))+x3*0");
    Vec u = g.flat_bilaplacian_solve(f, 1e-3);
    Vec lap = Vec::Zero(g.size());
    for (int a = 0; a < 3; ++a) lap += g.diff(u, a, 2);
    Vec bil = Vec::Zero(g.size());
    for (int a = 0; a < 3; ++a) bil += g.diff(lap, a, 2);
    CHECK(max_abs(bil + 1e-3 * u - f) <= 1e-9 * max_abs(f));
  }
}

TEST_CASE("grid construction errors") {
  CHECK_THROWS_AS(build_grid(chart(3, 4)), Error);
  CHECK_NOTHROW(build_grid(chart(3, 4, DiffScheme::Fourier)));
  CHECK_THROWS_AS(build_grid(chart(7, 5)), Error);
  GridSpec s = sphere3(8);
  s.dim = 4;
  CHECK_THROWS_AS(build_grid(s), Error);
  CHECK_THROWS_AS(build_grid(sphere3(1)), Error);
  ChartGrid g(chart(3, 8));
  CHECK_THROWS_AS(g.diff(Vec::Zero(5), 0, 1), Error);
  CHECK_THROWS_AS(g.integrate(Vec::Zero(5)), Error);
}

TEST_CASE("S3 spectral grid: volume, orthonormality, roundtrip, spectrum") {
  FrameGrid g(sphere3(8));
  CHECK(g.volume() == doctest::Approx(2 * pi * pi).epsilon(1e-12));
  CHECK(g.dofs() == 285);
  Mat G = g.basis().transpose() * g.weights().asDiagonal() * g.basis();
  CHECK((G - Mat::Identity(g.dofs(), g.dofs())).cwiseAbs().maxCoeff() <= 1e-12);
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  Vec c(g.dofs());
  for (auto& v : c) v = nd(rng);
  CHECK(max_abs(g.analysis(g.synthesis(c)) - c) <= 1e-11);
  Vec lapdiag = Mat(g.laplacian_matrix()).diagonal();
  double off = (Mat(g.laplacian_matrix()) - Mat(lapdiag.asDiagonal())).cwiseAbs().maxCoeff();
  CHECK(off <= 1e-10);
  for (Eigen::Index i = 0; i < g.dofs(); ++i) {
    int k = g.basis_degree()[i];
    CHECK(lapdiag[i] == doctest::Approx(-k * (k + 2)).epsilon(1e-11));
  }
}

TEST_CASE("S3 frame: derivatives, brackets and Hessian of a linear function") {
  FrameGrid g(sphere3(6, 2.0));
  const double r = 2.0;
  Vec x1 = *g.variable("x1"), x2 = *g.variable("x2"), x3 = *g.variable("x3"), x4 = *g.variable("x4");
  CHECK(max_abs(g.derivative(x4, 0) + x3 / r) <= 1e-12);
  CHECK(max_abs(g.derivative(x4, 1) - x2 / r) <= 1e-12);
  CHECK(max_abs(g.derivative(x4, 2) - x1 / r) <= 1e-12);
  Mat D1 = g.frame_matrix(0), D2 = g.frame_matrix(1), D3 = g.frame_matrix(2);
  CHECK((D1 * D2 - D2 * D1 - 2.0 / r * D3).cwiseAbs().maxCoeff() <= 1e-11);
  std::vector<Vec> df;
  for (int c = 0; c < 3; ++c) df.push_back(g.derivative(x4, c));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Vec hess = g.derivative(df[b], a) - g.connection(a, b, df);
      Vec ref = -x4 / (r * r) * (a == b ? 1.0 : 0.0);
      CHECK(max_abs(hess - ref) <= 1e-11);
    }
  CHECK(g.integrate(g.field("x4^2")) == doctest::Approx(2 * pi * pi * 8 / 4).epsilon(1e-12));
}

TEST_CASE("S2 spectral grid: volume, spectrum, frame geometry") {
  FrameGrid g(sphere2(6));
  CHECK(g.volume() == doctest::Approx(4 * pi).epsilon(1e-12));
  CHECK(g.dofs() == 49);
  Vec lapdiag = Mat(g.laplacian_matrix()).diagonal();
  for (Eigen::Index i = 0; i < g.dofs(); ++i) {
    int l = g.basis_degree()[i];
    CHECK(lapdiag[i] == doctest::Approx(-l * (l + 1)).epsilon(1e-11));
  }
  Vec x = *g.variable("x1"), y = *g.variable("x2"), z = *g.variable("x3");
  CHECK(max_abs(g.derivative(z, 0) - y) <= 1e-12);
  CHECK(max_abs(g.derivative(z, 1) + x) <= 1e-12);
  std::vector<Vec> df;
  for (int c = 0; c < 3; ++c) df.push_back(g.derivative(z, c));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Vec hess = g.derivative(df[b], a) - g.connection(a, b, df);
      CHECK(max_abs(hess + z.cwiseProduct(g.frame_metric(a, b))) <= 1e-11);
    }
}

TEST_CASE("product S2 x T^k grid") {
  FrameGrid g(product(4, {6, 6, 6}, {2 * pi, 2 * pi, 2 * pi}, 0.5));
  CHECK(g.size() == 50 * 216);
  CHECK(g.dofs() == 25 * 125);
  CHECK(g.frames() == 6);
  CHECK(g.volume() == doctest::Approx(4 * pi * 0.25 * std::pow(2 * pi, 3)).epsilon(1e-12));
  Vec f = g.field("cos(theta)*sin(2*x2)");
  CHECK(max_abs(g.derivative(f, 4) - g.field("2*cos(theta)*cos(2*x2)")) <= 1e-11);
  Vec c = g.analysis(f);
  CHECK(max_abs(g.synthesis(c) - f) <= 1e-12);
  Vec lapf = g.synthesis(g.laplacian_matrix() * c);
  CHECK(max_abs(lapf - (-2.0 / 0.25 - 4.0) * f) <= 1e-10);
}

TEST_CASE("homogeneous backend is a single node") {
  GridSpec s;
  s.backend = Backend::Homogeneous;
  s.model.kind = HomogeneousModel::Kind::Berger;
  s.model.lambda = 0.5;
  auto g = build_grid(s);
  CHECK(g->size() == 1);
  CHECK(g->volume() == doctest::Approx(pi * pi));
  CHECK(g->variable_names().empty());
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
  GaussRule r = gauss_legendre(7);
  CHECK(r.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
  double s = 0;
  for (int i = 0; i < 7; ++i) s += r.weights[i] * std::pow(r.nodes[i], 12);
  CHECK(s == doctest::Approx(2.0 / 13).epsilon(1e-13));
}

TEST_CASE("reductions are bit-identical across thread counts") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Vec x(200001);
  for (auto& v : x) v = u(rng);
  int saved = thread_count();
  set_thread_count(1);
  double a = pairwise_sum(x);
  set_thread_count(4);
  double b = pairwise_sum(x);
  set_thread_count(saved);
  CHECK(a == b);
  CHECK(a == pairwise_sum_serial(x.data(), x.size()));
  ChartGrid g(chart(3, 12));
  Vec f = g.field("exp(sin(x1)*cos(x2)*sin(x3))");
  Vec d1 = g.diff(f, 1, 2), d2 = g.diff(f, 1, 2);
  CHECK((d1.array() == d2.array()).all());
}

TEST_CASE("basis evaluation at points matches the nodal basis") {
  auto g3 = build_grid(sphere3(6, 1.5));
  const auto& f3 = static_cast<const FrameGrid&>(*g3);
  for (Eigen::Index k : {0, 17, 333}) {
    Vec x(4);
    for (int a = 0; a < 4; ++a) x[a] = (*g3->variable("x" + std::to_string(a + 1)))[k];
    CHECK((f3.basis_at(x) - f3.basis().row(k)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // the constant function at the north pole
  Vec north = Vec::Unit(4, 3);
  double c = f3.basis_at(north).dot(f3.analysis(Vec::Ones(g3->size())));
  CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
  auto gp = build_grid(product(4, {5, 6}, {2 * pi, 3.0}, 0.7));
  const auto& fp = static_cast<const FrameGrid&>(*gp);
  Eigen::Index k = 101;
  Vec t = gp->field("sin(theta)*cos(phi)");
  Vec y(5);
  y << std::sin((*gp->variable("theta"))[k]) * std::cos((*gp->variable("phi"))[k]),
      std::sin((*gp->variable("theta"))[k]) * std::sin((*gp->variable("phi"))[k]), std::cos((*gp->variable("theta"))[k]),
      (*gp->variable("x1"))[k], (*gp->variable("x2"))[k];
  CHECK((fp.basis_at(y) - fp.basis().row(k)).cwiseAbs().maxCoeff() <= 1e-12);
}
