#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qcurv/solvers.hpp"
#include "support.hpp"

using namespace qc;
using namespace qct;

namespace {

OperatorPtr build(OpKind k, const MetricField& g) { return assemble_operator(k, g, curvature_from_metric(g)); }

}  // namespace

TEST_CASE("quasi-Newton minimizer on the Rosenbrock function") {
  Objective f = [](const Vec& x, Vec& g) {
    double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  Vec x0(2);
  x0 << -1.2, 1.0;
  LbfgsResult r = lbfgs_minimize(f, x0, [](const Vec& g) { return g; });
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1) <= 1e-8);
  CHECK(std::abs(r.x[1] - 1) <= 1e-8);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
}

TEST_CASE("continuation on the round sphere") {
  auto s3 = build_grid(sphere3(6));
  auto P = build(OpKind::Paneitz, metric_standard(s3));
  Kernel K = kernel_scale_add(-1.0, greens_kernel(*P), 0.0, constant_kernel(P->space_ptr(), 0.0));
  SolveReport r = continuation_dim3(K, *P);
  CHECK(r.scalars["u0"] == doctest::Approx(std::pow(pi * pi, 0.125)).epsilon(1e-14));
  CHECK(std::pow(pi * pi, 0.125) == doctest::Approx(1.3313).epsilon(1e-4));
  CHECK(r.path_newton[0] == 0);
  CHECK(r.converged);
  CHECK(r.path_t.back() == 1.0);
  CHECK(r.path_t.size() - 1 <= 40);
  const double u1 = std::pow(8.0 / 15.0, 0.125);
  // degree-1 modes are a conformal null direction at t = 1
  MESSAGE("pointwise error " << max_abs(r.solution - Vec::Constant(r.solution.size(), u1)) << ", residual " << r.residual);
  CHECK(max_abs(r.solution - Vec::Constant(r.solution.size(), u1)) <= 1e-6);
  CHECK(r.residual <= 1e-6);
  CHECK(continuation_residual(*P, r.solution) == r.residual);
  for (double m : r.path_umin) CHECK(m > 0);
  CHECK_THROWS_AS(continuation_dim3(greens_kernel(*P), *P), Error);
}

TEST_CASE("dual fixed point for a diagonal kernel") {
  auto g = build_grid(chart(5, 4, DiffScheme::Fourier));
  auto P = build(OpKind::Paneitz, metric_standard(g));
  const double c = 0.3;
  Kernel K = kernel_scale_add(c, identity_kernel(P->space_ptr()), 0.0, identity_kernel(P->space_ptr()));
  SolveReport r = dual_fixed_point(K, 5, 0.5, 1e-12);
  const double f = std::pow(0.5 * c, -9.0 / 8.0);
  CHECK(r.converged);
  CHECK(max_abs(r.solution - Vec::Constant(r.solution.size(), f)) <= 1e-12 * f);
  SolveReport again = dual_fixed_point(K, 5, 0.5, 1e-12, 10, nullptr, &r.solution);
  CHECK(again.iterations == 0);
  CHECK(again.converged);
}

TEST_CASE("dual fixed point for the Green kernel of P + m") {
  auto g = build_grid(chart(5, 4, DiffScheme::Fourier));
  auto P = build(OpKind::Paneitz, metric_standard(g));
  const Vec& w = P->space().weights();
  Vec m = g->field("0.02*(1 + 0.3*cos(x1) + 0.2*sin(x2 + x3))");
  Kernel K;
  K.space = P->space_ptr();
  K.symmetric = true;
  K.label = "(P+m)^-1";
  Mat A = P->stiffness_dense();
  A.diagonal() += w.cwiseProduct(m);
  K.C = A.ldlt().solve(Mat::Identity(A.rows(), A.cols()));
  REQUIRE(kernel_nodes(K).minCoeff() > 0);
  SolveReport r = dual_fixed_point(K, 5, 0.5, 1e-12);
  MESSAGE("iterations " << r.iterations << ", residual " << r.residual);
  CHECK(r.converged);
  // ρ = ½ T f solves (P + m)ρ = ½ ρ⁹
  Vec rho = 0.5 * kernel_apply(K, r.solution);
  Vec lhs = P->apply(rho) + m.cwiseProduct(rho);
  Vec rhs = 0.5 * rho.array().pow(9).matrix();
  CHECK(max_abs(lhs - rhs) <= 1e-9 * max_abs(rhs));
  CHECK(max_abs(rho - Vec::Constant(rho.size(), rho.mean())) > 1e-3 * max_abs(rho));
}

TEST_CASE("functional II on the torus") {
  auto g = build_grid(chart(4, 6, DiffScheme::Fourier));
  auto P0 = build(OpKind::Paneitz, metric_standard(g));
  SolveReport r0 = functional_II_min(*P0, 1e-10);
  CHECK(max_abs(r0.solution) <= 1e-12);
  CHECK(std::abs(r0.value) <= 1e-12);

  auto g16 = build_grid(chart(4, 16, DiffScheme::Fourier));
  Vec w0 = g16->field("0.2*sin(x1)*sin(x2)");
  auto P = build(OpKind::Paneitz, metric_conformal(g16, w0));
  SolveReport r = functional_II_min(*P, 1e-10);
  MESSAGE("iterations " << r.iterations << ", EL residual " << r.residual << ", |Q~| " << r.scalars["q_tilde_max"]);
  CHECK(r.converged);
  CHECK(std::abs(r.scalars["kappa"]) <= 1e-8);
  CHECK(std::abs(r.scalars["kappa_after"] - r.scalars["kappa"]) <= 1e-8);
  CHECK(r.scalars["q_tilde_max"] <= 1e-4);
  Vec target = -w0;
  target.array() -= weighted_sum(target, P->space().weights()) / pairwise_sum(P->space().weights());
  CHECK(max_abs(r.solution - target) <= 1e-3);
  for (std::size_t i = 1; i < r.energies.size(); ++i) CHECK(r.energies[i] <= r.energies[i - 1] + 1e-11 * std::abs(r.energies[i - 1]));
}

TEST_CASE("Y4 quotient on the round sphere and on the flat torus") {
  auto s3 = build_grid(sphere3(5));
  auto P = build(OpKind::Paneitz, metric_standard(s3));
  const double round = -0.5 * (15.0 / 8.0) * 2 * pi * pi * std::cbrt(2 * pi * pi);
  CHECK(y4_quotient(*P, Vec::Ones(s3->size())) == doctest::Approx(round).epsilon(1e-12));
  SolveReport r = y4_minimize(*P);
  MESSAGE("round S3 quotient " << r.value << " vs " << round << ", status " << r.status);
  CHECK(r.value >= round - 1e-8);
  CHECK(r.value <= y4_quotient(*P, r.solution) + 1e-12);

  auto t5 = build_grid(chart(5, 4, DiffScheme::Fourier));
  auto P5 = build(OpKind::Paneitz, metric_standard(t5));
  SolveReport f = y4_minimize(*P5);
  MESSAGE("flat T5 quotient " << f.value);
  CHECK(std::abs(f.value) <= 1e-8);
  Vec u = f.solution;
  CHECK(max_abs(u - Vec::Constant(u.size(), u.mean())) <= 1e-3 * max_abs(u));
}

TEST_CASE("Y4 against the positive-only quotient") {
  auto g = build_grid(product(3, {4, 4, 4}, {2 * pi, 2 * pi, 2 * pi}, 0.5));
  auto P = build(OpKind::Paneitz, metric_conformal(g, g->field("0.1*cos(x1)")));
  QuotientOptions o;
  SolveReport all = y4_minimize(*P, o);
  o.positive_only = true;
  SolveReport pos = y4_minimize(*P, o);
  MESSAGE("Y4 " << all.value << ", Y4+ " << pos.value);
  CHECK(all.value <= pos.value + 1e-9 * std::abs(pos.value));
}

TEST_CASE("Phi_beta functional") {
  auto s3 = build_grid(sphere3(5));
  auto mg = metric_standard(s3);
  auto P = build(OpKind::Paneitz, mg);
  Vec one = Vec::Ones(s3->size());
  const double vol = 2 * pi * pi;
  CHECK(phi_beta(*P, one, 0.0) == doctest::Approx(-(15.0 / 16.0) * vol).epsilon(1e-12));
  CHECK(phi_beta(*P, one, -1.0) == doctest::Approx(-(15.0 / 16.0) * vol + 2 * 0.75 * 0.75 * vol).epsilon(1e-12));

  QuotientOptions o;
  o.start = one;
  SolveReport r = phi_beta_minimize(*P, -1.0 / 12, o);
  CHECK(r.iterations == 0);
  CHECK(r.residual <= 1e-10);

  QuotientOptions q;
  SolveReport a = phi_beta_minimize(*P, 0.0, q), b = y4_minimize(*P, q);
  CHECK(std::abs(a.value - b.value) <= 1e-10 * std::abs(b.value));

  auto mc = metric_conformal(s3, s3->field("0.1*x1"));
  auto Pc = build(OpKind::Paneitz, mc);
  SolveReport c = phi_beta_minimize(*Pc, -0.5, q);
  MESSAGE("conformal S3, beta=-1/2: value " << c.value << ", phi_beta_check residual " << c.residual << ", status " << c.status);
  PhiBetaCheck e = phi_beta_check(mc, c.solution, -0.5);
  CHECK(e.residual == c.residual);
}

TEST_CASE("gauge invariance of the quotient minimizer") {
  auto s3 = build_grid(sphere3(5));
  auto P = build(OpKind::Paneitz, metric_conformal(s3, s3->field("0.1*x1*x2")));
  QuotientOptions o;
  o.start = s3->field("1 + 0.1*x3");
  SolveReport a = y4_minimize(*P, o);
  o.start *= 7.5;
  SolveReport b = y4_minimize(*P, o);
  CHECK(max_abs(a.solution - b.solution) <= 1e-9);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
}
