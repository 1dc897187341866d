#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qcurv/invariants.hpp"
#include "support.hpp"

using namespace qc;
using namespace qct;

namespace {

OperatorPtr build(OpKind k, const MetricField& g) { return assemble_operator(k, g, curvature_from_metric(g)); }

MetricField perturbed_t5(int N) {
  auto g = build_grid(chart(5, N, DiffScheme::Fourier));
  std::vector<std::string> c = {"1+0.1*sin(x2)", "0", "0", "0", "0", "1+0.1*cos(x3)", "0", "0",
                                "0",             "1", "0", "0", "1", "0", "1"};
  std::vector<Vec> v;
  for (const auto& e : c) v.push_back(g->field(e));
  return metric_components(g, v);
}

// seeded random element of the span of harmonics of degree ≤ kmax
Vec random_harmonic(const FrameGrid& fg, int kmax, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec c = Vec::Zero(fg.dofs());
  for (Eigen::Index j = 0; j < fg.dofs(); ++j)
    if (fg.basis_degree()[j] <= kmax) c[j] = nd(rng);
  c[0] += 3.0;
  return fg.synthesis(c);
}

// seeded trigonometric polynomial with |k_i| ≤ kmax on a 3-torus chart
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

}  // namespace

TEST_CASE("kappa anchors") {
  auto t4 = build_grid(chart(4, 6, DiffScheme::Fourier));
  CHECK(std::abs(kappa_invariant(curvature_from_metric(metric_standard(t4)), *t4)) <= 1e-12);

  GridSpec s4;
  s4.backend = Backend::Homogeneous;
  s4.dim = 4;
  s4.model = model(HomogeneousModel::Kind::RoundSphere, 4);
  auto pg = build_grid(s4);
  CHECK(kappa_invariant(homogeneous_catalog(s4.model), *pg) == doctest::Approx(16 * pi * pi).epsilon(1e-14));

  auto g12 = build_grid(chart(4, 12, DiffScheme::Fourier));
  for (std::string w : {"0.2*sin(x1)*sin(x2)", "0.1*cos(x1+x3) - 0.05*sin(x4)", "0.15*cos(x2)*cos(x3)*sin(x4)"}) {
    auto mg = metric_conformal(g12, g12->field(w));
    const double k = kappa_invariant(curvature_from_metric(mg), *g12);
    MESSAGE(w << ": kappa " << k);
    CHECK(std::abs(k) <= 1e-10);
  }
  auto t3 = build_grid(chart(3, 6));
  CHECK_THROWS_AS(kappa_invariant(curvature_from_metric(metric_standard(t3)), *t3), Error);
}

TEST_CASE("Theta4 of a diagonal kernel is a single-node spike") {
  auto g = build_grid(chart(5, 4, DiffScheme::Fourier));
  auto mg = metric_conformal(g, g->field("0.1*cos(x1) + 0.05*sin(x2)"));
  SpacePtr sp = std::make_shared<Space>(mg);
  const double c = 0.7;
  Kernel K = kernel_scale_add(c, identity_kernel(sp), 0.0, identity_kernel(sp));
  Theta4Options o;
  o.restarts = 5;
  Theta4 t = theta4_kernel_form(K, 5, o);
  const double expect = c * std::pow(mg.dmu.minCoeff(), -4.0 / 5.0);
  CHECK(t.spike_value == doctest::Approx(expect).epsilon(1e-12));
  CHECK(t.kernel_form == doctest::Approx(expect).epsilon(1e-12));
  for (double v : t.kernel_restarts) CHECK(v <= expect * (1 + 1e-12));
  CHECK_THROWS_AS(theta4_kernel_form(K, 4, o), Error);
}

TEST_CASE("Theta4 duality on a perturbed T5") {
  MetricField mg = perturbed_t5(4);
  auto P = build(OpKind::Paneitz, mg);
  Invertibility inv = invertibility(*P);
  MESSAGE("|lambda|min " << inv.smallest << ", |lambda|max " << inv.norm);
  REQUIRE(inv.invertible());
  Kernel G = greens_kernel(*P);
  Theta4Options o;
  o.restarts = 3;
  o.max_iter = 1500;
  Theta4 t = theta4(G, *P, 5, o);
  MESSAGE("kernel " << t.kernel_form << ", pu " << t.pu_form << ", q " << t.q_form << ", spike " << t.spike_value
                    << ", " << t.status);
  CHECK(std::abs(t.kernel_form - t.pu_form) <= 1e-6 * std::abs(t.kernel_form));
  CHECK(t.kernel_form >= t.q_form);
  CHECK(t.kernel_form >= t.spike_value);

  Y4Pair y = y4_pair(*P);
  MESSAGE("Y4 " << y.all.value << ", Y4+ " << y.positive.value);
  CHECK(y.all.value <= y.positive.value);
  CHECK(y.all.value == y4_quotient(*P, y.all.solution));

  auto flat = build(OpKind::Paneitz, metric_standard(build_grid(chart(5, 4, DiffScheme::Fourier))));
  CHECK_THROWS_AS(theta4(greens_kernel(*P), *flat, 5), Error);
}

TEST_CASE("nu on a flat 3-torus against the brute-force constrained problem") {
  auto g = build_grid(chart(3, 6));
  auto P = build(OpKind::Paneitz, metric_standard(g));
  NuReport r = nu_invariants(*P);
  CHECK(r.nodes.size() == 216);
  for (Eigen::Index k : {0, 37, 215}) {
    const double bf = nu_bruteforce(*P, k);
    CHECK(std::abs(r.nu[k] - bf) <= 1e-9 * std::max(1.0, std::abs(bf)));
  }
  MESSAGE("flat T3 nu_global " << r.nu_global << ", lambda1 " << r.lambda1);
  CHECK(r.nu_global >= 0);
  CHECK(r.NN);
  CHECK(r.NN_plus_implied == r.NN);
  for (Eigen::Index k = 0; k < r.nu.size(); ++k) CHECK(r.nu[k] >= r.lambda1 - 1e-12 * r.norm);
}

TEST_CASE("nu on the round sphere follows the truncated secular equation") {
  for (int K : {8, 12}) {
    auto s3 = build_grid(sphere3(K));
    auto P = build(OpKind::Paneitz, metric_standard(s3));
    NuReport r = nu_invariants(*P, 64);
    // Σ_{k≤K} (k+1)² / (λ_k − μ) = 0 with λ_k = (k(k+2) − 5/4)(k(k+2) + 3/4)
    auto f = [K](double mu) {
      double s = 0;
      for (int k = 0; k <= K; ++k) {
        double e = k * (k + 2.0);
        s += (k + 1.0) * (k + 1.0) / ((e - 1.25) * (e + 0.75) - mu);
      }
      return s;
    };
    double lo = -15.0 / 16 + 1e-12, hi = 105.0 / 16 - 1e-12;
    for (int it = 0; it < 200; ++it) (f(0.5 * (lo + hi)) < 0 ? lo : hi) = 0.5 * (lo + hi);
    const double oracle = 0.5 * (lo + hi);
    MESSAGE("K=" << K << ": nu_global " << r.nu_global << ", spread " << r.nu.maxCoeff() - r.nu.minCoeff()
                 << ", oracle " << oracle << ", lambda2 " << r.lambda2);
    CHECK(std::abs(r.nu_global - oracle) <= 1e-9);
    CHECK(r.nu.maxCoeff() - r.nu.minCoeff() <= 1e-9);
    CHECK(r.NN);
    CHECK(r.lambda2 == doctest::Approx(105.0 / 16).epsilon(1e-10));
    const double bf = nu_bruteforce(*P, r.nodes[0]);
    CHECK(std::abs(r.nu[0] - bf) <= 1e-9);
  }
}

TEST_CASE("lambda2 and NN agree on conformal spheres") {
  auto s3 = build_grid(sphere3(6));
  for (std::string w : {"0", "0.1*x1", "0.2*x1*x2 - 0.1*x3", "0.15*cos(theta)"}) {
    auto P = build(OpKind::Paneitz, metric_conformal(s3, s3->field(w)));
    NuReport r = nu_invariants(*P, 64);
    MESSAGE(w << ": lambda2 " << r.lambda2 << ", nu_global " << r.nu_global);
    CHECK((r.lambda2 > 0) == r.NN);
  }
}

TEST_CASE("energy decomposition on the round sphere") {
  auto s3 = build_grid(sphere3(8));
  const auto& fg = static_cast<const FrameGrid&>(*s3);
  auto P = build(OpKind::Paneitz, metric_standard(s3));
  std::vector<Vec> tests;
  for (int s = 0; s < 10; ++s) tests.push_back(random_harmonic(fg, 4, 100 + s));
  EnergyDecomposition r = energy_decomposition_check(*P, tests);
  MESSAGE("round S3 discrepancy " << r.discrepancy);
  CHECK(r.discrepancy <= 1e-8);
  CHECK_FALSE(r.sigma2_negative);

  auto mc = metric_conformal(s3, s3->field("0.1*x1 + 0.05*x2*x3"));
  auto Pc = build(OpKind::Paneitz, mc);
  EnergyDecomposition one = energy_decomposition_check(*Pc, {Vec::Ones(s3->size())});
  const double e1 = -0.5 * weighted_sum(Pc->bundle().Q, mc.dmu);
  MESSAGE("u = 1: direct " << one.direct[0] << ", decomposed " << one.decomposed[0] << ", -1/2 int Q " << e1);
  CHECK(std::abs(one.decomposed[0] - e1) <= 1e-9 * std::abs(e1));
  CHECK(std::abs(one.direct[0] - e1) <= 1e-9 * std::abs(e1));
}

TEST_CASE("energy decomposition on 3-tori") {
  auto gf = build_grid(chart(3, 8, DiffScheme::Fourier));
  auto Pf = build(OpKind::Paneitz, metric_standard(gf));
  std::vector<Vec> tf;
  for (int s = 0; s < 10; ++s) tf.push_back(random_trig(*gf, 2, 200 + s));
  EnergyDecomposition flat = energy_decomposition_check(*Pf, tf);
  CHECK(flat.discrepancy <= 1e-10);

  double d[2];
  int res[2] = {12, 24};
  for (int i = 0; i < 2; ++i) {
    auto g = build_grid(chart(3, res[i]));
    auto P = build(OpKind::Paneitz, metric_conformal(g, g->field("0.1*sin(x1) + 0.05*cos(x2 + x3)")));
    std::vector<Vec> t;
    for (int s = 0; s < 10; ++s) t.push_back(random_trig(*g, 1, 300 + s));
    d[i] = energy_decomposition_check(*P, t).discrepancy;
  }
  const double order = std::log2(d[0] / d[1]);
  MESSAGE("chart T3 discrepancy " << d[0] << " -> " << d[1] << ", order " << order);
  CHECK(order >= 3);
}

TEST_CASE("energy decomposition hypotheses on S2xS1") {
  auto g = build_grid(product(6, {8}, {2 * pi}, 1.0));
  const auto& fg = static_cast<const FrameGrid&>(*g);
  auto P = build(OpKind::Paneitz, metric_standard(g));
  std::vector<Vec> tests;
  for (int s = 0; s < 10; ++s) tests.push_back(random_harmonic(fg, 3, 400 + s));
  EnergyDecomposition r = energy_decomposition_check(*P, tests);
  MESSAGE("S2xS1 discrepancy " << r.discrepancy << ", sigma2 max " << r.sigma2_max << ", 2Jg-A min eig "
                               << r.two_j_min_eig);
  CHECK(r.sigma2_negative);
  CHECK(r.two_j_dominates);
  CHECK(r.summand_signs);
  CHECK(r.discrepancy <= 1e-8);
  Spectrum s = spectrum(*P, 1);
  CHECK(s.values[0] > 0);
}

TEST_CASE("integral identities for the sigma2 diagnostics") {
  auto s3 = build_grid(sphere3(6));
  Sigma2Diagnostics round = sigma2_diagnostics(curvature_from_metric(metric_standard(s3)));
  CHECK(round.sigma2_integral == doctest::Approx(0.75 * 2 * pi * pi).epsilon(1e-12));
  CHECK(round.sigma2_residual <= 1e-9);
  CHECK(round.pointwise_identity <= 1e-12);

  Sigma2Diagnostics conf = sigma2_diagnostics(curvature_from_metric(metric_conformal(s3, s3->field("0.1*x1 + 0.05*x2*x3"))));
  MESSAGE("conformal S3 identity residual " << conf.sigma2_residual);
  CHECK(conf.sigma2_residual <= 1e-9);
  CHECK(conf.pointwise_identity <= 1e-10);

  auto p = build_grid(product(6, {8}, {2 * pi}, 1.0));
  Sigma2Diagnostics prod = sigma2_diagnostics(curvature_from_metric(metric_standard(p)));
  CHECK(prod.sigma2_residual <= 1e-9);
  CHECK(prod.sigma2_integral == doctest::Approx(-0.25 * 8 * pi * pi).epsilon(1e-12));

  auto t3 = build_grid(chart(3, 8));
  Sigma2Diagnostics flat = sigma2_diagnostics(curvature_from_metric(metric_standard(t3)), 0.0);
  CHECK(std::abs(flat.q_minus_j2_integral) <= 1e-14);
  CHECK(std::abs(flat.sigma2_integral) <= 1e-14);
  CHECK(flat.sigma2_residual <= 1e-14);
  CHECK(flat.lj_field <= 1e-14);
}

TEST_CASE("invariant report on a conformal sphere") {
  auto s3 = build_grid(sphere3(5));
  InvariantOptions o;
  o.gamma_radius = false;
  InvariantReport a = collect_invariants(metric_standard(s3), o);
  InvariantReport b = collect_invariants(metric_conformal(s3, s3->field("0.1*x1")), o);
  CHECK(a.flags["NN"] == b.flags["NN"]);
  CHECK(a.flags["P"] == b.flags["P"]);
  CHECK(a.flags["Y4<=Y4_plus"]);
  CHECK(b.hypotheses["Y>0"]);
  CHECK(a.labels["q_class"] == "positive");
  MESSAGE("Y4 " << a.values["Y4"] << " vs " << b.values["Y4"]);
  CHECK(std::abs(a.values["Y4"] - b.values["Y4"]) <= 1e-3 * std::abs(a.values["Y4"]));
}
