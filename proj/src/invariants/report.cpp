#include <cmath>

#include "qcurv/invariants.hpp"

namespace qc {

namespace {

std::string q_class(const Vec& Q) {
  const double tol = 1e-8 * std::max(max_abs(Q), 1e-300);
  if (Q.minCoeff() > tol) return "positive";
  if (Q.minCoeff() >= -tol) return Q.maxCoeff() <= tol ? "zero" : "nonnegative";
  if (Q.maxCoeff() < -tol) return "negative";
  return "mixed";
}

void scalar_summary(const CurvatureBundle& b, InvariantReport& r) {
  r.values["volume"] = pairwise_sum(b.dmu);
  r.values["q_min"] = b.Q.minCoeff();
  r.values["q_max"] = b.Q.maxCoeff();
  r.values["q_integral"] = weighted_sum(b.Q, b.dmu);
  r.labels["q_class"] = q_class(b.Q);
  const double tol = 1e-8 * std::max(max_abs(b.Q), 1e-300);
  r.hypotheses["Q>=0"] = b.Q.minCoeff() >= -tol;
  if (b.n == 4) r.values["kappa"] = weighted_sum(b.Q, b.dmu);
  if (b.n == 3) {
    Sigma2Diagnostics c = sigma2_diagnostics(b);
    r.values["q_minus_j2_integral"] = c.q_minus_j2_integral;
    r.values["sigma2_integral"] = c.sigma2_integral;
    r.values["sigma2_identity_residual"] = c.sigma2_residual;
    r.hypotheses["intQ-intJ2/6>=0"] = c.q_minus_j2_integral >= 0;
    r.hypotheses["sigma2(A)<0"] = b.sigma2.maxCoeff() < 0;
  }
}

}  // namespace

InvariantReport collect_invariants(const MetricField& g, const InvariantOptions& opt) {
  InvariantReport r;
  if (!g.grid) config_error("GridMismatch", "metric has no grid");
  if (g.grid->backend() == Backend::Homogeneous) {
    CurvatureBundle b = homogeneous_catalog(g.grid->spec().model);
    scalar_summary(b, r);
    r.notes.push_back("homogeneous model: curvature scalars only");
    return r;
  }
  const int n = g.n;
  CurvatureBundle b = curvature_from_metric(g);
  scalar_summary(b, r);

  OperatorPtr L = assemble_operator(OpKind::ConformalLaplacian, g, b);
  OperatorPtr P = assemble_operator(OpKind::Paneitz, g, b);
  Spectrum sl = spectrum(*L, 1);
  Spectrum sp = spectrum(*P, 2);
  r.values["lambda1_L"] = sl.values[0];
  r.values["lambda1_P"] = sp.values[0];
  r.values["lambda2_P"] = sp.values[1];
  r.hypotheses["Y>0"] = sl.values[0] > 1e-8;
  r.flags["lambda2_P>0"] = sp.values[1] > 0;

  if (n == 3) {
    NuReport nu = nu_invariants(*P);
    r.values["nu_global"] = nu.nu_global;
    r.values["nu_tol"] = nu.tol;
    r.nu_table.assign(nu.nu.data(), nu.nu.data() + nu.nu.size());
    r.nu_nodes = nu.nodes;
    r.flags["NN"] = nu.NN;
    r.flags["P"] = nu.P;
    r.flags["NN+_implied"] = nu.NN_plus_implied;
    r.flags["P+_implied"] = nu.P_plus_implied;
    r.flags["lambda2_agrees_with_NN"] = (sp.values[1] > 0) == nu.NN;
    r.notes.push_back(nu.note);
    EnergyDecomposition lm = energy_decomposition_check(*P, {});
    r.hypotheses["2Jg>=A"] = lm.two_j_dominates;
  }

  if (opt.quotients && n != 4) {
    QuotientOptions qo;
    qo.seed = opt.seed;
    Y4Pair y = y4_pair(*P, qo);
    r.values["Y4"] = y.all.value;
    r.values["Y4_plus"] = y.positive.value;
    r.flags["Y4<=Y4_plus"] = y.all.value <= y.positive.value;
    if (!y.all.status.empty()) r.labels["Y4_status"] = y.all.status;
  }

  if (n >= 5 && opt.theta) {
    Invertibility inv = invertibility(*P);
    r.values["P_smallest_abs_eigenvalue"] = inv.smallest;
    r.flags["kerP=0"] = inv.invertible();
    if (inv.invertible()) {
      Kernel G = greens_kernel(*P);
      Theta4Options to;
      to.seed = opt.seed;
      to.restarts = opt.theta_restarts;
      Theta4 t = theta4(G, *P, n, to);
      r.values["theta4_kernel"] = t.kernel_form;
      r.values["theta4_pu"] = t.pu_form;
      r.values["theta4_q"] = t.q_form;
      r.labels["theta4_status"] = t.status;
    } else {
      r.notes.push_back("ker P is not trivial: theta4 not evaluated");
    }
  }

  if (n != 4 && opt.gamma_radius) {
    try {
      Kernel GL = greens_kernel(*L);
      HGamma hg = build_H_gamma(GL, *P);
      RadiusReport rr = spectral_radius(hg.gamma);
      r.values["gamma1_radius"] = rr.dense_radius >= 0 ? rr.dense_radius : rr.radius;
      r.values["gamma1_rowsum_bound"] = rr.rowsum_bound;
    } catch (const Error& e) {
      r.notes.push_back(std::string("gamma1 radius not evaluated: ") + e.what());
    }
  }
  return r;
}

}  // namespace qc
