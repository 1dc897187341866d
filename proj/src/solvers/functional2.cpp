#include <cmath>
#include <numbers>

#include "qcurv/solvers.hpp"

namespace qc {

namespace {

struct IIParts {
  double value, kappa, exp_integral;
};

IIParts ii_eval(const DiscreteOperator& P, const Vec& a, const Vec& dualQ, double kappa, double vol, Vec* grad) {
  const Space& sp = P.space();
  Vec w = sp.values(a);
  Vec e4 = (4 * w).array().exp().matrix();
  double ie = weighted_sum(e4, sp.weights());
  Vec Sa = P.stiffness(a);
  double v = a.dot(Sa) + 2 * dualQ.dot(a) - 0.5 * kappa * std::log(ie / vol);
  if (grad) *grad = 2 * Sa + 2 * dualQ - 2 * kappa / ie * space_dual(sp, e4);
  return {v, kappa, ie};
}

}  // namespace

double functional_II(const DiscreteOperator& P, const Vec& w) {
  const Space& sp = P.space();
  const Vec& Q = P.bundle().Q;
  const double kappa = weighted_sum(Q, sp.weights()), vol = pairwise_sum(sp.weights());
  return ii_eval(P, sp.coefficients(w), space_dual(sp, Q), kappa, vol, nullptr).value;
}

SolveReport functional_II_min(const DiscreteOperator& P, double tol) {
  if (P.dim() != 4 || P.kind() != OpKind::Paneitz) config_error("UnsupportedDimension", "functional II needs the n = 4 Paneitz operator");
  const Space& sp = P.space();
  const MetricField& g = sp.metric();
  const Vec& Q = P.bundle().Q;
  const double kappa = weighted_sum(Q, sp.weights()), vol = pairwise_sum(sp.weights());
  SolveReport rep;
  rep.scalars["kappa"] = kappa;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  if (!(kappa < 16 * pi2)) numeric_error("HypothesisViolation", "κ = " + std::to_string(kappa) + " is not below 16π²");
  Spectrum sp2 = spectrum(P, 2, true);
  const double scale = std::max(1.0, std::abs(sp2.values[1]));
  rep.scalars["lambda0"] = sp2.values[0];
  rep.scalars["lambda1"] = sp2.values[1];
  if (sp2.values[0] < -1e-9 * scale) numeric_error("HypothesisViolation", "P has a negative eigenvalue");
  if (std::abs(sp2.values[0]) <= 1e-9 * scale) {
    Vec v = sp2.vectors.col(0);
    if (max_abs(v - Vec::Constant(v.size(), v.mean())) > 1e-6 * max_abs(v))
      numeric_error("HypothesisViolation", "near-kernel of P is not the constants");
  }
  if (!(sp2.values[1] > 1e-9 * scale)) numeric_error("HypothesisViolation", "kernel of P is larger than the constants");

  const Vec dualQ = space_dual(sp, Q);
  Objective f = [&](const Vec& a, Vec& grad) { return ii_eval(P, a, dualQ, kappa, vol, &grad).value; };
  auto pre = [&](const Vec& r) { return P.precondition(r, 1e-3); };
  LbfgsOptions opt;
  opt.gtol = tol;
  opt.max_iter = 2000;
  LbfgsResult lr = lbfgs_minimize(f, Vec::Zero(sp.dofs()), pre, opt);
  rep.energies = lr.history;
  rep.iterations = lr.iterations;
  rep.status = lr.status;
  Vec w = sp.values(lr.x);
  w.array() -= weighted_sum(w, sp.weights()) / vol;
  rep.solution = w;
  rep.gauge = "mean zero";
  rep.value = functional_II(P, w);
  Vec e4 = (4 * w).array().exp().matrix();
  double ie = weighted_sum(e4, sp.weights());
  rep.residual = max_abs(P.apply(w) + Q - kappa / ie * e4);
  rep.converged = lr.converged;
  // curvature of e^{2w}g computed afresh, independent of P
  CurvatureBundle bt = curvature_from_metric(conformal_deform(g, w, Convention::E2W));
  double mu_t = pairwise_sum(bt.dmu);
  rep.scalars["kappa_after"] = weighted_sum(bt.Q, bt.dmu);
  rep.scalars["q_tilde_max"] = max_abs(bt.Q);
  rep.scalars["q_tilde_volume_deviation"] = max_abs(bt.Q * mu_t - Vec::Constant(bt.Q.size(), kappa));
  rep.scalars["volume_after"] = mu_t;
  return rep;
}

}  // namespace qc
