#include <cmath>

#include "qcurv/solvers.hpp"

namespace qc {

namespace {

double lp_norm(const Vec& f, const Vec& w, double p) {
  Vec a = f.cwiseAbs().array().pow(p).matrix();
  return std::pow(weighted_sum(a, w), 1.0 / p);
}

}  // namespace

SolveReport dual_fixed_point(const Kernel& GP, int n, double damping, double tol, int max_iter,
                             const DiscreteOperator* P, const Vec* f0) {
  if (n < 5) config_error("UnsupportedDimension", "the dual fixed point is for n ≥ 5");
  if (!(damping > 0 && damping <= 1)) config_error("BadOption", "damping must lie in (0, 1]");
  if (GP.dense()) {
    Mat Kn = kernel_nodes(GP);
    if (!(Kn.minCoeff() >= 0) || !(Kn.maxCoeff() > 0)) numeric_error("GreenSignViolation", "G_P is not positive");
  }
  const Space& sp = *GP.space;
  const Vec& w = sp.weights();
  const double p = (n + 4.0) / (n - 4.0), a = (n - 4.0) / 2.0, r = 2.0 * n / (n + 4.0);
  auto map = [&](const Vec& f) {
    Vec t = a * kernel_apply(GP, f);
    if (!(t.minCoeff() > 0)) numeric_error("GreenSignViolation", "T_{G_P} f is not positive");
    return Vec(t.array().pow(p).matrix());
  };
  // the map is homogeneous of degree p, so a direction g fixes the scale: λ^{p−1} = ‖g‖/‖F(g)‖
  auto scaled = [&](const Vec& g, const Vec& Fg) { return Vec(std::pow(lp_norm(g, w, r) / lp_norm(Fg, w, r), 1.0 / (p - 1)) * g); };
  auto residual = [&](const Vec& f) { return max_abs(map(f) - f) / max_abs(f); };

  SolveReport rep;
  rep.gauge = "L^{2n/(n+4)} direction, scale from homogeneity";
  Vec g = f0 ? *f0 : Vec::Ones(sp.nodes());
  if (g.size() != sp.nodes()) config_error("GridMismatch", "initial f has the wrong length");
  if (!(g.minCoeff() > 0)) config_error("BadOption", "initial f must be positive");
  Vec f = f0 ? g : scaled(g, map(g));
  double res = residual(f);
  const double res0 = res;
  g = f / lp_norm(f, w, r);
  int it = 0;
  while (res > tol && it < max_iter) {
    Vec F = map(g);
    Vec next = (1 - damping) * g + damping * F / lp_norm(F, w, r);
    g = next / lp_norm(next, w, r);
    f = scaled(g, map(g));
    res = residual(f);
    ++it;
    rep.energies.push_back(kernel_apply(GP, g).dot(g.cwiseProduct(w)));
    if (!std::isfinite(res) || res > 1e6 * std::max(res0, 1e-300)) numeric_error("Divergence", "fixed-point residual grew without bound");
  }
  rep.iterations = it;
  rep.converged = res <= tol;
  rep.status = rep.converged ? "converged" : "max iterations";
  rep.residual = res;
  rep.solution = f;
  rep.value = lp_norm(f, w, r);
  if (P) {
    Vec rho = a * kernel_apply(GP, f);
    rep.scalars["q_residual"] = max_abs(q_from_transformation(*P, rho, Convention::RhoN4) - Vec::Ones(rho.size()));
  }
  return rep;
}

}  // namespace qc
