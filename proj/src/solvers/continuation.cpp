#include <algorithm>
#include <cmath>

#include "qcurv/solvers.hpp"

namespace qc {

namespace {

// Yᵀ diag(dμ·d) Y
Mat weighted_gram(const Space& sp, const Vec& d) {
  Vec wd = d.cwiseProduct(sp.weights());
  if (sp.nodal()) return wd.asDiagonal();
  const Mat& Y = sp.frame()->basis();
  return Y.transpose() * wd.asDiagonal() * Y;
}

}  // namespace

double continuation_residual(const DiscreteOperator& P, const Vec& u) {
  Vec r = P.apply(u) + 0.5 * u.array().pow(-7.0).matrix();
  return max_abs(r);
}

SolveReport continuation_dim3(const Kernel& K, const DiscreteOperator& P, const ContinuationOptions& opt) {
  if (P.dim() != 3 || P.kind() != OpKind::Paneitz) config_error("UnsupportedDimension", "continuation solves the n = 3 Paneitz equation");
  if (!K.dense()) config_error("KernelRepresentation", "continuation needs a dense kernel");
  if (K.space.get() != &P.space()) config_error("GridMismatch", "K and P live on different spaces");
  {
    Mat Kn = kernel_nodes(K);
    Eigen::Index i, j;
    double lo = Kn.minCoeff(&i, &j);
    if (!(lo > 0))
      config_error("KSignViolation", "K = −G_P has entry " + std::to_string(lo) + " at nodes (" + std::to_string(i) + "," +
                                         std::to_string(j) + ")");
  }
  const Space& sp = P.space();
  const Eigen::Index d = sp.dofs();
  const Mat C1 = constant_kernel(K.space, 1.0).C;
  const double vol = pairwise_sum(sp.weights());

  SolveReport rep;
  rep.gauge = "none (u > 0)";
  double u0 = std::pow(vol / 2, 1.0 / 8);
  Vec a = sp.coefficients(Vec::Constant(sp.nodes(), u0));
  rep.scalars["u0"] = u0;

  auto newton = [&](double t, Vec& c, int& its) {
    Mat Ct = (1 - t) * C1 + t * K.C;
    for (its = 0; its <= opt.newton_max; ++its) {
      Vec u = sp.values(c);
      if (!(u.minCoeff() > opt.u_floor)) return false;
      Vec F = c - 0.5 * Ct * space_dual(sp, u.array().pow(-7.0).matrix());
      double fn = max_abs(sp.values(F));
      if (!std::isfinite(fn)) return false;
      if (fn <= opt.newton_tol * max_abs(u)) return true;
      if (its == opt.newton_max) break;
      Mat J = Mat::Identity(d, d) + 3.5 * Ct * weighted_gram(sp, u.array().pow(-8.0).matrix());
      Vec step = J.partialPivLu().solve(F);
      double lam = 1.0;
      while (lam > 1e-4 && !((sp.values(Vec(c - lam * step))).minCoeff() > opt.u_floor)) lam *= 0.5;
      c -= lam * step;
    }
    return false;
  };

  int its = 0;
  if (!newton(0.0, a, its)) numeric_error("NewtonDivergence", "Newton failed at t = 0");
  rep.path_t.push_back(0.0);
  rep.path_newton.push_back(its);
  {
    Vec u = sp.values(a);
    rep.path_umin.push_back(u.minCoeff());
    rep.path_umax.push_back(u.maxCoeff());
  }
  rep.scalars["t0_residual"] = 0;
  double t = 0, dt = 1.0 / opt.steps;
  int total = its;
  while (t < 1.0) {
    double tn = std::min(1.0, t + dt);
    Vec trial = a;
    if (newton(tn, trial, its)) {
      a = trial;
      t = tn;
      total += its;
      Vec u = sp.values(a);
      rep.path_t.push_back(t);
      rep.path_newton.push_back(its);
      rep.path_umin.push_back(u.minCoeff());
      rep.path_umax.push_back(u.maxCoeff());
    } else {
      dt *= 0.5;
      ++rep.halvings;
      if (dt < opt.min_step)
        numeric_error("NewtonDivergence", "step fell below " + std::to_string(opt.min_step) + " at t = " + std::to_string(t));
    }
  }
  rep.iterations = total;
  rep.solution = sp.values(a);
  if (!(rep.solution.minCoeff() > opt.u_floor)) numeric_error("PositivityFloor", "u approached 0");
  rep.residual = continuation_residual(P, rep.solution);
  Vec galerkin = sp.values(sp.gram_solve(Vec(P.stiffness(a) + 0.5 * space_dual(sp, rep.solution.array().pow(-7.0).matrix()))));
  rep.scalars["galerkin_residual"] = max_abs(galerkin);
  rep.scalars["steps_accepted"] = static_cast<double>(rep.path_t.size() - 1);
  rep.value = rep.solution.mean();
  rep.converged = true;
  rep.status = "reached t = 1";
  return rep;
}

}  // namespace qc
