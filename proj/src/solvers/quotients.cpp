#include <cmath>
#include <random>

#include "qcurv/solvers.hpp"

namespace qc {

namespace {

constexpr double kFloor = 1e-6;

// value of the normalized quotient and its gradient in coefficients
class Quotient {
 public:
  Quotient(const DiscreteOperator& P, double beta, bool positive)
      : P_(P), sp_(P.space()), n_(P.dim()), beta_(beta), positive_(positive || P.dim() == 3) {
    if (beta_ != 0) lap_ = assemble_operator(OpKind::Laplacian, sp_.metric(), P.bundle());
    vol_ = pairwise_sum(sp_.weights());
    ones_dual_ = space_dual(sp_, Vec::Ones(sp_.nodes()));
  }

  bool positive() const { return positive_; }

  // Φ_β(u) and, when asked, its gradient density (without the 2Sa part)
  double phi_extra(const Vec& u, Vec* density) const {
    if (beta_ == 0) {
      if (density) density->setZero(u.size());
      return 0;
    }
    const Vec& J = P_.bundle().J;
    Vec inv = u.cwiseInverse();
    Vec v = -2 * lap_->apply(inv) + J.cwiseProduct(inv);
    Vec u4 = u.array().pow(4).matrix();
    double val = -0.5 * beta_ * weighted_sum(u4.cwiseProduct(v).cwiseProduct(v), sp_.weights());
    if (density) {
      Vec u4v = u4.cwiseProduct(v);
      *density = -0.5 * beta_ *
                 (4 * u.array().cube() * v.array().square() + 4 * lap_->apply(u4v).array() / u.array().square() -
                  2 * J.array() * u.array().square() * v.array())
                     .matrix();
    }
    return val;
  }

  double value(const Vec& a, Vec* grad, double mu) const {
    Vec u = sp_.values(a);
    if (positive_ && !(u.minCoeff() > kFloor * u.maxCoeff())) return INFINITY;
    Vec Sa = P_.stiffness(a);
    Vec dens;
    double phi = a.dot(Sa) + phi_extra(u, grad ? &dens : nullptr);
    double q;
    if (n_ == 3) {
      Vec u6 = u.array().pow(-6.0).matrix();
      double I = weighted_sum(u6, sp_.weights());
      double N = std::cbrt(I);
      q = phi * N;
      if (grad) {
        Vec dphi = 2 * Sa + space_dual(sp_, dens);
        Vec dN = -2 * std::pow(I, -2.0 / 3) * space_dual(sp_, u.array().pow(-7.0).matrix());
        *grad = dphi * N + phi * dN;
      }
    } else {
      const double p = 2.0 * n_ / (n_ - 4);
      Vec up = u.cwiseAbs().array().pow(p).matrix();
      double I = weighted_sum(up, sp_.weights());
      double N = std::pow(I, 2 / p);
      q = phi / N;
      if (grad) {
        Vec dphi = 2 * Sa + space_dual(sp_, dens);
        Vec s = u.cwiseAbs().array().pow(p - 2).matrix().cwiseProduct(u);
        Vec dN = 2 * std::pow(I, 2 / p - 1) * space_dual(sp_, s);
        *grad = (dphi * N - phi * dN) / (N * N);
      }
    }
    if (mu > 0) {
      // scale-invariant barrier −μ∫log(u/ū)dμ
      double ubar = weighted_sum(u, sp_.weights()) / vol_;
      Vec lg = (u / ubar).array().log().matrix();
      q -= mu * weighted_sum(lg, sp_.weights());
      if (grad) *grad -= mu * (space_dual(sp_, u.cwiseInverse()) - ones_dual_ / ubar);
    }
    return q;
  }

  // Euler–Lagrange residual Pu = c·u⁻⁷ (n = 3) or Pu = c|u|^{p−2}u (n ≥ 5)
  std::pair<double, double> el_residual(const Vec& u) const {
    Vec Pu = P_.apply(u);
    double E = P_.energy(u);
    Vec rhs;
    if (n_ == 3) {
      rhs = u.array().pow(-7.0).matrix();
      rhs *= E / weighted_sum(u.array().pow(-6.0).matrix(), sp_.weights());
    } else {
      const double p = 2.0 * n_ / (n_ - 4);
      rhs = u.cwiseAbs().array().pow(p - 2).matrix().cwiseProduct(u);
      rhs *= E / weighted_sum(u.cwiseAbs().array().pow(p).matrix(), sp_.weights());
    }
    double r = max_abs(Pu - rhs);
    return {r, r / std::max(max_abs(rhs), 1e-300)};
  }

 private:
  const DiscreteOperator& P_;
  const Space& sp_;
  int n_;
  double beta_;
  bool positive_;
  OperatorPtr lap_;
  double vol_;
  Vec ones_dual_;
};

Vec random_start(const DiscreteOperator& P, std::uint64_t seed) {
  const Space& sp = P.space();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0, 1);
  Vec noise(sp.nodes());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = N(rng);
  Vec s = sp.values(P.precondition(space_dual(sp, noise), 1.0));
  s.array() -= s.mean();
  return Vec::Ones(sp.nodes()) + 0.2 * s / std::max(max_abs(s), 1e-300);
}

Vec gauge(const Vec& u, int n, const Vec& w) {
  if (n == 3) return u / u.maxCoeff();
  const double p = 2.0 * n / (n - 4);
  double nrm = std::pow(weighted_sum(u.cwiseAbs().array().pow(p).matrix(), w), 1 / p);
  Vec v = u / nrm;
  if (v.sum() < 0) v = -v;
  return v;
}

SolveReport minimize(const DiscreteOperator& P, double beta, const QuotientOptions& opt) {
  if (P.kind() != OpKind::Paneitz) config_error("ConventionMismatch", "the quotients use the Paneitz operator");
  const int n = P.dim();
  if (n == 4) config_error("UnsupportedDimension", "Y₄ quotients are defined for n = 3 and n ≥ 5");
  const Space& sp = P.space();
  Quotient Qf(P, beta, opt.positive_only);
  Vec u0 = opt.start.size() ? opt.start : random_start(P, opt.seed);
  if (u0.size() != sp.nodes()) config_error("GridMismatch", "start has the wrong length");
  Vec a = sp.coefficients(gauge(u0, n, sp.weights()));
  auto pre = [&](const Vec& r) { return P.precondition(r, 1e-3); };
  SolveReport rep;
  LbfgsOptions lo;
  lo.gtol = opt.tol;
  lo.max_iter = opt.max_iter;
  std::vector<double> mus;
  if (Qf.positive()) {
    double q0 = std::abs(Qf.value(a, nullptr, 0));
    double mu0 = 1e-3 * std::max(1.0, q0) / pairwise_sum(sp.weights());
    for (int k = 0; k < 6; ++k) mus.push_back(mu0 * std::pow(10.0, -k));
  }
  mus.push_back(0.0);
  bool conv = false;
  for (double mu : mus) {
    Objective f = [&](const Vec& x, Vec& g) { return Qf.value(x, &g, mu); };
    LbfgsResult lr = lbfgs_minimize(f, a, pre, lo);
    rep.iterations += lr.iterations;
    rep.energies.insert(rep.energies.end(), lr.history.begin(), lr.history.end());
    a = sp.coefficients(gauge(sp.values(lr.x), n, sp.weights()));
    conv = lr.converged;
    rep.status = lr.status;
    if (lr.f < -1e6) break;
  }
  Vec u = sp.values(a);
  rep.solution = u;
  rep.value = Qf.value(a, nullptr, 0);
  rep.converged = conv;
  rep.gauge = n == 3 ? "max u = 1" : "‖u‖_{L^{2n/(n-4)}} = 1";
  auto [abs_res, rel_res] = Qf.el_residual(u);
  rep.residual = abs_res;
  rep.scalars["el_relative"] = rel_res;
  rep.scalars["min_u"] = u.minCoeff();
  rep.scalars["max_u"] = u.maxCoeff();
  rep.scalars["sign_changes"] = (u.minCoeff() < 0 && u.maxCoeff() > 0) ? 1 : 0;
  if (rep.value < -1e6) {
    rep.converged = false;
    rep.status = "quotient below -1e6: Y4 = -inf suspected";
  } else if (Qf.positive() && u.minCoeff() <= 10 * kFloor * u.maxCoeff()) {
    rep.converged = false;
    rep.status = "minimizing sequence degenerating";
  }
  return rep;
}

}  // namespace

double y4_quotient(const DiscreteOperator& P, const Vec& u) {
  Quotient Qf(P, 0.0, false);
  return Qf.value(P.space().coefficients(u), nullptr, 0);
}

double phi_beta(const DiscreteOperator& P, const Vec& u, double beta) {
  if (P.dim() != 3) config_error("UnsupportedDimension", "Φ_β is defined for n = 3");
  Quotient Qf(P, beta, true);
  Vec a = P.space().coefficients(u);
  return a.dot(P.stiffness(a)) + Qf.phi_extra(P.space().values(a), nullptr);
}

SolveReport y4_minimize(const DiscreteOperator& P, const QuotientOptions& opt) { return minimize(P, 0.0, opt); }

Y4Pair y4_pair(const DiscreteOperator& P, const QuotientOptions& opt) {
  Y4Pair out;
  QuotientOptions o = opt;
  o.positive_only = true;
  out.positive = minimize(P, 0.0, o);
  o.positive_only = false;
  out.all = minimize(P, 0.0, o);
  o.start = out.positive.solution;
  SolveReport warm = minimize(P, 0.0, o);
  if (warm.value < out.all.value) out.all = std::move(warm);
  if (out.positive.value < out.all.value) {
    out.all = out.positive;
    out.all.status = "positive minimizer is the best unrestricted point found";
  }
  return out;
}

SolveReport phi_beta_minimize(const DiscreteOperator& P, double beta, const QuotientOptions& opt) {
  if (P.dim() != 3) config_error("UnsupportedDimension", "Φ_β is defined for n = 3");
  if (beta > 0) config_error("BadOption", "β must be ≤ 0");
  SolveReport rep = minimize(P, beta, opt);
  PhiBetaCheck e = phi_beta_check(P.space().metric(), rep.solution, beta);
  rep.scalars["quotient_el_residual"] = rep.residual;
  rep.residual = e.residual;
  rep.scalars["F_beta"] = e.F;
  rep.scalars["phi_beta_mean"] = e.mean;
  return rep;
}

PhiBetaCheck phi_beta_check(const MetricField& g, const Vec& u, double beta) {
  CurvatureBundle b = curvature_from_metric(conformal_deform(g, u, Convention::RhoNeg4));
  Vec X = b.Q + 2 * beta * b.lapJ + beta * b.J.cwiseAbs2();
  PhiBetaCheck e;
  double vol = pairwise_sum(b.dmu);
  e.mean = weighted_sum(X, b.dmu) / vol;
  e.residual = max_abs(X - Vec::Constant(X.size(), e.mean));
  e.F = weighted_sum(b.Q, b.dmu) + beta * weighted_sum(b.J.cwiseAbs2(), b.dmu);
  return e;
}

}  // namespace qc
