#include <cmath>
#include <random>

#include "qcurv/invariants.hpp"

namespace qc {

namespace {

Vec signed_pow(const Vec& x, double e) {
  return x.unaryExpr([e](double v) { return std::copysign(std::pow(std::abs(v), e), v); });
}

double lp_sum(const Vec& f, const Vec& w, double p) {
  return weighted_sum(f.cwiseAbs().array().pow(p).matrix(), w);
}

// ⟨T φ(g), φ(g)⟩ / ‖φ(g)‖²_p with φ(g) = |g|^{q−1}g, so that ‖φ(g)‖_p^p = ∫|g|^{qp}
struct KernelForm {
  const Kernel& K;
  const Vec& w;
  double p, q;
  double value(const Vec& f) const {
    return weighted_dot(kernel_apply(K, f), f, w) / std::pow(lp_sum(f, w, p), 2.0 / p);
  }
  double operator()(const Vec& g, Vec& grad) const {
    Vec f = signed_pow(g, q);
    Vec Tf = kernel_apply(K, f);
    const double N = weighted_dot(Tf, f, w);
    const double Z = lp_sum(f, w, p);
    const double D = std::pow(Z, 2.0 / p);
    Vec ga = g.cwiseAbs().array().pow(q - 1).matrix();
    Vec dN = 2.0 * q * w.cwiseProduct(Tf).cwiseProduct(ga);
    Vec dZ = (q * p) * w.cwiseProduct(signed_pow(g, q * p - 1));
    Vec dD = (2.0 / p) * std::pow(Z, 2.0 / p - 1) * dZ;
    grad = -(dN * D - N * dD) / (D * D);
    return -N / D;
  }
};

// E(u) / ‖Pu‖²_p over coefficients c
struct PuForm {
  const DiscreteOperator& P;
  double p;
  Vec image(const Vec& c) const { return P.space().values(P.space().gram_solve(P.stiffness(c))); }
  double value(const Vec& c) const {
    const Vec& w = P.space().weights();
    return c.dot(P.stiffness(c)) / std::pow(lp_sum(image(c), w, p), 2.0 / p);
  }
  double operator()(const Vec& c, Vec& grad) const {
    const Space& sp = P.space();
    const Vec& w = sp.weights();
    Vec Sc = P.stiffness(c);
    Vec f = sp.values(sp.gram_solve(Sc));
    const double E = c.dot(Sc);
    const double Z = lp_sum(f, w, p);
    const double D = std::pow(Z, 2.0 / p);
    Vec h = signed_pow(f, p - 1);
    Vec dD = 2.0 * std::pow(Z, 2.0 / p - 1) * P.stiffness(sp.gram_solve(space_dual(sp, h)));
    grad = -(2.0 * Sc * D - E * dD) / (D * D);
    return -E / D;
  }
};

bool one_signed(const Vec& v) { return v.minCoeff() > 0 || v.maxCoeff() < 0; }

}  // namespace

double theta4_q_member(const MetricField& g, const Vec& rho) {
  const int n = g.n;
  if (n < 5) config_error("WrongDimension", "theta4 needs n >= 5");
  MetricField gt = conformal_deform(g, rho, Convention::RhoN4);
  CurvatureBundle bt = curvature_from_metric(gt);
  const double p = 2.0 * n / (n + 4);
  const double num = weighted_sum(bt.Q, gt.dmu);
  const double den = std::pow(lp_sum(bt.Q, gt.dmu, p), 2.0 / p);
  return 2.0 / (n - 4) * num / den;
}

namespace {

std::vector<Vec> seeded_starts(Eigen::Index N, const Theta4Options& opt) {
  std::vector<Vec> starts;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int k = 0; k < opt.restarts; ++k) {
    Vec f(N);
    for (Eigen::Index i = 0; i < N; ++i) f[i] = nd(rng);
    if (k == 0) f = Vec::Ones(N);
    starts.push_back(f);
  }
  return starts;
}

LbfgsOptions ascent_options(const Theta4Options& opt) {
  LbfgsOptions lo;
  lo.gtol = opt.gtol;
  lo.max_iter = opt.max_iter;
  lo.ftol = 1e-16;
  return lo;
}

// ascent of the kernel form from f0; replaces best when it improves on it
double kernel_ascent(const Kernel& GP, double p, double q, double scale, const Vec& f0, const Theta4Options& opt,
                     Vec& best) {
  const Vec& w = GP.space->weights();
  KernelForm kf{GP, w, p, q};
  auto obj = [&kf, scale](const Vec& x, Vec& g) {
    double v = kf(x, g);
    g /= scale;
    return v / scale;
  };
  Vec g0 = signed_pow(f0, 1.0 / q);
  g0 /= std::pow(lp_sum(f0, w, p), 1.0 / (q * p));
  LbfgsResult rk = lbfgs_minimize(obj, g0, [](const Vec& r) { return r; }, ascent_options(opt));
  Vec f = signed_pow(rk.x, q);
  f /= std::pow(lp_sum(f, w, p), 1.0 / p);
  const double v = kf.value(f);
  if (best.size() == 0 || v > kf.value(best)) best = f;
  return v;
}

// ascent of the pu form from coefficients c0, preconditioned by S⁻¹ M S⁻¹
double pu_ascent(const Kernel& GP, const DiscreteOperator& P, double p, double scale, const Vec& c0,
                 const Theta4Options& opt, Vec& best) {
  const Space& sp = P.space();
  PuForm pf{P, p};
  auto obj = [&pf, scale](const Vec& x, Vec& g) {
    double v = pf(x, g);
    g /= scale;
    return v / scale;
  };
  auto pre = [&GP, &sp](const Vec& r) { return Vec(GP.C * sp.gram_apply(Vec(GP.C * r))); };
  LbfgsResult rp = lbfgs_minimize(obj, c0, pre, ascent_options(opt));
  const double v = pf.value(rp.x);
  if (best.size() == 0 || v > pf.value(best)) best = rp.x;
  return v;
}

}  // namespace

Theta4 theta4_kernel_form(const Kernel& GP, int n, const Theta4Options& opt) {
  if (n < 5) config_error("WrongDimension", "theta4 needs n >= 5");
  if (!GP.dense()) config_error("KernelRepresentation", "theta4 needs a dense kernel");
  const Vec& w = GP.space->weights();
  const Eigen::Index N = w.size();
  const double p = 2.0 * n / (n + 4), q = double(n + 4) / (n - 4);
  Theta4 out;

  // single-node spikes: K(i,i) w_i^{2−2/p}
  Vec spikes = pole_values(GP).cwiseProduct(w.array().pow(2.0 - 2.0 / p).matrix());
  out.spike_value = spikes.maxCoeff(&out.spike_node);
  const double scale = std::max(std::abs(out.spike_value), 1e-300);

  std::vector<Vec> starts = seeded_starts(N, opt);
  Vec spike = Vec::Zero(N);
  spike[out.spike_node] = 1.0;
  starts.push_back(spike);

  out.kernel_form = out.spike_value;
  out.f = spike / std::pow(lp_sum(spike, w, p), 1.0 / p);
  for (const Vec& f0 : starts) {
    const double vk = kernel_ascent(GP, p, q, scale, f0, opt, out.f);
    out.kernel_restarts.push_back(vk);
    out.kernel_form = std::max(out.kernel_form, vk);
  }
  out.status = one_signed(out.f) ? "maximizer has one sign" : "maximizer changes sign";
  return out;
}

Theta4 theta4(const Kernel& GP, const DiscreteOperator& P, int n, const Theta4Options& opt) {
  if (n < 5 || P.dim() != n) config_error("WrongDimension", "theta4 needs n >= 5 and a matching operator");
  if (P.kind() != OpKind::Paneitz) config_error("OperatorKind", "theta4 needs the Paneitz operator");
  if (GP.space.get() != &P.space()) config_error("SpaceMismatch", "kernel and operator live on different spaces");
  Invertibility inv = invertibility(P);
  if (!inv.invertible())
    config_error("PaneitzKernel", "ker P is not trivial: |lambda|min = " + std::to_string(inv.smallest));

  Theta4 out = theta4_kernel_form(GP, n, opt);
  const Space& sp = P.space();
  const Eigen::Index N = sp.weights().size();
  const double p = 2.0 * n / (n + 4), q = double(n + 4) / (n - 4);
  const double scale = std::max(std::abs(out.spike_value), 1e-300);

  std::vector<Vec> starts = seeded_starts(N, opt);
  Vec spike = Vec::Zero(N);
  spike[out.spike_node] = 1.0;
  starts.push_back(spike);

  Vec c_best;
  out.pu_form = -INFINITY;
  for (const Vec& f0 : starts) {
    const double vp = pu_ascent(GP, P, p, scale, sp.coefficients(kernel_apply(GP, f0)), opt, c_best);
    out.pu_restarts.push_back(vp);
    out.pu_form = std::max(out.pu_form, vp);
  }
  // exchange maximizers through u = T f and f = P u
  for (int k = 0; k < opt.exchanges; ++k) {
    const double vp = pu_ascent(GP, P, p, scale, sp.coefficients(kernel_apply(GP, out.f)), opt, c_best);
    const double vk = kernel_ascent(GP, p, q, scale, sp.values(sp.gram_solve(P.stiffness(c_best))), opt, out.f);
    const bool moved = vp > out.pu_form || vk > out.kernel_form;
    out.pu_form = std::max(out.pu_form, vp);
    out.kernel_form = std::max(out.kernel_form, vk);
    if (!moved) break;
  }
  out.u = sp.values(c_best);
  out.status = one_signed(out.f) ? "maximizer has one sign" : "maximizer changes sign";

  std::vector<Vec> members{Vec::Ones(N)};
  for (const Vec& rho : {Vec(kernel_apply(GP, out.f)), out.u})
    if (one_signed(rho)) members.push_back(rho.maxCoeff() > 0 ? rho : Vec(-rho));
  for (const Vec& r : opt.q_factors) {
    if (r.size() != N) config_error("GridMismatch", "q-form factor length does not match grid");
    if (!(r.minCoeff() > 0)) config_error("NonPositiveFactor", "q-form factors must be positive");
    members.push_back(r);
  }
  const MetricField& g = sp.metric();
  out.q_form = -INFINITY;
  for (const Vec& r : members) {
    out.q_form = std::max(out.q_form, theta4_q_member(g, r));
    ++out.q_members;
  }
  return out;
}

}  // namespace qc
