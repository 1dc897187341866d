#include <algorithm>
#include <cmath>
#include <deque>

#include "qcurv/solvers.hpp"

namespace qc {

Vec space_dual(const Space& sp, const Vec& f) {
  Vec wf = f.cwiseProduct(sp.weights());
  if (sp.nodal()) return wf;
  return sp.frame()->basis().transpose() * wf;
}

namespace {

struct Probe {
  double a, f, d;
};

// minimizer of the cubic through two probes, kept inside [lo, hi] away from the ends
double cubic_step(const Probe& p, const Probe& q) {
  double lo = std::min(p.a, q.a), hi = std::max(p.a, q.a);
  double d1 = p.d + q.d - 3 * (p.f - q.f) / (p.a - q.a);
  double s = d1 * d1 - p.d * q.d;
  double a = 0.5 * (lo + hi);
  if (s >= 0 && std::isfinite(p.f) && std::isfinite(q.f)) {
    double d2 = std::copysign(std::sqrt(s), q.a - p.a);
    a = q.a - (q.a - p.a) * (q.d + d2 - d1) / (q.d - p.d + 2 * d2);
  }
  double margin = 0.1 * (hi - lo);
  if (!std::isfinite(a) || a < lo + margin || a > hi - margin) a = 0.5 * (lo + hi);
  return a;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, Vec x0, const std::function<Vec(const Vec&)>& precond,
                           const LbfgsOptions& opt) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  LbfgsResult res;
  Vec x = std::move(x0), g(x.size());
  double fx = f(x, g);
  if (!std::isfinite(fx)) numeric_error("InfeasibleStart", "objective is not finite at the starting point");
  res.history.push_back(fx);
  std::deque<Vec> S, Y;
  std::deque<double> R;
  for (int it = 0; it < opt.max_iter; ++it) {
    Vec hg = precond(g);
    double gn = std::sqrt(std::max(0.0, g.dot(hg)));
    res.gnorm = gn;
    if (gn <= opt.gtol) {
      res.converged = true;
      res.status = "gradient";
      break;
    }
    // two-loop recursion with H₀ = γ·precond
    Vec q = g;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      alpha[i] = R[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    Vec r = precond(q);
    if (!S.empty()) {
      Vec hy = precond(Y.back());
      r *= S.back().dot(Y.back()) / Y.back().dot(hy);
    }
    for (std::size_t i = 0; i < S.size(); ++i) {
      double beta = R[i] * Y[i].dot(r);
      r += S[i] * (alpha[i] - beta);
    }
    Vec d = -r;
    double d0 = g.dot(d);
    if (!(d0 < 0)) {
      S.clear(), Y.clear(), R.clear();
      d = -hg;
      d0 = g.dot(d);
      if (!(d0 < 0)) {
        res.status = "no descent direction";
        break;
      }
    }
    // strong Wolfe line search
    Vec gt(x.size());
    auto eval = [&](double a) {
      Vec xt = x + a * d;
      double ft = f(xt, gt);
      return Probe{a, ft, std::isfinite(ft) ? gt.dot(d) : NAN};
    };
    // sufficient decrease, or the approximate Wolfe test once f differences drop below roundoff
    const double fnoise = 1e-12 * std::max(1.0, std::abs(fx));
    auto decrease = [&](const Probe& t) {
      if (!std::isfinite(t.f)) return false;
      return t.f <= fx + c1 * t.a * d0 || (t.f <= fx + fnoise && t.d <= (2 * c1 - 1) * d0);
    };
    Probe p0{0, fx, d0}, prev = p0, acc{-1, 0, 0};
    double a = 1.0;
    auto zoom = [&](Probe lo, Probe hi) {
      for (int k = 0; k < 40; ++k) {
        Probe t = eval(std::isfinite(hi.f) ? cubic_step(lo, hi) : 0.5 * (lo.a + hi.a));
        if (!decrease(t) || (t.f >= lo.f && t.f > fx + fnoise)) {
          hi = t;
        } else {
          if (std::abs(t.d) <= -c2 * d0) return t;
          if (t.d * (hi.a - lo.a) >= 0) hi = lo;
          lo = t;
        }
        if (std::abs(hi.a - lo.a) < 1e-16 * std::max(1.0, lo.a)) break;
      }
      return lo.a > 0 ? lo : Probe{-1, 0, 0};
    };
    for (int k = 0; k < 40; ++k) {
      Probe t = eval(a);
      if (!decrease(t) || (k > 0 && t.f >= prev.f && t.f > fx + fnoise)) {
        acc = zoom(prev, t);
        break;
      }
      if (std::abs(t.d) <= -c2 * d0) {
        acc = t;
        break;
      }
      if (t.d >= 0) {
        acc = zoom(t, prev);
        break;
      }
      prev = t;
      a *= 2;
    }
    if (acc.a <= 0) {
      res.status = "line search failed";
      break;
    }
    // gradient at the accepted point
    Vec xn = x + acc.a * d, gn2(x.size());
    double fn = f(xn, gn2);
    Vec s = xn - x, y = gn2 - g;
    double sy = s.dot(y);
    if (sy > 1e-300) {
      S.push_back(s), Y.push_back(y), R.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) S.pop_front(), Y.pop_front(), R.pop_front();
    }
    x = std::move(xn), g = std::move(gn2);
    double fprev = fx;
    fx = fn;
    res.history.push_back(fx);
    res.iterations = it + 1;
    const std::size_t h = res.history.size();
    if (h > 5 && std::abs(res.history[h - 6] - fx) <= opt.ftol * std::max(1.0, std::abs(fx)) && fx <= fprev) {
      res.converged = true;
      res.status = "stalled decrease";
      break;
    }
  }
  if (res.status.empty()) res.status = "max iterations";
  res.x = std::move(x);
  res.f = fx;
  return res;
}

}  // namespace qc
