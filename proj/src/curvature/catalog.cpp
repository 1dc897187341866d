#include <cmath>
#include <numbers>

#include "qcurv/curvature.hpp"

namespace qc {

namespace {

using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

Small gather(const std::vector<Vec>& T, int m, Eigen::Index i) {
  Small M(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) M(a, b) = T[a * m + b][i];
  return M;
}

void scatter(std::vector<Vec>& T, const Small& M, int m, Eigen::Index i) {
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) T[a * m + b][i] = M(a, b);
}

}  // namespace

double unit_ball_volume(int n) { return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0); }

double sphere_volume(int n, double r) {
  return 2.0 * std::pow(std::numbers::pi, (n + 1) / 2.0) / std::tgamma((n + 1) / 2.0) * std::pow(r, n);
}

Vec tensor_trace(const CurvatureBundle& b, const std::vector<Vec>& T) {
  Vec out = Vec::Zero(b.size());
  for (int a = 0; a < b.m; ++a)
    for (int c = 0; c < b.m; ++c) out += b.ginv[a * b.m + c].cwiseProduct(T[a * b.m + c]);
  return out;
}

Vec tensor_norm2(const CurvatureBundle& b, const std::vector<Vec>& T) {
  const int m = b.m;
  Vec out(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    Small Gi = gather(b.ginv, m, i), M = gather(T, m, i);
    out[i] = (Gi * M * Gi * M.transpose()).trace();
  }
  return out;
}

void curvature_algebra(CurvatureBundle& b) {
  const int n = b.n, m = b.m;
  if (n < 3) config_error("UnsupportedDimension", "curvature pipeline needs n >= 3");
  const Eigen::Index N = b.Rc[0].size();
  b.R.resize(N), b.J.resize(N), b.absA2.resize(N), b.absRc2.resize(N), b.sigma2.resize(N);
  b.A.assign(m * m, Vec(N));
  b.Aring.assign(m * m, Vec(N));
  b.E.assign(m * m, Vec(N));
  b.has_weyl = b.has_riemann && n == 4;
  if (b.has_weyl) {
    b.W.assign(m * m * m * m, Vec(N));
    b.absW2.resize(N);
  }
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < N; ++i) {
    Small G = gather(b.g, m, i), Gi = gather(b.ginv, m, i), Rc = gather(b.Rc, m, i);
    double R = (Gi * Rc).trace();
    double J = R / (2.0 * (n - 1));
    Small A = (Rc - J * G) / double(n - 2);
    double trA = (Gi * A).trace();
    Small Ar = A - trA / n * G;
    Small E = Rc - R / n * G;
    double A2 = (Gi * A * Gi * A).trace();
    b.R[i] = R;
    b.J[i] = J;
    b.absA2[i] = A2;
    b.absRc2[i] = (Gi * Rc * Gi * Rc).trace();
    b.sigma2[i] = 0.5 * (trA * trA - A2);
    scatter(b.A, A, m, i);
    scatter(b.Aring, Ar, m, i);
    scatter(b.E, E, m, i);
    if (b.has_weyl) {
      std::vector<double> W(m * m * m * m), Wup(m * m * m * m);
      auto at = [m](int a, int c, int d, int e) { return ((a * m + c) * m + d) * m + e; };
      for (int a = 0; a < m; ++a)
        for (int c = 0; c < m; ++c)
          for (int d = 0; d < m; ++d)
            for (int e = 0; e < m; ++e)
              W[at(a, c, d, e)] = b.riemann[at(a, c, d, e)][i] -
                                  (A(a, d) * G(c, e) + A(c, e) * G(a, d) - A(a, e) * G(c, d) - A(c, d) * G(a, e));
      // raise all four indices, one at a time
      std::vector<double> tmp = W;
      for (int slot = 0; slot < 4; ++slot) {
        for (int a = 0; a < m; ++a)
          for (int c = 0; c < m; ++c)
            for (int d = 0; d < m; ++d)
              for (int e = 0; e < m; ++e) {
                int idx[4] = {a, c, d, e};
                double s = 0.0;
                for (int k = 0; k < m; ++k) {
                  int j2[4] = {a, c, d, e};
                  j2[slot] = k;
                  s += Gi(idx[slot], k) * tmp[at(j2[0], j2[1], j2[2], j2[3])];
                }
                Wup[at(a, c, d, e)] = s;
              }
        tmp = Wup;
      }
      double w2 = 0.0;
      for (int k = 0; k < m * m * m * m; ++k) {
        b.W[k][i] = W[k];
        w2 += W[k] * tmp[k];
      }
      b.absW2[i] = w2;
    }
  }
}

void curvature_q(CurvatureBundle& b) {
  const double n = b.n;
  b.Q = -b.lapJ - 2.0 * b.absA2 + (n / 2.0) * b.J.cwiseAbs2();
  b.q_forms.clear();
  b.q_forms.emplace_back("schouten", b.Q);
  const double cR2 = (n * n * n - 4 * n * n + 16 * n - 16) / (8 * (n - 1) * (n - 1) * (n - 2) * (n - 2));
  b.q_forms.emplace_back("ricci", Vec(-b.lapR / (2 * (n - 1)) - 2.0 / ((n - 2) * (n - 2)) * b.absRc2 +
                                      cR2 * b.R.cwiseAbs2()));
  if (b.n == 3) b.q_forms.emplace_back("sigma2", Vec(-b.lapJ + 4.0 * b.sigma2 - 0.5 * b.J.cwiseAbs2()));
}

GaussBonnet weyl_gauss_bonnet(const CurvatureBundle& b) {
  if (b.n != 4) config_error("WrongDimension", "Gauss-Bonnet integrand needs n = 4");
  if (!b.has_weyl) config_error("WeylNotComputed", "Weyl tensor not available on this backend");
  GaussBonnet r;
  r.weyl_energy = weighted_sum(b.absW2, b.dmu);
  r.q_integral = weighted_sum(b.Q, b.dmu);
  r.cgb_lhs = r.q_integral + 0.25 * r.weyl_energy;
  return r;
}

CurvatureBundle homogeneous_catalog(const HomogeneousModel& model) {
  using K = HomogeneousModel::Kind;
  if (!(model.r > 0) || !(model.lambda > 0) || !(model.L > 0))
    config_error("ModelParameters", "model parameters must be positive");
  int n = model.n;
  double vol = 0.0;
  if (model.kind == K::Berger) n = 3;
  if (model.kind == K::ProductS2S1) n = 3;
  if (model.kind == K::ProductS2Tk) {
    if (model.periods.empty()) config_error("ModelParameters", "product-S2xTk needs torus periods");
    n = 2 + static_cast<int>(model.periods.size());
  }
  if (n < 3 || n > 8) config_error("ModelParameters", "model dimension must be between 3 and 8");
  for (double p : model.periods)
    if (!(p > 0)) config_error("ModelParameters", "periods must be positive");
  const int m = n;
  std::vector<double> Rm(m * m * m * m, 0.0);
  auto at = [m](int a, int c, int d, int e) { return ((a * m + c) * m + d) * m + e; };
  auto constant_block = [&](int dim, double Kc) {
    for (int a = 0; a < dim; ++a)
      for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d)
          for (int e = 0; e < dim; ++e)
            Rm[at(a, c, d, e)] = Kc * ((a == d) * (c == e) - (a == e) * (c == d));
  };
  switch (model.kind) {
    case K::RoundSphere:
      constant_block(n, 1.0 / (model.r * model.r));
      vol = sphere_volume(n, model.r);
      break;
    case K::ProductS2Tk:
    case K::ProductS2S1: {
      constant_block(2, 1.0 / (model.r * model.r));
      vol = 4.0 * std::numbers::pi * model.r * model.r;
      if (model.kind == K::ProductS2S1) vol *= model.L;
      for (double p : model.periods) vol *= p;
      break;
    }
    case K::Berger: {
      // orthonormal left-invariant frame e1 = X1/λ, e2 = X2, e3 = X3 with
      // [X1,X2] = 2X3 cyclic; Levi-Civita by the Koszul formula
      const double l = model.lambda;
      double c[3][3][3] = {};
      auto set = [&](int i, int j, int k, double v) { c[i][j][k] = v, c[j][i][k] = -v; };
      set(0, 1, 2, 2.0 / l);
      set(1, 2, 0, 2.0 * l);
      set(2, 0, 1, 2.0 / l);
      double G[3][3][3];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) G[i][j][k] = 0.5 * (c[i][j][k] - c[j][k][i] + c[k][i][j]);
      for (int a = 0; a < 3; ++a)
        for (int bb = 0; bb < 3; ++bb)
          for (int cc = 0; cc < 3; ++cc)
            for (int d = 0; d < 3; ++d) {
              double s = 0.0;
              for (int k = 0; k < 3; ++k)
                s += G[d][bb][k] * G[cc][k][a] - G[cc][bb][k] * G[d][k][a] - c[cc][d][k] * G[k][bb][a];
              Rm[at(a, bb, cc, d)] = s;
            }
      vol = 2.0 * std::numbers::pi * std::numbers::pi * l;
      break;
    }
  }
  CurvatureBundle b;
  b.n = n;
  b.m = m;
  b.g.assign(m * m, Vec::Zero(1));
  b.ginv.assign(m * m, Vec::Zero(1));
  for (int a = 0; a < m; ++a) b.g[a * m + a][0] = b.ginv[a * m + a][0] = 1.0;
  b.has_riemann = true;
  b.riemann.assign(m * m * m * m, Vec(1));
  for (int k = 0; k < m * m * m * m; ++k) b.riemann[k][0] = Rm[k];
  b.Rc.assign(m * m, Vec::Zero(1));
  for (int cc = 0; cc < m; ++cc)
    for (int e = 0; e < m; ++e)
      for (int a = 0; a < m; ++a) b.Rc[cc * m + e][0] += Rm[at(a, cc, a, e)];
  curvature_algebra(b);
  b.lapJ = b.lapR = Vec::Zero(1);
  curvature_q(b);
  b.dmu = Vec::Constant(1, vol);
  return b;
}

}  // namespace qc
