#include <Eigen/Eigenvalues>
#include <cmath>

#include "qcurv/invariants.hpp"

namespace qc {

namespace {

using Field = std::vector<Vec>;

// first derivatives in the working frame and the covariant Hessian D²u
void derivatives(const DiscreteOperator& P, const Vec& u, Field& du, Field& hess) {
  const Space& sp = P.space();
  const MetricField& g = sp.metric();
  const CurvatureBundle& b = P.bundle();
  const int m = g.m;
  du.assign(m, Vec());
  hess.assign(m * m, Vec());
  if (sp.nodal()) {
    const ChartGrid& cg = *sp.chart();
    for (int a = 0; a < m; ++a) du[a] = cg.diff(u, a, 1);
    for (int a = 0; a < m; ++a)
      for (int c = a; c < m; ++c) {
        Vec h = a == c ? cg.diff(u, a, 2) : Vec(0.5 * (cg.diff(du[c], a, 1) + cg.diff(du[a], c, 1)));
        for (int k = 0; k < m; ++k) h -= b.christoffel[(k * m + a) * m + c].cwiseProduct(du[k]);
        hess[a * m + c] = h;
        hess[c * m + a] = h;
      }
    return;
  }
  const FrameGrid& fg = *sp.frame();
  const Eigen::Index N = fg.size();
  const bool flat_w = g.w.size() == 0 || max_abs(g.w) == 0.0;
  Field dw(m, Vec::Zero(N));
  for (int a = 0; a < m; ++a) {
    du[a] = fg.derivative(u, a);
    if (!flat_w) dw[a] = fg.derivative(g.w, a);
  }
  Vec dwdu = Vec::Zero(N);
  for (int c = 0; c < m; ++c) dwdu += dw[c].cwiseProduct(du[c]);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) {
      Vec h = fg.derivative(du[c], a) - fg.connection(a, c, du);
      h -= dw[a].cwiseProduct(du[c]) + dw[c].cwiseProduct(du[a]);
      h += fg.frame_metric(a, c).cwiseProduct(dwdu);
      hess[a * m + c] = h;
    }
  for (int a = 0; a < m; ++a)
    for (int c = a + 1; c < m; ++c) {
      Vec s = 0.5 * (hess[a * m + c] + hess[c * m + a]);
      hess[a * m + c] = s;
      hess[c * m + a] = s;
    }
}

// T(∇u, ∇u) = g^{ac} g^{bd} T_ab u_c u_d
Vec contract(const CurvatureBundle& b, const Field& T, const Field& du) {
  const int m = b.m;
  const Eigen::Index N = b.size();
  Field up(m, Vec::Zero(N));
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) up[a] += b.ginv[a * m + c].cwiseProduct(du[c]);
  Vec out = Vec::Zero(N);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) out += T[a * m + c].cwiseProduct(up[a]).cwiseProduct(up[c]);
  return out;
}

double min_eigenvalue(const Field& T, int m, Eigen::Index i) {
  Mat M(m, m);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) M(a, c) = T[a * m + c][i];
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace

EnergyDecomposition energy_decomposition_check(const DiscreteOperator& P, const std::vector<Vec>& tests) {
  if (P.dim() != 3 || P.kind() != OpKind::Paneitz) config_error("WrongDimension", "the decomposition needs P with n = 3");
  const Space& sp = P.space();
  const MetricField& g = sp.metric();
  const CurvatureBundle& b = P.bundle();
  const int m = b.m;
  const Eigen::Index N = sp.nodes();
  const Vec& W = sp.weights();
  EnergyDecomposition r;

  r.sigma2_max = b.sigma2.maxCoeff();
  r.sigma2_negative = r.sigma2_max < 0;
  Field T(m * m);
  double scale = 0.0;
  for (int k = 0; k < m * m; ++k) {
    T[k] = 2.0 * b.J.cwiseProduct(g.g[k]) - b.A[k];
    scale = std::max(scale, max_abs(T[k]));
  }
  r.two_j_min_eig = INFINITY;
  for (Eigen::Index i = 0; i < N; ++i) r.two_j_min_eig = std::min(r.two_j_min_eig, min_eigenvalue(T, m, i));
  r.two_j_dominates = r.two_j_min_eig >= -1e-10 * std::max(1.0, scale);

  const Vec J2mA2 = b.J.cwiseAbs2() - b.absA2;
  for (const Vec& raw : tests) {
    if (raw.size() != N) config_error("GridMismatch", "test function length does not match grid");
    Vec u = sp.project(raw);
    Field du, hess;
    derivatives(P, u, du, hess);
    Vec lap = tensor_trace(b, hess);
    Field X(m * m);
    for (int k = 0; k < m * m; ++k)
      X[k] = hess[k] - (lap / 3.0).cwiseProduct(g.g[k]) + 0.5 * u.cwiseProduct(b.Aring[k]);
    Vec grad2 = contract(b, g.g, du);
    const double h = 1.5 * weighted_sum(tensor_norm2(b, X), W);
    const double gr = weighted_sum(2.0 * b.J.cwiseProduct(grad2) - contract(b, b.A, du), W);
    const double z = -0.625 * weighted_sum(J2mA2.cwiseProduct(u).cwiseProduct(u), W);
    const double dec = h + gr + z;
    const double dir = P.energy(u);
    r.hessian_term.push_back(h);
    r.gradient_term.push_back(gr);
    r.zeroth_term.push_back(z);
    r.decomposed.push_back(dec);
    r.direct.push_back(dir);
    const double denom = std::max({std::abs(dir), std::abs(dec), 1e-300});
    r.discrepancy = std::max(r.discrepancy, std::abs(dir - dec) / denom);
    if (r.sigma2_negative && r.two_j_dominates) {
      const double tol = 1e-10 * std::max({std::abs(h), std::abs(gr), std::abs(z), 1e-300});
      if (gr < -tol || z < -tol) r.summand_signs = false;
    }
  }
  return r;
}

}  // namespace qc
