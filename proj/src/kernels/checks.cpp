#include <algorithm>
#include <cmath>

#include "qcurv/kernels.hpp"

namespace qc {

double rowsum_check(const Kernel& H, const Kernel& gamma, const Vec& Q, int n) {
  const Eigen::Index N = gamma.space->nodes();
  if (Q.size() != N) config_error("GridMismatch", "Q length does not match grid");
  Vec lhs = kernel_apply(gamma, Vec::Ones(N));
  Vec hq = kernel_apply(H, Q);
  Vec rhs = Vec::Ones(N) - (n - 4.0) / 2.0 * hq;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

IdentityResidual identity_residual(const DiscreteOperator& P, const Kernel& GL, const Pivot& p,
                                   const std::vector<double>& radii) {
  if (P.kind() != OpKind::Paneitz) config_error("ConventionMismatch", "identity residual needs the Paneitz operator");
  const int n = P.dim();
  if (n == 4) config_error("UnsupportedDimension", "the identity is stated for n ≠ 4");
  const MetricField& g = P.space().metric();
  Vec G = kernel_column(GL, p);
  if (!(G.minCoeff() > 0)) numeric_error("GreenSignViolation", "G_L column is not positive");
  Vec rho;
  Convention conv;
  double coef;
  if (n == 3) {
    rho = G.cwiseInverse();
    conv = Convention::RhoNeg4;
    coef = -1.0;
  } else {
    rho = G.array().pow((n - 4.0) / (n - 2.0)).matrix();
    conv = Convention::RhoN4;
    coef = (n - 4.0) / ((n - 2.0) * (n - 2.0));
  }
  MetricField gt = conformal_deform(g, rho, conv);
  CurvatureBundle bt = curvature_from_metric(gt);
  Vec s = conformal_scale(rho, conv, n);
  Vec rc2 = s.cwiseAbs2().cwiseProduct(bt.absRc2);
  Vec Prho = P.apply(rho);
  Vec res = Prho + coef * rho.cwiseProduct(rc2);
  Vec d = node_distance(*g.grid, p);
  IdentityResidual out;
  for (double r : radii) {
    double m = 0, sc = 0;
    for (Eigen::Index j = 0; j < res.size(); ++j) {
      if (d[j] < r) continue;
      m = std::max(m, std::abs(res[j]));
      sc = std::max(sc, std::abs(Prho[j]));
    }
    out.radii.push_back(r);
    out.residual.push_back(m);
    out.scale.push_back(sc);
  }
  return out;
}

SignReport sign_scan(const Kernel& K, int expected_sign, const std::vector<Eigen::Index>& pivots) {
  SignReport rep;
  rep.expected = expected_sign;
  rep.min_off = INFINITY;
  rep.max_off = -INFINITY;
  const Eigen::Index N = K.space->nodes();
  std::vector<Eigen::Index> cols = pivots;
  if (cols.empty())
    for (Eigen::Index k = 0; k < N; ++k) cols.push_back(k);
  Mat Kn;
  if (K.dense() && pivots.empty()) Kn = kernel_nodes(K);
  for (Eigen::Index q : cols) {
    Vec c = Kn.size() ? Vec(Kn.col(q)) : kernel_column(K, Pivot::at_node(q));
    for (Eigen::Index j = 0; j < N; ++j) {
      if (j == q) continue;
      rep.min_off = std::min(rep.min_off, c[j]);
      rep.max_off = std::max(rep.max_off, c[j]);
      ++rep.checked;
      if (!(expected_sign * c[j] > 0)) ++rep.violations;
    }
  }
  return rep;
}

double mass_constant(const Kernel& GP, const MaskedRows& gamma, int row, int n) {
  if (n < 5) config_error("UnsupportedDimension", "A is defined for n ≥ 5");
  if (row < 0 || row >= static_cast<int>(gamma.pivots.size())) config_error("PivotOutOfRange", "row outside masked set");
  const Grid& grid = *GP.space->metric().grid;
  const Eigen::Index q = gamma.pivots[row];
  Vec G = kernel_column(GP, Pivot::at_node(q));
  Vec w = GP.space->weights();
  Vec d = node_distance(grid, Pivot::at_node(q));
  const double r = gamma.radius;
  double I1 = 0, I2 = 0;
  for (Eigen::Index j = 0; j < G.size(); ++j) {
    double t = G[j] * gamma.values(row, j) * w[j];
    if (d[j] >= r) I1 += t;
    if (d[j] >= 2 * r) I2 += t;
  }
  const double e = 8.0 - n;
  double I = I1 + (I1 - I2) / (std::pow(2.0, e) - 1.0);
  return 2.0 * n * (n - 2) * (n - 4) * unit_ball_volume(n) * I;
}

Vec pole_values(const Kernel& GP) {
  const Eigen::Index N = GP.space->nodes();
  if (GP.dense()) return kernel_nodes(GP).diagonal();
  Vec out(N);
  for (Eigen::Index k = 0; k < N; ++k) out[k] = kernel_column(GP, Pivot::at_node(k))[k];
  return out;
}

}  // namespace qc
