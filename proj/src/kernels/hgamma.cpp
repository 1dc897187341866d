#include <algorithm>
#include <cmath>
#include <numbers>

#include "qcurv/kernels.hpp"

namespace qc {

namespace {

constexpr double kPi = std::numbers::pi;

// G ↦ prefactor·G^exponent, the closed-form H; a = exponent
struct HPower {
  double prefactor, exponent;
};

HPower h_power(int n) {
  if (n == 3) return {-1.0 / (256 * kPi * kPi), -1.0};
  if (n >= 5) return {1.0 / paneitz_cn(n), (n - 4.0) / (n - 2.0)};
  config_error("UnsupportedDimension", "H is defined for n = 3 and n ≥ 5");
}

void check_positive(const Mat& G) {
  Eigen::Index i, j;
  double lo = G.minCoeff(&i, &j);
  if (!(lo > 0))
    numeric_error("GreenSignViolation", "G_L is not positive: value " + std::to_string(lo) + " at nodes (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
}

}  // namespace

HGamma build_H_gamma(const Kernel& GL, const DiscreteOperator& P) {
  if (P.kind() != OpKind::Paneitz) config_error("ConventionMismatch", "Γ₁ is built from the Paneitz operator");
  if (!GL.dense()) config_error("KernelRepresentation", "H needs a dense G_L");
  if (GL.space->metric().grid != P.space().metric().grid) config_error("GridMismatch", "G_L and P live on different grids");
  const int n = P.dim();
  HPower hp = h_power(n);
  SpacePtr sp = P.space_ptr();
  Mat Hn = kernel_nodes(GL);
  check_positive(Hn);
  Hn = hp.prefactor * Hn.array().pow(hp.exponent).matrix();
  HGamma out;
  out.prefactor = hp.prefactor;
  out.H = kernel_from_nodes(sp, Hn, true);
  out.H.label = "H";
  Hn.resize(0, 0);
  out.gamma = gamma_residual(out.H, P);
  return out;
}

Kernel gamma_residual(const Kernel& H, const DiscreteOperator& P) {
  if (!H.dense()) config_error("KernelRepresentation", "Γ₁ needs a dense H");
  if (H.space.get() != &P.space()) config_error("GridMismatch", "H and P live on different spaces");
  // Γ₁ = δ − P_q H: coefficients (I − C_H S) M⁻¹
  const Mat& S = P.stiffness_dense();
  Mat T = Mat::Identity(S.rows(), S.cols()) - H.C * S;
  Kernel g;
  g.space = H.space;
  g.C = H.space->gram_solve(Mat(T.transpose())).transpose();
  g.label = "Gamma1";
  return g;
}

MaskedRows gamma_analytic(const Kernel& GL, const MetricField& g, const std::vector<Eigen::Index>& pivots,
                          double radius) {
  const int n = g.n;
  HPower hp = h_power(n);
  // Γ₁ = c·G^a |Rc_{G^{4/(n-2)}g}|²_g with c = 1/(256π²) (n = 3) or (n-4)/((n-2)² c_n)
  const double c = n == 3 ? 1.0 / (256 * kPi * kPi) : (n - 4.0) / ((n - 2.0) * (n - 2.0) * paneitz_cn(n));
  const Eigen::Index N = g.grid->size();
  const GridSpec& gs = g.grid->spec();
  double inj = gs.backend == Backend::Chart ? INFINITY : std::numbers::pi * gs.radius;
  for (double L : gs.period) inj = std::min(inj, L / 2);
  if (radius > 0.25 * inj) config_error("MaskTooLarge", "mask radius exceeds a quarter of the injectivity scale");
  MaskedRows out;
  out.pivots = pivots;
  out.radius = radius;
  out.values.resize(pivots.size(), N);
  out.masked.resize(pivots.size(), N);
  for (std::size_t r = 0; r < pivots.size(); ++r) {
    Vec G = kernel_column(GL, Pivot::at_node(pivots[r]));
    if (!(G.minCoeff() > 0)) numeric_error("GreenSignViolation", "G_L column is not positive");
    Vec rho;
    Convention conv;
    if (n == 3) {
      rho = G.cwiseInverse();
      conv = Convention::RhoNeg4;
    } else {
      rho = G.array().pow(hp.exponent).matrix();
      conv = Convention::RhoN4;
    }
    MetricField gt = conformal_deform(g, rho, conv);
    CurvatureBundle bt = curvature_from_metric(gt);
    Vec s = conformal_scale(rho, conv, n);
    Vec rc2 = s.cwiseAbs2().cwiseProduct(bt.absRc2);
    out.values.row(r) = (c * G.array().pow(hp.exponent) * rc2.array()).matrix().transpose();
    Vec d = node_distance(*g.grid, Pivot::at_node(pivots[r]));
    for (Eigen::Index j = 0; j < N; ++j) out.masked(r, j) = d[j] < radius;
  }
  return out;
}

}  // namespace qc
