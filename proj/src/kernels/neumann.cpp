#include <cmath>

#include "qcurv/kernels.hpp"

namespace qc {

namespace {

constexpr double kNodeSupBudget = 4e9;

// sup over nodes of |Y C Yᵀ|; large grids use a fixed row subsample
double node_sup(const Space& sp, const Mat& C) {
  if (sp.nodal()) return C.cwiseAbs().maxCoeff();
  const Mat& Y = sp.frame()->basis();
  const double n = static_cast<double>(sp.nodes()), d = static_cast<double>(sp.dofs());
  Mat YC;
  if (n * n * d <= kNodeSupBudget) {
    YC = Y * C;
  } else {
    auto rows = pivot_sample(*sp.metric().grid, 64);
    Mat Ys(rows.size(), Y.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) Ys.row(i) = Y.row(rows[i]);
    YC = Ys * C;
  }
  Mat K = YC * Y.transpose();
  return K.cwiseAbs().maxCoeff();
}

}  // namespace

RadiusReport spectral_radius(const Kernel& gamma) {
  if (!gamma.dense()) config_error("KernelRepresentation", "spectral radius needs a dense kernel");
  const Space& sp = *gamma.space;
  Mat T = gamma.C * sp.gram();
  RadiusReport rep;
  Vec x = Vec::Ones(T.rows());
  x.normalize();
  double prev = -1;
  bool converged = false;
  for (int it = 1; it <= 1000; ++it) {
    Vec y = T * x;
    Vec z = T * y;
    double est = std::sqrt(z.norm());
    rep.iterations = it;
    if (est == 0) {
      rep.radius = 0;
      converged = true;
      break;
    }
    x = z / z.norm();
    if (std::abs(est - prev) < 1e-10 * std::max(est, 1e-300)) {
      rep.radius = est;
      converged = true;
      break;
    }
    prev = est;
    rep.radius = est;
  }
  if (T.rows() <= 2000) {
    Eigen::EigenSolver<Mat> es(T, false);
    rep.dense_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (!converged) {
    if (rep.dense_radius < 0)
      numeric_error("PowerIterationOscillation", "power iteration did not settle within 1000 iterations");
    rep.radius = rep.dense_radius;
  }
  Mat Kn = kernel_nodes(gamma);
  Vec rows = Kn.cwiseAbs() * sp.weights();
  rep.rowsum_bound = rows.maxCoeff();
  rep.nonnegative = Kn.minCoeff() >= 0;
  return rep;
}

NeumannResult neumann_green(const Kernel& H, const Kernel& gamma, double tol, int kmax) {
  if (!H.dense() || !gamma.dense()) config_error("KernelRepresentation", "Neumann series needs dense kernels");
  RadiusReport rr = spectral_radius(gamma);
  if (!(rr.radius < 1))
    numeric_error("SpectralRadiusAtLeastOne", "spectral radius of T_Γ₁ is " + std::to_string(rr.radius));
  const Space& sp = *H.space;
  NeumannResult out;
  out.GP.space = H.space;
  out.GP.symmetric = true;
  out.GP.label = "G_P(neumann)";
  Mat sum = H.C, term = H.C;
  Mat GM = gamma.C * sp.gram();
  int k = 0;
  bool done = node_sup(sp, gamma.C) == 0.0;
  while (!done) {
    if (k >= kmax) numeric_error("NeumannNotConverged", "kmax reached before tolerance");
    term = GM * term;
    sum += term;
    ++k;
    double nrm = node_sup(sp, term);
    out.term_norms.push_back(nrm);
    done = nrm <= tol;
  }
  out.terms = k;
  out.GP.C = sum;
  const std::size_t m = out.term_norms.size();
  if (m >= 2) {
    // least-squares slope of log‖term‖ over the second half of the series
    std::size_t a = m / 2;
    if (m - a < 2) a = m - 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::size_t i = a; i < m; ++i) {
      if (out.term_norms[i] <= 0) continue;
      double x = static_cast<double>(i), y = std::log(out.term_norms[i]);
      sx += x, sy += y, sxx += x * x, sxy += x * y, cnt += 1;
    }
    if (cnt >= 2) out.fitted_ratio = std::exp((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
    const double r = out.fitted_ratio;
    out.tail_bound = r < 1 ? out.term_norms.back() * r / (1 - r) : INFINITY;
  }
  return out;
}

}  // namespace qc
