#include "qcurv/curvature.hpp"

namespace qc {

namespace detail {

CurvatureBundle chart_curvature(const MetricField& g);
Vec chart_laplacian(const ChartGrid& cg, const MetricField& g, const Vec& f);

// Δ_g f for g = e^{2w} g0 in divergence form: e^{-nw} Σ_b V_b(e^{(n-2)w} V_b f)
Vec frame_laplacian(const FrameGrid& fg, const MetricField& g, const Vec& f) {
  const int n = g.n;
  Vec s = ((n - 2) * g.w).array().exp();
  Vec out = Vec::Zero(f.size());
  for (int b = 0; b < fg.frames(); ++b) out += fg.derivative(s.cwiseProduct(fg.derivative(f, b)), b);
  return out.cwiseQuotient(g.sqrt_det);
}

CurvatureBundle frame_curvature(const MetricField& g) {
  const auto& fg = static_cast<const FrameGrid&>(*g.grid);
  const int n = g.n, m = g.m;
  const Eigen::Index N = fg.size();
  std::vector<Vec> dw(m);
  for (int a = 0; a < m; ++a) dw[a] = fg.derivative(g.w, a);
  std::vector<Vec> hess(m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) hess[a * m + b] = fg.derivative(dw[b], a) - fg.connection(a, b, dw);
  Vec grad2 = Vec::Zero(N), lap0 = Vec::Zero(N);
  for (int a = 0; a < m; ++a) {
    grad2 += dw[a].cwiseAbs2();
    lap0 += hess[a * m + a];
  }
  CurvatureBundle B;
  B.n = n;
  B.m = m;
  B.g = g.g;
  B.ginv = g.ginv;
  B.dmu = g.dmu;
  B.Rc.assign(m * m, Vec());
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Vec hs = 0.5 * (hess[a * m + b] + hess[b * m + a]);
      B.Rc[a * m + b] = fg.base_ricci(a, b) - (n - 2) * (hs - dw[a].cwiseProduct(dw[b])) -
                        (lap0 + (n - 2) * grad2).cwiseProduct(fg.frame_metric(a, b));
    }
  curvature_algebra(B);
  B.lapJ = frame_laplacian(fg, g, B.J);
  B.lapR = frame_laplacian(fg, g, B.R);
  curvature_q(B);
  return B;
}

}  // namespace detail

Vec metric_laplacian(const MetricField& g, const Vec& f) {
  if (f.size() != g.grid->size()) config_error("GridMismatch", "field length does not match grid");
  if (g.grid->backend() == Backend::Chart) return detail::chart_laplacian(static_cast<const ChartGrid&>(*g.grid), g, f);
  if (g.grid->backend() == Backend::Homogeneous) config_error("NoFields", "homogeneous backend carries no fields");
  return detail::frame_laplacian(static_cast<const FrameGrid&>(*g.grid), g, f);
}

CurvatureBundle curvature_from_metric(const MetricField& g) {
  if (!g.grid) config_error("GridMismatch", "metric has no grid");
  switch (g.grid->backend()) {
    case Backend::Homogeneous: config_error("NoFields", "homogeneous backend: use the curvature catalog");
    case Backend::Chart: return detail::chart_curvature(g);
    default: return detail::frame_curvature(g);
  }
}

}  // namespace qc
