#include "qcurv/operators.hpp"

namespace qc {

namespace {

// div_g(B^♯ ∇u) with B = -4A + (n-2)J g
Vec b_divergence(const MetricField& g, const CurvatureBundle& b, const Vec& u) {
  const int n = g.n, m = g.m;
  std::vector<Vec> B(m * m);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) B[a * m + c] = -4.0 * b.A[a * m + c] + (n - 2.0) * b.J.cwiseProduct(g.g[a * m + c]);
  Vec out = Vec::Zero(u.size());
  if (auto* cg = dynamic_cast<const ChartGrid*>(g.grid.get())) {
    std::vector<Vec> du(m), up(m, Vec::Zero(u.size()));
    for (int j = 0; j < m; ++j) du[j] = cg->diff(u, j, 1);
    for (int a = 0; a < m; ++a)
      for (int j = 0; j < m; ++j) up[a] += g.ginv[a * m + j].cwiseProduct(du[j]);
    for (int i = 0; i < m; ++i) {
      Vec flux = Vec::Zero(u.size());
      for (int a = 0; a < m; ++a) {
        Vec Ba = Vec::Zero(u.size());
        for (int c = 0; c < m; ++c) Ba += B[a * m + c].cwiseProduct(up[c]);
        flux += g.ginv[i * m + a].cwiseProduct(Ba);
      }
      out += cg->diff(g.sqrt_det.cwiseProduct(flux), i, 1);
    }
    return out.cwiseQuotient(g.sqrt_det);
  }
  const auto& fg = static_cast<const FrameGrid&>(*g.grid);
  const Vec w = g.w.size() ? g.w : Vec::Zero(u.size());
  Vec e4 = (-4.0 * w).array().exp().matrix(), en = (n * w).array().exp().matrix();
  std::vector<Vec> du(m);
  for (int c = 0; c < m; ++c) du[c] = fg.derivative(u, c);
  for (int a = 0; a < m; ++a) {
    Vec X = Vec::Zero(u.size());
    for (int c = 0; c < m; ++c) X += B[a * m + c].cwiseProduct(du[c]);
    out += fg.derivative(en.cwiseProduct(e4).cwiseProduct(X), a);
  }
  return out.cwiseQuotient(en);
}

}  // namespace

Vec strong_apply(OpKind kind, const MetricField& g, const CurvatureBundle& b, const Vec& u) {
  if (u.size() != g.grid->size()) config_error("GridMismatch", "field length does not match grid");
  const int n = g.n;
  Vec lap = metric_laplacian(g, u);
  switch (kind) {
    case OpKind::Laplacian: return lap;
    case OpKind::ConformalLaplacian: return -4.0 * (n - 1) / (n - 2) * lap + b.R.cwiseProduct(u);
    case OpKind::Paneitz: break;
  }
  return metric_laplacian(g, lap) - b_divergence(g, b, u) + 0.5 * (n - 4) * b.Q.cwiseProduct(u);
}

}  // namespace qc
