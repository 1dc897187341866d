#include <Eigen/Eigenvalues>
#include <cmath>

#include "qcurv/curvature.hpp"

namespace qc {

std::string convention_name(Convention c) {
  switch (c) {
    case Convention::RhoN4: return "rho-n4";
    case Convention::E2W: return "e2w";
    case Convention::RhoNeg4: return "rho-neg4";
  }
  return "?";
}

Convention convention_from_name(const std::string& s) {
  for (Convention c : {Convention::RhoN4, Convention::E2W, Convention::RhoNeg4})
    if (convention_name(c) == s) return c;
  config_error("UnknownConvention", "unknown conformal convention '" + s + "'");
}

namespace {

void require_fields(const GridPtr& grid) {
  if (!grid) config_error("GridMismatch", "metric needs a grid");
  if (grid->backend() == Backend::Homogeneous)
    config_error("NoFields", "the homogeneous-analytic backend carries no fields; use the catalog");
}

// chart metric: inverse, density, positivity
void finish_chart(MetricField& g) {
  const int m = g.m;
  const Eigen::Index N = g.grid->size();
  g.ginv.assign(m * m, Vec(N));
  g.sqrt_det.resize(N);
  double worst = INFINITY;
  Eigen::Index worst_node = -1;
  for (Eigen::Index i = 0; i < N; ++i) {
    Mat G(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) G(a, b) = g.g[a * m + b][i];
    Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues()[0];
    if (std::isnan(lo)) lo = -INFINITY;
    if (lo < worst) worst = lo, worst_node = i;
    if (!(lo > 1e-12)) continue;
    Mat Gi = G.inverse();
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) g.ginv[a * m + b][i] = Gi(a, b);
    g.sqrt_det[i] = std::sqrt(G.determinant());
  }
  if (!(worst > 1e-12))
    config_error("MetricNotPositiveDefinite",
                 "smallest eigenvalue " + std::to_string(worst) + " at node " + std::to_string(worst_node));
  g.dmu = g.grid->weights().cwiseProduct(g.sqrt_det);
}

void finish_frame(MetricField& g) {
  const auto& fg = static_cast<const FrameGrid&>(*g.grid);
  const int m = g.m;
  g.g.assign(m * m, Vec());
  g.ginv.assign(m * m, Vec());
  Vec e2 = (2.0 * g.w).array().exp(), em2 = (-2.0 * g.w).array().exp();
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      g.g[a * m + b] = fg.frame_metric(a, b).cwiseProduct(e2);
      g.ginv[a * m + b] = a == b ? em2 : Vec::Zero(g.w.size());
    }
  g.sqrt_det = (g.n * g.w).array().exp();
  if (!g.sqrt_det.allFinite()) config_error("MetricNotPositiveDefinite", "conformal factor overflows");
  g.dmu = g.grid->weights().cwiseProduct(g.sqrt_det);
}

}  // namespace

MetricField metric_conformal(GridPtr grid, const Vec& w) {
  require_fields(grid);
  if (w.size() != grid->size()) config_error("GridMismatch", "conformal factor length does not match grid");
  if (!w.allFinite()) config_error("NonFiniteField", "conformal factor is not finite");
  MetricField g;
  g.grid = grid;
  g.n = grid->dim();
  if (grid->backend() == Backend::Chart) {
    g.m = g.n;
    g.g.assign(g.m * g.m, Vec::Zero(grid->size()));
    Vec e2 = (2.0 * w).array().exp();
    for (int a = 0; a < g.m; ++a) g.g[a * g.m + a] = e2;
    g.w = w;
    finish_chart(g);
  } else {
    g.m = static_cast<const FrameGrid&>(*grid).frames();
    g.conformal_frame = true;
    g.w = w;
    finish_frame(g);
  }
  return g;
}

MetricField metric_standard(GridPtr grid) {
  require_fields(grid);
  return metric_conformal(grid, Vec::Zero(grid->size()));
}

MetricField metric_components(GridPtr grid, const std::vector<Vec>& upper) {
  require_fields(grid);
  if (grid->backend() != Backend::Chart)
    config_error("UnsupportedMetric", "component metrics are supported on periodic charts only");
  MetricField g;
  g.grid = grid;
  g.n = g.m = grid->dim();
  const int m = g.m;
  if (static_cast<int>(upper.size()) != m * (m + 1) / 2)
    config_error("MetricSpec", "expected " + std::to_string(m * (m + 1) / 2) + " metric components");
  g.g.assign(m * m, Vec());
  int k = 0;
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b, ++k) {
      if (upper[k].size() != grid->size()) config_error("GridMismatch", "metric component length");
      g.g[a * m + b] = g.g[b * m + a] = upper[k];
    }
  g.w = Vec::Zero(grid->size());
  finish_chart(g);
  return g;
}

Vec conformal_scale(const Vec& f, Convention c, int n) {
  if (c != Convention::E2W && !(f.minCoeff() > 0.0))
    config_error("NonPositiveFactor", "conformal factor must be strictly positive");
  switch (c) {
    case Convention::E2W: return (2.0 * f).array().exp();
    case Convention::RhoN4:
      if (n == 4) config_error("ConventionMismatch", "rho-n4 convention needs n != 4");
      return f.array().pow(4.0 / (n - 4));
    case Convention::RhoNeg4:
      if (n != 3) config_error("ConventionMismatch", "rho-neg4 convention needs n = 3");
      return f.array().pow(-4.0);
  }
  return f;
}

MetricField conformal_deform(const MetricField& g, const Vec& factor, Convention c) {
  if (factor.size() != g.grid->size()) config_error("GridMismatch", "factor length does not match grid");
  Vec s = conformal_scale(factor, c, g.n);
  MetricField out = g;
  if (g.conformal_frame) {
    out.w = g.w + 0.5 * Vec(s.array().log());
    finish_frame(out);
  } else {
    for (auto& comp : out.g) comp = comp.cwiseProduct(s);
    out.w = g.w + 0.5 * Vec(s.array().log());
    finish_chart(out);
  }
  return out;
}

}  // namespace qc
