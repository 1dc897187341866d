#include "qcurv/curvature.hpp"

namespace qc {

namespace detail {

// (1/√g) ∂_i(√g g^{ij} ∂_j f), differences in divergence form
Vec chart_laplacian(const ChartGrid& cg, const MetricField& g, const Vec& f) {
  const int n = g.m;
  std::vector<Vec> df(n);
  for (int j = 0; j < n; ++j) df[j] = cg.diff(f, j, 1);
  Vec out = Vec::Zero(f.size());
  for (int i = 0; i < n; ++i) {
    Vec flux = Vec::Zero(f.size());
    for (int j = 0; j < n; ++j) flux += g.ginv[i * n + j].cwiseProduct(df[j]);
    out += cg.diff(flux.cwiseProduct(g.sqrt_det), i, 1);
  }
  return out.cwiseQuotient(g.sqrt_det);
}

CurvatureBundle chart_curvature(const MetricField& g) {
  const auto& cg = static_cast<const ChartGrid&>(*g.grid);
  const int n = g.m;
  const Eigen::Index N = cg.size();
  auto sym = [n](int a, int b) { return a * n + b; };
  // ∂_k g_ab
  std::vector<Vec> dg(n * n * n);
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        dg[k * n * n + sym(a, b)] = cg.diff(g.g[sym(a, b)], k, 1);
        dg[k * n * n + sym(b, a)] = dg[k * n * n + sym(a, b)];
      }
  CurvatureBundle B;
  B.n = g.n;
  B.m = n;
  B.g = g.g;
  B.ginv = g.ginv;
  B.dmu = g.dmu;
  B.has_christoffel = true;
  B.christoffel.assign(n * n * n, Vec::Zero(N));
  auto chr = [n](int k, int i, int j) { return (k * n + i) * n + j; };
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Vec s = Vec::Zero(N);
        for (int l = 0; l < n; ++l)
          s += g.ginv[sym(k, l)].cwiseProduct(dg[i * n * n + sym(j, l)] + dg[j * n * n + sym(i, l)] -
                                              dg[l * n * n + sym(i, j)]);
        B.christoffel[chr(k, i, j)] = 0.5 * s;
        B.christoffel[chr(k, j, i)] = B.christoffel[chr(k, i, j)];
      }
  dg.clear();
  const auto& Gm = B.christoffel;
  B.Rc.assign(n * n, Vec(N));
  B.has_riemann = n <= 4;
  if (!B.has_riemann) {
    // contracted form: Rc_jl = ∂_iΓ^i_lj − ∂_l∂_j log√g + Γ^i_imΓ^m_lj − Γ^i_lmΓ^m_ij
    Vec logdet = g.sqrt_det.array().log();
    std::vector<Vec> divG(n * n), ddl(n * n);
    for (int l = 0; l < n; ++l) {
      Vec dl = cg.diff(logdet, l, 1);
      for (int j = 0; j < n; ++j) ddl[l * n + j] = cg.diff(dl, j, 1);
      for (int j = l; j < n; ++j) {
        Vec s = Vec::Zero(N);
        for (int i = 0; i < n; ++i) s += cg.diff(Gm[chr(i, l, j)], i, 1);
        divG[l * n + j] = divG[j * n + l] = s;
      }
    }
#pragma omp parallel for schedule(static)
    for (Eigen::Index p = 0; p < N; ++p)
      for (int j = 0; j < n; ++j)
        for (int l = j; l < n; ++l) {
          double s = divG[l * n + j][p] - 0.5 * (ddl[l * n + j][p] + ddl[j * n + l][p]);
          for (int i = 0; i < n; ++i)
            for (int m = 0; m < n; ++m)
              s += Gm[chr(i, i, m)][p] * Gm[chr(m, l, j)][p] - Gm[chr(i, l, m)][p] * Gm[chr(m, i, j)][p];
          B.Rc[sym(j, l)][p] = B.Rc[sym(l, j)][p] = s;
        }
  } else {
    // ∂_l Γ^k_ij
    std::vector<Vec> dG(n * n * n * n);
    for (int l = 0; l < n; ++l)
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            dG[l * n * n * n + chr(k, i, j)] = cg.diff(Gm[chr(k, i, j)], l, 1);
            dG[l * n * n * n + chr(k, j, i)] = dG[l * n * n * n + chr(k, i, j)];
          }
    B.riemann.assign(n * n * n * n, Vec(N));
#pragma omp parallel for schedule(static)
    for (Eigen::Index p = 0; p < N; ++p) {
      // R^i_{jkl} = ∂_kΓ^i_{lj} − ∂_lΓ^i_{kj} + Γ^i_{km}Γ^m_{lj} − Γ^i_{lm}Γ^m_{kj}
      double Rup[256];
      auto at = [n](int a, int b, int c, int d) { return ((a * n + b) * n + c) * n + d; };
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              double s = dG[k * n * n * n + chr(i, l, j)][p] - dG[l * n * n * n + chr(i, k, j)][p];
              for (int m = 0; m < n; ++m)
                s += Gm[chr(i, k, m)][p] * Gm[chr(m, l, j)][p] - Gm[chr(i, l, m)][p] * Gm[chr(m, k, j)][p];
              Rup[at(i, j, k, l)] = s;
            }
      for (int j = 0; j < n; ++j)
        for (int l = j; l < n; ++l) {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += 0.5 * (Rup[at(i, j, i, l)] + Rup[at(i, l, i, j)]);
          B.Rc[sym(j, l)][p] = B.Rc[sym(l, j)][p] = s;
        }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              double s = 0.0;
              for (int q = 0; q < n; ++q) s += g.g[sym(i, q)][p] * Rup[at(q, j, k, l)];
              B.riemann[at(i, j, k, l)][p] = s;
            }
    }
  }
  curvature_algebra(B);
  B.lapJ = chart_laplacian(cg, g, B.J);
  B.lapR = chart_laplacian(cg, g, B.R);
  curvature_q(B);
  return B;
}

}  // namespace detail

}  // namespace qc
