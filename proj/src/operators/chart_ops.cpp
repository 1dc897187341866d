#include <omp.h>

#include "qcurv/operators.hpp"

namespace qc {

namespace {

constexpr Eigen::Index kDenseLimit = 6000;

double kappa(int n) { return 4.0 * (n - 1) / (n - 2); }

}  // namespace

DiscreteOperator::DiscreteOperator(OpKind kind, const MetricField& g, const CurvatureBundle& b)
    : kind_(kind), n_(g.n) {
  if (kind == OpKind::ConformalLaplacian && n_ < 3) config_error("UnsupportedDimension", "conformal Laplacian needs n ≥ 3");
  if (b.size() != g.grid->size()) config_error("GridMismatch", "curvature bundle does not match the metric grid");
  space_ = std::make_shared<Space>(g);
  bundle_ = std::make_shared<CurvatureBundle>(b);
  if (!space_->nodal()) {
    assemble_frame();
    return;
  }
  const int n = n_;
  const Eigen::Index N = g.grid->size();
  ginv_ = g.ginv;
  gam_.assign(n, Vec::Zero(N));
  if (b.has_christoffel)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gam_[k] += g.ginv[i * n + j].cwiseProduct(b.christoffel[(k * n + i) * n + j]);
  if (kind == OpKind::Paneitz) {
    std::vector<Vec> Blow(n * n);
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) Blow[a * n + c] = -4.0 * b.A[a * n + c] + (n - 2.0) * b.J.cwiseProduct(g.g[a * n + c]);
    bup_.assign(n * n, Vec::Zero(N));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int c = 0; c < n; ++c)
            bup_[i * n + j] += g.ginv[i * n + a].cwiseProduct(Blow[a * n + c]).cwiseProduct(g.ginv[c * n + j]);
    zeroth_ = q_coefficient() * b.Q;
  } else if (kind == OpKind::ConformalLaplacian) {
    zeroth_ = b.R;
  } else {
    zeroth_ = Vec::Zero(N);
  }
  // diagonal shift so that constants are annihilated on both sides
  const_defect_ = Vec::Zero(N);
  const_defect_ = lap_sym(Vec::Ones(N));
}

Vec DiscreteOperator::lap_h(const Vec& u) const {
  const ChartGrid& G = *space_->chart();
  const int n = n_;
  Vec out = Vec::Zero(u.size());
  for (int i = 0; i < n; ++i) {
    out += ginv_[i * n + i].cwiseProduct(G.diff(u, i, 2));
    for (int j = i + 1; j < n; ++j) out += 2.0 * ginv_[i * n + j].cwiseProduct(G.diff(G.diff(u, j, 1), i, 1));
  }
  for (int k = 0; k < n; ++k) out -= gam_[k].cwiseProduct(G.diff(u, k, 1));
  return out;
}

Vec DiscreteOperator::lap_sym(const Vec& u) const {
  if (!space_->nodal()) config_error("UnsupportedGrid", "node Laplacian is defined on charts");
  const ChartGrid& G = *space_->chart();
  const Vec& W = space_->weights();
  const int n = n_;
  Vec v = W.cwiseProduct(u);
  Vec adj = Vec::Zero(u.size());
  for (int i = 0; i < n; ++i) {
    adj += G.diff(ginv_[i * n + i].cwiseProduct(v), i, 2);
    for (int j = i + 1; j < n; ++j) adj += 2.0 * G.diff(G.diff(ginv_[i * n + j].cwiseProduct(v), j, 1), i, 1);
  }
  for (int k = 0; k < n; ++k) adj += G.diff(gam_[k].cwiseProduct(v), k, 1);
  return 0.5 * (lap_h(u) + adj.cwiseQuotient(W)) - const_defect_.cwiseProduct(u);
}

Vec DiscreteOperator::chart_stiffness(const Vec& u) const {
  const Vec& W = space_->weights();
  switch (kind_) {
    case OpKind::Laplacian: return W.cwiseProduct(lap_sym(u));
    case OpKind::ConformalLaplacian:
      return W.cwiseProduct(-kappa(n_) * lap_sym(u) + zeroth_.cwiseProduct(u));
    case OpKind::Paneitz: break;
  }
  const ChartGrid& G = *space_->chart();
  const int n = n_;
  Vec out = W.cwiseProduct(lap_sym(lap_sym(u)) + zeroth_.cwiseProduct(u));
  std::vector<Vec> du(n);
  for (int j = 0; j < n; ++j) du[j] = G.diff(u, j, 1);
  for (int i = 0; i < n; ++i) {
    Vec flux = Vec::Zero(u.size());
    for (int j = 0; j < n; ++j) flux += bup_[i * n + j].cwiseProduct(du[j]);
    out -= G.diff(W.cwiseProduct(flux), i, 1);
  }
  return out;
}

Vec DiscreteOperator::stiffness(const Vec& c) const {
  if (c.size() != dofs()) config_error("GridMismatch", "vector length does not match operator");
  if (dense_ready_) return S_ * c;
  return chart_stiffness(c);
}

const Mat& DiscreteOperator::stiffness_dense() const {
  if (dense_ready_) return S_;
  const Eigen::Index N = dofs();
  if (N > kDenseLimit) numeric_error("DenseTooLarge", "dense assembly limited to " + std::to_string(kDenseLimit) + " nodes");
  Mat S(N, N);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index j = 0; j < N; ++j) {
    Vec e = Vec::Zero(N);
    e[j] = 1.0;
    S.col(j) = chart_stiffness(e);
  }
  S_ = 0.5 * (S + S.transpose());
  dense_ready_ = true;
  return S_;
}

Vec DiscreteOperator::apply(const Vec& u) const {
  if (u.size() != space_->nodes()) config_error("GridMismatch", "field length does not match grid");
  if (space_->nodal()) return stiffness(u).cwiseQuotient(space_->weights());
  return space_->values(space_->gram_solve(Vec(S_ * space_->coefficients(u))));
}

double DiscreteOperator::bilinear(const Vec& u, const Vec& v) const {
  Vec cu = space_->coefficients(u), cv = space_->coefficients(v);
  Vec t = stiffness(cu).cwiseProduct(cv);
  return pairwise_sum(t);
}

double DiscreteOperator::energy(const Vec& u) const { return bilinear(u, u); }

Vec DiscreteOperator::energy_density(const Vec& u) const {
  if (!space_->nodal()) return frame_energy_density(u);
  if (u.size() != space_->nodes()) config_error("GridMismatch", "field length does not match grid");
  Vec ls = lap_sym(u);
  switch (kind_) {
    case OpKind::Laplacian: return u.cwiseProduct(ls);
    case OpKind::ConformalLaplacian: return -kappa(n_) * u.cwiseProduct(ls) + zeroth_.cwiseProduct(u).cwiseProduct(u);
    case OpKind::Paneitz: break;
  }
  const ChartGrid& G = *space_->chart();
  const int n = n_;
  std::vector<Vec> du(n);
  for (int j = 0; j < n; ++j) du[j] = G.diff(u, j, 1);
  Vec out = ls.cwiseProduct(ls) + zeroth_.cwiseProduct(u).cwiseProduct(u);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out += bup_[i * n + j].cwiseProduct(du[i]).cwiseProduct(du[j]);
  return out;
}

Vec DiscreteOperator::precondition(const Vec& r, double eps) const {
  if (!space_->nodal()) return r.cwiseQuotient(precond_diag_.array().abs().matrix() + Vec::Constant(r.size(), eps));
  const ChartGrid& G = *space_->chart();
  Vec f = r.cwiseQuotient(space_->weights());
  switch (kind_) {
    case OpKind::Paneitz: return G.flat_solve(f, 2, eps);
    case OpKind::ConformalLaplacian: return G.flat_solve(f, 1, eps) / kappa(n_);
    case OpKind::Laplacian: return G.flat_solve(f, 1, eps);
  }
  return f;
}

OperatorPtr assemble_operator(OpKind kind, const MetricField& g, const CurvatureBundle& b) {
  return std::make_shared<DiscreteOperator>(kind, g, b);
}

}  // namespace qc
