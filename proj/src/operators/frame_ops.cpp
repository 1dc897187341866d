#include <cmath>

#include "qcurv/operators.hpp"

namespace qc {

namespace {

double kappa(int n) { return 4.0 * (n - 1) / (n - 2); }

bool constant_field(const Vec& f, double& value) {
  value = f.size() ? f[0] : 0.0;
  return max_abs(f.array() - value) <= 1e-12 * std::max(1.0, std::abs(value));
}

Mat gram_of(const Mat& A, const Vec& d, const Mat& B) { return A.transpose() * (d.asDiagonal() * B); }

// per-frame coefficient β_a when B(V_a,V_b) = β_a g0(V_a,V_b) with β constant on each factor
bool frame_diagonal_b(const FrameGrid& fg, const std::vector<Vec>& B, int m, std::vector<double>& beta) {
  beta.assign(m, 0.0);
  const Eigen::Index N = fg.size();
  double scale = 0.0;
  for (const auto& v : B) scale = std::max(scale, max_abs(v));
  const double tol = 1e-10 * std::max(1.0, scale);
  double bs2 = 0.0;
  if (fg.has_s2()) bs2 = 0.5 * (B[0][0] + B[1 * m + 1][0] + B[2 * m + 2][0]);
  for (int a = 0; a < m; ++a) beta[a] = (fg.has_s2() && a < 3) ? bs2 : B[a * m + a][0];
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Vec expect = (fg.has_s2() && a < 3 && b < 3) ? Vec(bs2 * fg.frame_metric(a, b))
                                                   : Vec::Constant(N, a == b ? beta[a] : 0.0);
      if (max_abs(B[a * m + b] - expect) > tol) return false;
    }
  return true;
}

}  // namespace

void DiscreteOperator::assemble_frame() {
  const FrameGrid& fg = *space_->frame();
  const MetricField& g = space_->metric();
  const CurvatureBundle& b = *bundle_;
  const int m = fg.frames(), n = n_;
  const Eigen::Index N = fg.size(), d = fg.dofs();
  const Mat& Y = fg.basis();
  const Vec& W0 = fg.weights();
  const Vec& Wg = g.dmu;
  const bool flat_w = g.w.size() == 0 || max_abs(g.w) == 0.0;

  std::vector<Vec> B;
  if (kind_ == OpKind::Paneitz) {
    B.resize(m * m);
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c) B[a * m + c] = -4.0 * b.A[a * m + c] + (n - 2.0) * b.J.cwiseProduct(g.g[a * m + c]);
  }

  double rbar = 0, qbar = 0;
  std::vector<double> beta;
  bool fast = flat_w;
  if (fast && kind_ == OpKind::ConformalLaplacian) fast = constant_field(b.R, rbar);
  if (fast && kind_ == OpKind::Paneitz) fast = constant_field(b.Q, qbar) && frame_diagonal_b(fg, B, m, beta);

  if (fast) {
    SpMat grad(d, d);
    std::vector<SpMat> DtD(m);
    for (int a = 0; a < m; ++a) DtD[a] = SpMat(fg.frame_matrix(a).transpose()) * fg.frame_matrix(a);
    switch (kind_) {
      case OpKind::Laplacian:
        for (int a = 0; a < m; ++a) grad -= DtD[a];
        S_ = Mat(grad);
        break;
      case OpKind::ConformalLaplacian:
        for (int a = 0; a < m; ++a) grad += DtD[a];
        S_ = kappa(n) * Mat(grad);
        S_.diagonal().array() += rbar;
        break;
      case OpKind::Paneitz: {
        const SpMat& L = fg.laplacian_matrix();
        SpMat LL = SpMat(L.transpose()) * L;
        for (int a = 0; a < m; ++a) grad += beta[a] * DtD[a];
        S_ = Mat(LL) + Mat(grad);
        S_.diagonal().array() += q_coefficient() * qbar;
        break;
      }
    }
  } else {
    std::vector<Vec> dw(m);
    for (int a = 0; a < m; ++a) dw[a] = flat_w ? Vec::Zero(N) : fg.derivative(g.w, a);
    const Vec w = flat_w ? Vec::Zero(N) : g.w;
    auto YD = [&](int a) { return Mat(Y * fg.frame_matrix(a)); };
    switch (kind_) {
      case OpKind::Laplacian:
      case OpKind::ConformalLaplacian: {
        Vec dens = W0.cwiseProduct(((n - 2.0) * w).array().exp().matrix());
        S_ = Mat::Zero(d, d);
        for (int a = 0; a < m; ++a) {
          Mat Ya = YD(a);
          S_ += gram_of(Ya, dens, Ya);
        }
        if (kind_ == OpKind::Laplacian) {
          S_ = -S_;
        } else {
          S_ *= kappa(n);
          S_ += gram_of(Y, Wg.cwiseProduct(b.R), Y);
        }
        break;
      }
      case OpKind::Paneitz: {
        Vec em2 = (-2.0 * w).array().exp().matrix();
        Mat LY = Y * fg.laplacian_matrix();
        for (int a = 0; a < m; ++a) LY += (n - 2.0) * dw[a].asDiagonal() * YD(a);
        LY = em2.asDiagonal() * LY;
        S_ = gram_of(LY, Wg, LY);
        LY.resize(0, 0);
        Vec dens = W0.cwiseProduct(((n - 4.0) * w).array().exp().matrix());
        for (int a = 0; a < m; ++a) {
          Mat T = Mat::Zero(N, d);
          for (int c = 0; c < m; ++c) T += dens.cwiseProduct(B[a * m + c]).asDiagonal() * YD(c);
          S_ += YD(a).transpose() * T;
        }
        S_ += gram_of(Y, Wg.cwiseProduct(q_coefficient() * b.Q), Y);
        break;
      }
    }
  }
  S_ = (0.5 * (S_ + S_.transpose())).eval();
  dense_ready_ = true;
  precond_diag_ = S_.diagonal();
}

}  // namespace qc

namespace qc {

Vec DiscreteOperator::frame_energy_density(const Vec& u) const {
  const FrameGrid& fg = *space_->frame();
  const MetricField& g = space_->metric();
  const CurvatureBundle& b = *bundle_;
  const int m = fg.frames(), n = n_;
  const Eigen::Index N = fg.size();
  Vec c = space_->coefficients(u);
  Vec uh = fg.basis() * c;
  const Vec w = g.w.size() ? g.w : Vec::Zero(N);
  std::vector<Vec> du(m);
  for (int a = 0; a < m; ++a) du[a] = fg.basis() * (fg.frame_matrix(a) * c);
  Vec em2 = (-2.0 * w).array().exp().matrix();
  if (kind_ != OpKind::Paneitz) {
    Vec grad = Vec::Zero(N);
    for (int a = 0; a < m; ++a) grad += du[a].cwiseProduct(du[a]);
    grad = em2.cwiseProduct(grad);
    if (kind_ == OpKind::Laplacian) return -grad;
    return kappa(n) * grad + b.R.cwiseProduct(uh).cwiseProduct(uh);
  }
  Vec lap = fg.basis() * (fg.laplacian_matrix() * c);
  for (int a = 0; a < m; ++a) lap += (n - 2.0) * fg.derivative(w, a).cwiseProduct(du[a]);
  lap = em2.cwiseProduct(lap);
  Vec out = lap.cwiseProduct(lap) + q_coefficient() * b.Q.cwiseProduct(uh).cwiseProduct(uh);
  Vec e4 = em2.cwiseProduct(em2);
  for (int a = 0; a < m; ++a)
    for (int d = 0; d < m; ++d) {
      Vec B = -4.0 * b.A[a * m + d] + (n - 2.0) * b.J.cwiseProduct(g.g[a * m + d]);
      out += e4.cwiseProduct(B).cwiseProduct(du[a]).cwiseProduct(du[d]);
    }
  return out;
}

}  // namespace qc
