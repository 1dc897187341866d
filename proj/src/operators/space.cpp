#include "qcurv/operators.hpp"

namespace qc {

std::string op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Laplacian: return "laplacian";
    case OpKind::ConformalLaplacian: return "conformal_laplacian";
    case OpKind::Paneitz: return "paneitz";
  }
  return "?";
}

OpKind op_kind_from_name(const std::string& s) {
  if (s == "laplacian") return OpKind::Laplacian;
  if (s == "conformal_laplacian" || s == "L") return OpKind::ConformalLaplacian;
  if (s == "paneitz" || s == "P") return OpKind::Paneitz;
  config_error("UnknownOperator", "operator '" + s + "'");
}

Space::Space(const MetricField& g) : metric_(g) {
  if (!g.grid) config_error("GridMismatch", "metric has no grid");
  chart_ = dynamic_cast<const ChartGrid*>(g.grid.get());
  frame_ = dynamic_cast<const FrameGrid*>(g.grid.get());
  if (!chart_ && !frame_) config_error("UnsupportedGrid", "operators need a chart or spectral grid");
  nodal_ = chart_ != nullptr;
  if (nodal_) return;
  const Eigen::Index d = frame_->dofs();
  if (g.w.size() == 0 || max_abs(g.w) == 0.0) {
    M_ = Mat::Identity(d, d);
  } else {
    const Mat& Y = frame_->basis();
    Mat WY = g.dmu.asDiagonal() * Y;
    M_ = Y.transpose() * WY;
  }
  Mllt_.compute(M_);
  if (Mllt_.info() != Eigen::Success) numeric_error("GramSingular", "Gram matrix is not positive definite");
}

Vec Space::coefficients(const Vec& f) const {
  if (f.size() != nodes()) config_error("GridMismatch", "field length does not match grid");
  if (nodal_) return f;
  return Mllt_.solve(frame_->basis().transpose() * weights().cwiseProduct(f));
}

Vec Space::values(const Vec& c) const {
  if (c.size() != dofs()) config_error("GridMismatch", "coefficient length does not match space");
  if (nodal_) return c;
  return frame_->basis() * c;
}

Vec Space::gram_apply(const Vec& c) const { return nodal_ ? Vec(weights().cwiseProduct(c)) : Vec(M_ * c); }
Vec Space::gram_solve(const Vec& c) const { return nodal_ ? Vec(c.cwiseQuotient(weights())) : Vec(Mllt_.solve(c)); }
Mat Space::gram_apply(const Mat& c) const { return nodal_ ? Mat(weights().asDiagonal() * c) : Mat(M_ * c); }
Mat Space::gram_solve(const Mat& c) const {
  return nodal_ ? Mat(weights().cwiseInverse().asDiagonal() * c) : Mat(Mllt_.solve(c));
}

Mat Space::gram() const {
  if (nodal_) return Mat(weights().asDiagonal());
  return M_;
}

Mat Space::analysis_matrix() const {
  if (nodal_) return Mat::Identity(nodes(), nodes());
  Mat YtW = frame_->basis().transpose() * weights().asDiagonal();
  return Mllt_.solve(YtW);
}

}  // namespace qc
