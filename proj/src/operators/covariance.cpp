#include <cmath>

#include "qcurv/operators.hpp"

namespace qc {

namespace {

Vec pow_field(const Vec& s, double p) { return s.array().pow(p).matrix(); }

}  // namespace

Vec conjugated_apply(const DiscreteOperator& base, const Vec& factor, Convention c, const Vec& phi) {
  const int n = base.dim();
  Vec s = conformal_scale(factor, c, n);
  switch (base.kind()) {
    case OpKind::Paneitz:
      return pow_field(s, -(n + 4) / 4.0).cwiseProduct(base.apply(pow_field(s, (n - 4) / 4.0).cwiseProduct(phi)));
    case OpKind::ConformalLaplacian:
      return pow_field(s, -(n + 2) / 4.0).cwiseProduct(base.apply(pow_field(s, (n - 2) / 4.0).cwiseProduct(phi)));
    case OpKind::Laplacian: break;
  }
  config_error("ConventionMismatch", "the Laplace–Beltrami operator has no conformal covariance law");
}

CovarianceReport covariance_residual(const DiscreteOperator& base, const Vec& factor, Convention c,
                                     const std::vector<Vec>& tests) {
  const MetricField& g = base.space().metric();
  MetricField gt = conformal_deform(g, factor, c);
  CurvatureBundle bt = curvature_from_metric(gt);
  DiscreteOperator deformed(base.kind(), gt, bt);
  CovarianceReport rep;
  for (const Vec& phi : tests) {
    Vec lhs = deformed.apply(phi);
    Vec rhs = conjugated_apply(base, factor, c, phi);
    if (!deformed.space().nodal()) rhs = deformed.space().project(rhs);
    double denom = max_abs(lhs);
    double r = max_abs(lhs - rhs) / (denom > 0 ? denom : 1.0);
    rep.per_test.push_back(r);
    rep.residual = std::max(rep.residual, r);
  }
  return rep;
}

Vec q_from_transformation(const DiscreteOperator& base, const Vec& factor, Convention c) {
  if (base.kind() != OpKind::Paneitz) config_error("ConventionMismatch", "Q transformation needs the Paneitz operator");
  const int n = base.dim();
  const Vec& Q = base.bundle().Q;
  if (c == Convention::E2W) {
    if (n != 4) config_error("ConventionMismatch", "the e^{2w} law for Q holds in dimension 4");
    Vec e4 = (-4.0 * factor).array().exp().matrix();
    return e4.cwiseProduct(base.apply(factor) + Q);
  }
  if (n == 4) config_error("ConventionMismatch", "dimension 4 uses the e2w convention");
  for (Eigen::Index i = 0; i < factor.size(); ++i)
    if (!(factor[i] > 0)) config_error("NonPositiveFactor", "conformal factor must be positive");
  // Q̃ = (2/(n-4)) ρ^{-(n+4)/(n-4)} P_g ρ
  return 2.0 / (n - 4) * pow_field(factor, -(n + 4.0) / (n - 4)).cwiseProduct(base.apply(factor));
}

}  // namespace qc
