#include <cmath>

#include "qcurv/invariants.hpp"

namespace qc {

Sigma2Diagnostics sigma2_diagnostics(const CurvatureBundle& b, double kappa) {
  if (b.n != 3) config_error("WrongDimension", "sigma2 diagnostics need n = 3");
  Sigma2Diagnostics r;
  const Vec& W = b.dmu;
  const Vec J2 = b.J.cwiseAbs2();
  const Vec ar2 = tensor_norm2(b, b.Aring);
  r.q_integral = weighted_sum(b.Q, W);
  r.j2_integral = weighted_sum(J2, W);
  r.q_minus_j2_integral = r.q_integral - r.j2_integral / 6.0;

  Vec comb = b.Q - b.lapJ / 3.0 - J2 / 6.0;
  Vec other = -(4.0 / 3.0) * b.lapJ - 2.0 * ar2 + (2.0 / 3.0) * J2;
  r.pointwise_identity = max_abs(comb - other);
  r.combination_mean = weighted_sum(comb, W) / pairwise_sum(W);
  r.combination_spread = max_abs(comb.array() - r.combination_mean);

  Vec LJ = -8.0 * b.lapJ + 4.0 * J2;
  r.lj_min = LJ.minCoeff();
  if (std::isfinite(kappa)) r.lj_field = max_abs(LJ - 12.0 * ar2 - Vec::Constant(LJ.size(), 6.0 * kappa));

  r.sigma2_integral = weighted_sum(b.sigma2, W);
  r.sigma2_rhs = 0.25 * (r.q_integral + 0.5 * r.j2_integral);
  r.sigma2_residual = std::abs(r.sigma2_integral - r.sigma2_rhs);
  return r;
}

}  // namespace qc
