#include "qcurv/invariants.hpp"

namespace qc {

double kappa_invariant(const CurvatureBundle& b, const Grid& grid) {
  if (b.n != 4) config_error("WrongDimension", "kappa is defined for n = 4, got n = " + std::to_string(b.n));
  if (b.size() != grid.size()) config_error("GridMismatch", "bundle and grid sizes differ");
  return weighted_sum(b.Q, b.dmu);
}

}  // namespace qc
