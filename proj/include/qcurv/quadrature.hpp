// Gauss–Legendre rules and Legendre polynomial evaluation.
#pragma once

#include "qcurv/common.hpp"

namespace qc {

struct GaussRule {
  Vec nodes;    // ascending, in (-1, 1)
  Vec weights;  // sum to 2
};

GaussRule gauss_legendre(int n);

// P_0..P_kmax and their derivatives at x; rows = degree.
void legendre_table(double x, int kmax, double* p, double* dp);

}  // namespace qc
