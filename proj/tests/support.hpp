// Grid builders shared by the unit tests.
#pragma once

#include <numbers>
#include <vector>

#include "qcurv/grid.hpp"

namespace qct {

constexpr double pi = std::numbers::pi;

inline qc::GridSpec chart(int n, int N, qc::DiffScheme s = qc::DiffScheme::FD4, double L = 2 * pi) {
  qc::GridSpec g;
  g.backend = qc::Backend::Chart;
  g.dim = n;
  g.resolution.assign(n, N);
  g.period.assign(n, L);
  g.scheme = s;
  return g;
}

inline qc::GridSpec sphere3(int K, double r = 1.0) {
  qc::GridSpec g;
  g.backend = qc::Backend::Sphere3;
  g.dim = 3;
  g.degree = K;
  g.radius = r;
  return g;
}

inline qc::GridSpec product(int K, std::vector<int> N, std::vector<double> L, double r = 1.0) {
  qc::GridSpec g;
  g.backend = qc::Backend::Product;
  g.dim = 2 + static_cast<int>(N.size());
  g.degree = K;
  g.radius = r;
  g.resolution = std::move(N);
  g.period = std::move(L);
  return g;
}

inline qc::HomogeneousModel model(qc::HomogeneousModel::Kind k, int n = 3, double r = 1.0) {
  qc::HomogeneousModel m;
  m.kind = k;
  m.n = n;
  m.r = r;
  return m;
}

}  // namespace qct
