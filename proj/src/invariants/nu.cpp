#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "qcurv/invariants.hpp"

namespace qc {

namespace {

constexpr Eigen::Index kDenseLimit = 2000;

struct Decomposition {
  Vec values;
  Mat nodal;  // eigenfunctions at the nodes, μ-orthonormal
};

Mat basis_matrix(const Space& sp) {
  if (sp.nodal()) return Mat::Identity(sp.nodes(), sp.nodes());
  return sp.frame()->basis();
}

Decomposition decompose(const DiscreteOperator& P) {
  if (P.dofs() > kDenseLimit)
    numeric_error("DenseTooLarge", "nu needs a full eigendecomposition; dofs " + std::to_string(P.dofs()) + " > " +
                                       std::to_string(kDenseLimit));
  const Space& sp = P.space();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(P.stiffness_dense(), sp.gram());
  if (es.info() != Eigen::Success) numeric_error("EigenSolver", "generalized eigensolver failed");
  Decomposition d;
  d.values = es.eigenvalues();
  d.nodal = sp.nodal() ? es.eigenvectors() : Mat(sp.frame()->basis() * es.eigenvectors());
  return d;
}

struct Cluster {
  double value;
  int mult;
  double weight;
};

// smallest eigenvalue of the energy restricted to {u(p) = 0}, from the
// eigenpairs (λ_i, φ_i) and β_i = φ_i(p): interlacing plus the secular equation
// Σ_c B_c / (λ_c − μ) = 0 between the first two clusters that feel the constraint
double constrained_min(const Vec& lam, const Vec& beta, double cluster_tol) {
  std::vector<Cluster> cl;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (!cl.empty() && lam[i] - cl.back().value <= cluster_tol) {
      cl.back().mult += 1;
      cl.back().weight += beta[i] * beta[i];
    } else {
      cl.push_back({lam[i], 1, beta[i] * beta[i]});
    }
  }
  const double total = beta.squaredNorm();
  const double wtol = 1e-14 * total;
  double best = INFINITY;
  std::vector<const Cluster*> active;
  for (const Cluster& c : cl) {
    if (c.mult > 1 || c.weight <= wtol) best = std::min(best, c.value);
    if (c.weight > wtol) active.push_back(&c);
  }
  if (active.size() < 2) return best;
  const double a = active[0]->value, b = active[1]->value;
  if (a >= best) return best;
  // f(a + δ) increases from −∞ to +∞ on (0, b − a)
  auto f = [&](double delta) {
    double s = 0.0;
    for (const Cluster* c : active) s += c->weight / ((c->value - a) - delta);
    return s;
  };
  double lo = 0.0, hi = b - a;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0) lo = mid;
    else hi = mid;
  }
  return std::min(best, a + 0.5 * (lo + hi));
}

}  // namespace

NuReport nu_invariants(const DiscreteOperator& P, int max_nodes) {
  if (P.dim() != 3 || P.kind() != OpKind::Paneitz) config_error("WrongDimension", "nu needs the Paneitz operator with n = 3");
  const Grid& grid = *P.space().metric().grid;
  Decomposition d = decompose(P);
  NuReport r;
  r.lambda1 = d.values[0];
  r.lambda2 = d.values.size() > 1 ? d.values[1] : NAN;
  r.norm = d.values.cwiseAbs().maxCoeff();
  r.tol = 1e-6 * r.norm;
  const Eigen::Index N = grid.size();
  if (N <= max_nodes) {
    for (Eigen::Index i = 0; i < N; ++i) r.nodes.push_back(i);
  } else {
    r.nodes = pivot_sample(grid, std::max(64, max_nodes));
  }
  const double ctol = 1e-10 * std::max(1.0, r.norm);
  r.nu.resize(r.nodes.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(r.nodes.size()); ++k) {
    Vec beta = d.nodal.row(r.nodes[k]).transpose();
    r.nu[k] = constrained_min(d.values, beta, ctol);
  }
  Eigen::Index at = 0;
  r.nu_global = r.nu.minCoeff(&at);
  r.argmin = r.nodes[at];
  r.NN = r.nu_global >= -r.tol;
  r.P = r.nu_global > r.tol;
  r.NN_plus_implied = r.NN;
  r.P_plus_implied = r.P;
  r.note = "NN+ and P+ are reported only as implied by NN and P; the sign-constrained conditions are not certified";
  return r;
}

double nu_bruteforce(const DiscreteOperator& P, Eigen::Index node) {
  if (P.dofs() > kDenseLimit) numeric_error("DenseTooLarge", "brute-force nu limited to small spaces");
  const Space& sp = P.space();
  Mat Y = basis_matrix(sp);
  Vec a = Y.row(node).transpose();
  // orthonormal basis of a⊥ from a Householder reflection
  Eigen::HouseholderQR<Mat> qr(a);
  Mat Qm = qr.householderQ();
  Mat Z = Qm.rightCols(a.size() - 1);
  Mat S = Z.transpose() * P.stiffness_dense() * Z;
  Mat M = Z.transpose() * sp.gram() * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), 0.5 * (M + M.transpose()),
                                                   Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace qc
