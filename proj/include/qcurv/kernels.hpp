// Kernels K(p,q) on a grid, Green's functions, the H/Γ₁ construction and the
// Neumann series for the Paneitz Green's function.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qcurv/operators.hpp"

namespace qc {

// K(p,q) = Y(p) C Y(q)ᵀ over the operator space (Y = identity on charts).
// T_K φ = Y C Yᵀ diag(dμ) φ and (K∗K′) has coefficients C M C′. Kernels too
// large to store are operator-backed: `action` maps coefficients c ↦ C M c.
struct Kernel {
  SpacePtr space;
  Mat C;
  std::function<Vec(const Vec&)> action;
  bool symmetric = false;
  std::string label;
  bool dense() const { return C.size() > 0; }
};

// A pivot is either a node index or a point given by embedding coordinates.
struct Pivot {
  Eigen::Index node = -1;
  Vec point;
  static Pivot at_node(Eigen::Index k) { return {k, {}}; }
  static Pivot at_point(Vec x) { return {-1, std::move(x)}; }
};

Kernel identity_kernel(SpacePtr sp);
Kernel constant_kernel(SpacePtr sp, double value);
Kernel kernel_from_nodes(SpacePtr sp, const Mat& values, bool symmetric);
Kernel kernel_scale_add(double a, const Kernel& A, double b, const Kernel& B);
Mat kernel_nodes(const Kernel& K);
Vec kernel_column(const Kernel& K, const Pivot& q);  // K(·, q) at nodes
double kernel_value(const Kernel& K, const Pivot& p, const Pivot& q);
Vec kernel_apply(const Kernel& K, const Vec& phi);
Vec kernel_apply_serial(const Kernel& K, const Vec& phi);
Kernel kernel_compose(const Kernel& A, const Kernel& B);
Kernel kernel_compose_serial(const Kernel& A, const Kernel& B);
double kernel_symmetry_defect(const Kernel& K);

// distance from a pivot to every node in the base geometry (flat coordinates on charts)
Vec node_distance(const Grid& g, const Pivot& p);
double default_mask_radius(const Grid& g);

struct Invertibility {
  double smallest = 0;  // |λ|_min of S x = λ M x
  double norm = 0;      // |λ|_max
  Vec null_vector;      // node values of the near-null vector
  bool invertible() const { return smallest > 1e-9 * norm; }
};
Invertibility invertibility(const DiscreteOperator& op);

// Green's function of op; dense when the space has at most 6000 dofs, else
// operator-backed through conjugate gradients at tolerance 1e-10.
Kernel greens_kernel(const DiscreteOperator& op);
Vec greens_column(const DiscreteOperator& op, const Pivot& q);

double paneitz_cn(int n);

struct HGamma {
  Kernel H, gamma;
  double prefactor = 0;
};
// H from the closed-form power of G_L; Γ₁ := δ − P_q H as the exact discrete residual.
HGamma build_H_gamma(const Kernel& GL, const DiscreteOperator& P);
Kernel gamma_residual(const Kernel& H, const DiscreteOperator& P);

// Closed-form Γ₁ rows at the pivots, from the curvature of G_{L,p}^{4/(n-2)} g.
struct MaskedRows {
  std::vector<Eigen::Index> pivots;
  Mat values;                                   // pivots × nodes
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> masked;
  double radius = 0;
};
MaskedRows gamma_analytic(const Kernel& GL, const MetricField& g, const std::vector<Eigen::Index>& pivots,
                          double radius);

struct RadiusReport {
  double radius = 0;          // power-iteration estimate
  double rowsum_bound = 0;    // max_p ∫|Γ₁(p,q)| dμ(q)
  bool nonnegative = false;   // the row-sum bound certifies only when Γ₁ ≥ 0
  int iterations = 0;
  double dense_radius = -1;   // from the full eigen-decomposition on small spaces
};
RadiusReport spectral_radius(const Kernel& gamma);

struct NeumannResult {
  Kernel GP;
  int terms = 0;
  double tail_bound = 0;
  std::vector<double> term_norms;  // ‖Γ_k∗H‖_∞ per term
  double fitted_ratio = 0;
};
NeumannResult neumann_green(const Kernel& H, const Kernel& gamma, double tol, int kmax);

// max_p |∫Γ₁(p,q)dμ(q) − (1 − (n−4)/2 ∫H(p,q)Q(q)dμ(q))|
double rowsum_check(const Kernel& H, const Kernel& gamma, const Vec& Q, int n);

struct IdentityResidual {
  std::vector<double> radii, residual, scale;  // per radius: max |residual|, max |P(G^a)| outside
};
IdentityResidual identity_residual(const DiscreteOperator& P, const Kernel& GL, const Pivot& p,
                                   const std::vector<double>& radii);

struct SignReport {
  double min_off = 0, max_off = 0;
  long violations = 0, checked = 0;
  int expected = 0;
};
SignReport sign_scan(const Kernel& K, int expected_sign, const std::vector<Eigen::Index>& pivots = {});

// A = 2n(n−2)(n−4)ω_n ∫ G_P(p,q) Γ₁(p,q) dμ(q), masked quadrature over two
// radii with Richardson extrapolation (error ∝ r^{8-n})
double mass_constant(const Kernel& GP, const MaskedRows& gamma, int row, int n);
Vec pole_values(const Kernel& GP);

// deterministic subsample of pivots spread over the grid
std::vector<Eigen::Index> pivot_sample(const Grid& g, int count);

}  // namespace qc
