// Metrics sampled on grids and the curvature pipeline derived from them.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qcurv/grid.hpp"

namespace qc {

enum class Convention { RhoN4, E2W, RhoNeg4 };
std::string convention_name(Convention c);
Convention convention_from_name(const std::string& s);

// Components are taken in the grid's working frame: coordinate fields on a
// chart, the Killing frame V_a on sphere/product grids (g = e^{2w} g0 there).
// Index space has size m (m = n on charts, m = frames() otherwise); symmetric
// tensors are stored full, component (a,b) at a*m+b.
struct MetricField {
  GridPtr grid;
  int n = 0;
  int m = 0;
  bool conformal_frame = false;
  std::vector<Vec> g, ginv;
  Vec w;         // conformal exponent (frame grids)
  Vec sqrt_det;  // density relative to the grid weights
  Vec dmu;       // grid weight × density
  const Vec& comp(int a, int b) const { return g[a * m + b]; }
};

MetricField metric_standard(GridPtr grid);
MetricField metric_conformal(GridPtr grid, const Vec& w);
// chart only; components in upper-triangular order g11 g12 .. g1n g22 ..
MetricField metric_components(GridPtr grid, const std::vector<Vec>& upper);
MetricField conformal_deform(const MetricField& g, const Vec& factor, Convention c);
// the pointwise scale s with g̃ = s·g for a factor under a convention
Vec conformal_scale(const Vec& factor, Convention c, int n);

struct CurvatureBundle {
  int n = 0, m = 0;
  bool has_christoffel = false, has_riemann = false, has_weyl = false;
  std::vector<Vec> g, ginv;
  std::vector<Vec> christoffel;  // Γ^k_ij at (k*m+i)*m+j
  std::vector<Vec> riemann;      // R_abcd at ((a*m+b)*m+c)*m+d
  std::vector<Vec> Rc, A, Aring, E, W;
  Vec R, J, absA2, absRc2, sigma2, absW2, lapJ, lapR, Q;
  std::vector<std::pair<std::string, Vec>> q_forms;
  Vec dmu;
  Eigen::Index size() const { return R.size(); }
};

CurvatureBundle curvature_from_metric(const MetricField& g);
// Laplace–Beltrami of g applied to a node function, divergence form
Vec metric_laplacian(const MetricField& g, const Vec& f);
CurvatureBundle homogeneous_catalog(const HomogeneousModel& model);

// Algebraic stages shared by every backend: stage one fills R, J, A, Å, E,
// norms, σ₂ and (with Riemann, n=4) Weyl from g, g⁻¹ and Rc; stage two needs
// lapJ/lapR and fills Q and its alternative forms.
void curvature_algebra(CurvatureBundle& b);
void curvature_q(CurvatureBundle& b);

// pointwise tensor helpers in the bundle's index space
Vec tensor_trace(const CurvatureBundle& b, const std::vector<Vec>& T);
Vec tensor_norm2(const CurvatureBundle& b, const std::vector<Vec>& T);

struct GaussBonnet {
  double weyl_energy = 0, q_integral = 0, cgb_lhs = 0;
};
GaussBonnet weyl_gauss_bonnet(const CurvatureBundle& b);

double unit_ball_volume(int n);
double sphere_volume(int n, double r);

}  // namespace qc
