// Laplace–Beltrami, conformal Laplacian and Paneitz operators as
// measure-symmetric discrete operators; covariance checks and spectra.
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qcurv/curvature.hpp"

namespace qc {

enum class OpKind { Laplacian, ConformalLaplacian, Paneitz };
std::string op_kind_name(OpKind k);
OpKind op_kind_from_name(const std::string& s);

// Function space of an operator. On charts it is nodal (coefficients are node
// values, Gram matrix diag(dμ)); on spectral grids it is the resolved space
// spanned by the grid basis Y, with Gram matrix M = Yᵀ diag(dμ) Y.
class Space {
 public:
  explicit Space(const MetricField& g);
  bool nodal() const { return nodal_; }
  Eigen::Index nodes() const { return metric_.grid->size(); }
  Eigen::Index dofs() const { return nodal_ ? nodes() : frame_->dofs(); }
  const MetricField& metric() const { return metric_; }
  const Vec& weights() const { return metric_.dmu; }
  const ChartGrid* chart() const { return chart_; }
  const FrameGrid* frame() const { return frame_; }

  Vec coefficients(const Vec& f) const;  // μ-orthogonal projection coefficients
  Vec values(const Vec& c) const;        // node values of a coefficient vector
  Vec project(const Vec& f) const { return values(coefficients(f)); }
  Vec gram_apply(const Vec& c) const;
  Vec gram_solve(const Vec& c) const;
  Mat gram_apply(const Mat& c) const;
  Mat gram_solve(const Mat& c) const;
  Mat gram() const;                      // dense M (use on small spaces)
  // A = M⁻¹ Yᵀ diag(dμ): node samples → coefficients (spectral grids only)
  Mat analysis_matrix() const;
  double inner(const Vec& u, const Vec& v) const { return weighted_dot(u, v, weights()); }

 private:
  MetricField metric_;
  bool nodal_ = true;
  const ChartGrid* chart_ = nullptr;
  const FrameGrid* frame_ = nullptr;
  Mat M_;
  Eigen::LLT<Mat> Mllt_;
};
using SpacePtr = std::shared_ptr<const Space>;

class DiscreteOperator {
 public:
  DiscreteOperator(OpKind kind, const MetricField& g, const CurvatureBundle& b);
  OpKind kind() const { return kind_; }
  int dim() const { return n_; }
  std::string route() const { return "quadratic-form"; }
  const Space& space() const { return *space_; }
  SpacePtr space_ptr() const { return space_; }
  const CurvatureBundle& bundle() const { return *bundle_; }
  Eigen::Index dofs() const { return space_->dofs(); }
  // constant of the zeroth-order term: (n-4)/2 for P
  double q_coefficient() const { return 0.5 * (n_ - 4); }

  Vec stiffness(const Vec& c) const;  // S c, ⟨Au, v⟩_μ = vᵀ S u in coefficients
  const Mat& stiffness_dense() const;  // assembles on first use (charts)
  bool has_dense() const { return dense_ready_; }
  Vec apply(const Vec& u) const;       // node values in, node values out
  double energy(const Vec& u) const;   // ⟨Au, u⟩_μ
  double bilinear(const Vec& u, const Vec& v) const;
  // pointwise integrand of the energy, evaluated term by term on the resolved u
  Vec energy_density(const Vec& u) const;
  // (Δ²+ε)⁻¹-type preconditioner of matching order, in coefficient space
  Vec precondition(const Vec& r, double eps) const;

  // chart building blocks (node space)
  Vec lap_h(const Vec& u) const;
  Vec lap_sym(const Vec& u) const;

 private:
  Vec chart_stiffness(const Vec& u) const;
  void assemble_frame();
  Vec frame_energy_density(const Vec& u) const;

  OpKind kind_;
  int n_;
  SpacePtr space_;
  std::shared_ptr<const CurvatureBundle> bundle_;
  // chart coefficient fields
  std::vector<Vec> ginv_, bup_;
  std::vector<Vec> gam_;
  Vec const_defect_;
  Vec zeroth_;  // zeroth-order coefficient (R for L, cQ for P)
  mutable Mat S_;
  mutable bool dense_ready_ = false;
  Vec precond_diag_;
};
using OperatorPtr = std::shared_ptr<const DiscreteOperator>;

OperatorPtr assemble_operator(OpKind kind, const MetricField& g, const CurvatureBundle& b);

// Direct evaluation of the defining formulas (independent of the quadratic form).
Vec strong_apply(OpKind kind, const MetricField& g, const CurvatureBundle& b, const Vec& u);

struct Spectrum {
  Vec values;                     // ascending
  Mat vectors;                    // node values, μ-orthonormal (when requested)
  std::vector<int> multiplicity;  // size of the cluster each value belongs to
  std::string method;
};
Spectrum spectrum(const DiscreteOperator& op, int k, bool vectors = false);

// Estimated ‖A − B‖ / ‖B‖ in the μ-norm by power iteration.
double operator_distance(const DiscreteOperator& A, const std::function<Vec(const Vec&)>& B, int iters = 60);

// Conjugation side of the covariance law for a factor under a convention,
// evaluated with the base operator.
Vec conjugated_apply(const DiscreteOperator& base, const Vec& factor, Convention c, const Vec& phi);

struct CovarianceReport {
  double residual = 0;
  std::vector<double> per_test;
};
CovarianceReport covariance_residual(const DiscreteOperator& base, const Vec& factor, Convention c,
                                     const std::vector<Vec>& tests);

Vec q_from_transformation(const DiscreteOperator& base, const Vec& factor, Convention c);

}  // namespace qc
