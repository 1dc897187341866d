// Discretization backends: periodic charts, spectral spheres, S²×T^k products,
// and single-node homogeneous models.
#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "qcurv/common.hpp"
#include "qcurv/expr.hpp"

namespace qc {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Backend { Chart, Sphere2, Sphere3, Product, Homogeneous };
enum class DiffScheme { FD4, Fourier };

std::string backend_name(Backend b);
Backend backend_from_name(const std::string& s);

struct HomogeneousModel {
  enum class Kind { RoundSphere, Berger, ProductS2Tk, ProductS2S1 };
  Kind kind = Kind::RoundSphere;
  int n = 3;
  double r = 1.0;
  double lambda = 1.0;
  double L = 2.0 * 3.14159265358979323846;
  std::vector<double> periods;
};

struct GridSpec {
  Backend backend = Backend::Chart;
  int dim = 3;
  std::vector<int> resolution;  // chart axes, or the torus axes of a product
  std::vector<double> period;   // same axes as resolution
  double radius = 1.0;          // sphere radius (sphere and product backends)
  int degree = 0;               // spectral backends: maximum harmonic degree
  DiffScheme scheme = DiffScheme::FD4;
  HomogeneousModel model;       // homogeneous backend only
};

class Grid {
 public:
  virtual ~Grid() = default;
  const GridSpec& spec() const { return spec_; }
  Backend backend() const { return spec_.backend; }
  int dim() const { return spec_.dim; }
  Eigen::Index size() const { return weights_.size(); }
  const Vec& weights() const { return weights_; }
  double volume() const { return pairwise_sum(weights_); }
  const Vec* variable(const std::string& name) const;
  std::vector<std::string> variable_names() const;
  Vec field(const ExprPtr& e) const;
  Vec field(const std::string& text) const { return field(parse_expr(text)); }
  double integrate(const Vec& f) const;
  std::string describe() const;

 protected:
  explicit Grid(GridSpec s) : spec_(std::move(s)) {}
  GridSpec spec_;
  Vec weights_;
  std::vector<std::pair<std::string, Vec>> vars_;
};
using GridPtr = std::shared_ptr<const Grid>;

class ChartGrid : public Grid {
 public:
  explicit ChartGrid(const GridSpec& s);
  int axes() const { return static_cast<int>(n_.size()); }
  int n(int axis) const { return n_[axis]; }
  double h(int axis) const { return h_[axis]; }
  Eigen::Index stride(int axis) const { return stride_[axis]; }
  DiffScheme scheme() const { return spec_.scheme; }

  // derivative along one axis, order 1 or 2
  Vec diff(const Vec& f, int axis, int order) const;
  // same derivative as a sparse node×node matrix
  SpMat diff_matrix(int axis, int order) const;
  // applies a dense N×N matrix along one axis
  Vec apply_axis(const Vec& f, int axis, const Mat& m) const;
  // real orthonormal Fourier basis along an axis (columns) and the
  // eigenvalues of the scheme's second-derivative matrix on it
  const Mat& fourier_basis(int axis) const { return basis_[axis]; }
  const Vec& d2_symbol(int axis) const { return d2sym_[axis]; }
  // solves (-Σ_a D2_a)^power u + eps u = f exactly through the axis Fourier bases
  Vec flat_solve(const Vec& f, int power, double eps) const;
  Vec flat_bilaplacian_solve(const Vec& f, double eps) const { return flat_solve(f, 2, eps); }

 private:
  std::vector<int> n_;
  std::vector<double> h_;
  std::vector<Eigen::Index> stride_;
  std::vector<Mat> d1_, d2_;     // per-axis dense matrices (Fourier scheme)
  std::vector<Mat> basis_;
  std::vector<Vec> d2sym_;
};

// S², S³ and S²(r)×T^k. Functions are represented at nodes; the resolved
// space is spanned by an orthonormal (base measure) basis Y (nodes×dofs).
// Differentiation acts along a Killing frame V_a (a tight frame: Σ V_a⊗V_a
// is the inverse base metric).
class FrameGrid : public Grid {
 public:
  explicit FrameGrid(const GridSpec& s);
  int frames() const { return m_; }
  Eigen::Index dofs() const { return Y_.cols(); }
  const Mat& basis() const { return Y_; }
  const std::vector<int>& basis_degree() const { return degree_; }
  const SpMat& frame_matrix(int a) const { return D_[a]; }  // acts on coefficients
  const SpMat& laplacian_matrix() const { return lap_; }   // Σ_a D_a²

  // basis functions evaluated at an arbitrary point: embedding coordinates
  // (S³: x1..x4, S²: x1..x3) followed by the torus coordinates
  Eigen::RowVectorXd basis_at(const Vec& point) const;
  Vec analysis(const Vec& f) const;   // base-measure projection coefficients
  Vec synthesis(const Vec& c) const;
  Vec derivative(const Vec& f, int a) const;  // V_a f via projection
  // g0(V_a, V_b) at every node
  Vec frame_metric(int a, int b) const;
  // Rc0(V_a, V_b) at every node
  Vec base_ricci(int a, int b) const;
  // (∇_{V_a} V_b) f given df[c] = V_c f
  Vec connection(int a, int b, const std::vector<Vec>& df) const;
  bool has_s2() const { return s2_; }
  bool has_s3() const { return s3_; }
  int torus_axes() const { return static_cast<int>(spec_.resolution.size()); }

 private:
  void build_s2(int K, Mat& Y, std::vector<Mat>& DY, std::vector<int>& deg, Vec& w, Mat& X);
  void build_s3(int K);
  void build_torus(Mat& Y, std::vector<Mat>& DY, std::vector<int>& deg, Vec& w, std::vector<Vec>& coords);

  struct Sector {
    int m1, m2, nj;
    Mat T;  // raw sector functions → orthonormal columns
  };
  std::vector<Sector> s2_sectors_, s3_sectors_;
  int K_ = 0;
  int m_ = 0;
  bool s2_ = false, s3_ = false;
  Mat Y_;
  std::vector<int> degree_;
  std::vector<SpMat> D_;
  SpMat lap_;
  Mat xs2_;  // S² embedding coordinates per node (nodes×3) when present
};

class PointGrid : public Grid {
 public:
  explicit PointGrid(const GridSpec& s);
};

GridPtr build_grid(const GridSpec& spec);

}  // namespace qc
