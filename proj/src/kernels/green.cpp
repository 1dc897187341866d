#include <cmath>
#include <numbers>
#include <random>

#include "qcurv/kernels.hpp"

namespace qc {

namespace {

constexpr Eigen::Index kDenseLimit = 6000;

double mnorm(const Space& sp, const Vec& x) { return std::sqrt(std::max(0.0, x.dot(sp.gram_apply(x)))); }

Vec start_vector(Eigen::Index n) {
  std::mt19937_64 rng(0x9e3779b9ULL);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * nd(rng);
  return x;
}

struct DenseInverse {
  Eigen::PartialPivLU<Mat> lu;
  Invertibility inv;
};

DenseInverse dense_inverse(const DiscreteOperator& op) {
  const Space& sp = op.space();
  const Mat& S = op.stiffness_dense();
  DenseInverse d;
  d.lu.compute(S);
  Vec x = start_vector(S.rows());
  double lam = 0;
  for (int it = 0; it < 60; ++it) {
    Vec y = sp.gram_solve(Vec(S * x));
    lam = mnorm(sp, y) / mnorm(sp, x);
    x = y / mnorm(sp, y);
  }
  d.inv.norm = lam;
  x = start_vector(S.rows());
  double mu = 0;
  for (int it = 0; it < 60; ++it) {
    Vec y = d.lu.solve(sp.gram_apply(x));
    if (!y.allFinite()) {
      mu = INFINITY;
      break;
    }
    mu = mnorm(sp, y) / mnorm(sp, x);
    x = y / mnorm(sp, y);
  }
  d.inv.smallest = std::isfinite(mu) && mu > 0 ? 1.0 / mu : 0.0;
  Vec v = sp.values(x);
  d.inv.null_vector = v / std::sqrt(sp.inner(v, v));
  return d;
}

[[noreturn]] void kernel_error(const Invertibility& inv) {
  const Vec& v = inv.null_vector;
  double mean = v.mean();
  double spread = max_abs(v.array() - mean);
  std::string what = "smallest |eigenvalue| " + std::to_string(inv.smallest) + " against norm " + std::to_string(inv.norm);
  if (spread <= 1e-6 * std::abs(mean)) what += "; near-null vector is constant";
  else what += "; near-null vector varies by " + std::to_string(spread);
  numeric_error("NontrivialKernel", what);
}

Vec pcg(const DiscreteOperator& op, const Vec& b, double tol) {
  const Eigen::Index n = b.size();
  Vec x = Vec::Zero(n), r = b;
  const double eps = 1e-8;
  Vec z = op.precondition(r, eps), p = z;
  double rz = r.dot(z), bn = b.norm();
  if (bn == 0) return x;
  for (int it = 0; it < 20000; ++it) {
    Vec Ap = op.stiffness(p);
    double a = rz / p.dot(Ap);
    x += a * p;
    r -= a * Ap;
    if (r.norm() <= tol * bn) return x;
    z = op.precondition(r, eps);
    double rz2 = r.dot(z);
    p = z + (rz2 / rz) * p;
    rz = rz2;
  }
  numeric_error("SolverNotConverged", "conjugate gradients did not reach tolerance");
}

}  // namespace

Invertibility invertibility(const DiscreteOperator& op) {
  if (op.dofs() <= kDenseLimit) return dense_inverse(op).inv;
  const Space& sp = op.space();
  Invertibility inv;
  Spectrum s = spectrum(op, 2, true);
  inv.smallest = std::min(std::abs(s.values[0]), std::abs(s.values[1]));
  inv.null_vector = s.vectors.col(std::abs(s.values[0]) <= std::abs(s.values[1]) ? 0 : 1);
  Vec x = start_vector(op.dofs());
  for (int it = 0; it < 60; ++it) {
    Vec y = sp.gram_solve(op.stiffness(x));
    inv.norm = mnorm(sp, y) / mnorm(sp, x);
    x = y / mnorm(sp, y);
  }
  return inv;
}

Kernel greens_kernel(const DiscreteOperator& op) {
  Kernel k;
  k.space = op.space_ptr();
  k.symmetric = true;
  k.label = "G_" + op_kind_name(op.kind());
  if (op.dofs() <= kDenseLimit) {
    DenseInverse d = dense_inverse(op);
    if (!d.inv.invertible()) kernel_error(d.inv);
    Mat C = d.lu.solve(Mat(Mat::Identity(op.dofs(), op.dofs())));
    k.C = 0.5 * (C + C.transpose());
    return k;
  }
  Invertibility inv = invertibility(op);
  if (!inv.invertible()) kernel_error(inv);
  auto holder = std::make_shared<const DiscreteOperator>(op);
  k.action = [holder](const Vec& c) { return pcg(*holder, holder->space().gram_apply(c), 1e-10); };
  return k;
}

Vec greens_column(const DiscreteOperator& op, const Pivot& q) {
  Kernel G = greens_kernel(op);
  return kernel_column(G, q);
}

double paneitz_cn(int n) {
  if (n < 5) config_error("UnsupportedDimension", "c_n is defined for n ≥ 5");
  const double a = n - 2.0;
  return std::pow(2.0, -(n - 6) / a) * std::pow(n, 2 / a) * std::pow(n - 1.0, -(n - 4) / a) * a * (n - 4.0) *
         std::pow(unit_ball_volume(n), 2 / a);
}

}  // namespace qc
