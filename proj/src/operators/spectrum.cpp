#include <algorithm>
#include <cmath>
#include <random>

#include "qcurv/operators.hpp"

namespace qc {

namespace {

constexpr Eigen::Index kDenseEigenLimit = 2000;
constexpr std::uint64_t kStartSeed = 0x5eed5eedULL;

Mat start_block(Eigen::Index N, Eigen::Index bs) {
  std::mt19937_64 rng(kStartSeed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat X(N, bs);
  for (Eigen::Index j = 0; j < bs; ++j)
    for (Eigen::Index i = 0; i < N; ++i) X(i, j) = (j == 0 ? 1.0 : 0.0) + 0.1 * nd(rng);
  return X;
}

Mat apply_cols(const DiscreteOperator& op, const Mat& X) {
  Mat out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) out.col(j) = op.stiffness(X.col(j));
  return out;
}

// Rayleigh–Ritz on span(V): returns Ritz values (ascending) and coefficient matrix C
void rayleigh_ritz(const Mat& V, const Mat& AV, const Mat& BV, Vec& theta, Mat& C) {
  Mat GA = V.transpose() * AV, GB = V.transpose() * BV;
  GA = 0.5 * (GA + GA.transpose()).eval();
  GB = 0.5 * (GB + GB.transpose()).eval();
  Vec s = GB.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  GA = s.asDiagonal() * GA * s.asDiagonal();
  GB = s.asDiagonal() * GB * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> eb(GB);
  const double top = eb.eigenvalues().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < GB.rows(); ++i)
    if (eb.eigenvalues()[i] > 1e-10 * top) keep.push_back(i);
  Mat Q(GB.rows(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j)
    Q.col(j) = eb.eigenvectors().col(keep[j]) / std::sqrt(eb.eigenvalues()[keep[j]]);
  Mat R = Q.transpose() * GA * Q;
  Eigen::SelfAdjointEigenSolver<Mat> er(0.5 * (R + R.transpose()));
  theta = er.eigenvalues();
  C = s.asDiagonal() * Q * er.eigenvectors();
}

struct Lobpcg {
  Vec values;
  Mat vectors;
  int iterations = 0;
};

Lobpcg lobpcg(const DiscreteOperator& op, int k, double tol, int maxit) {
  const Space& sp = op.space();
  const Eigen::Index N = op.dofs();
  const Eigen::Index bs = std::min<Eigen::Index>(N, k + std::max(4, k));
  Mat X = start_block(N, bs);
  Mat AX = apply_cols(op, X), BX = sp.gram_apply(X);
  Vec theta;
  Mat C;
  rayleigh_ritz(X, AX, BX, theta, C);
  X = X * C.leftCols(bs);
  AX = AX * C.leftCols(bs);
  BX = BX * C.leftCols(bs);
  Vec lam = theta.head(bs);
  Mat P(N, 0), AP(N, 0), BP(N, 0);
  Lobpcg out;
  double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
  for (int it = 0; it < maxit; ++it) {
    Mat R = AX - BX * lam.asDiagonal();
    bool done = true;
    for (int j = 0; j < k; ++j) {
      if (R.col(j).norm() > tol * scale * BX.col(j).norm()) done = false;
    }
    out.iterations = it;
    if (done) break;
    Mat Wt(N, bs);
    const double eps = std::max(std::abs(lam[bs - 1]), 1e-8 * scale);
    for (Eigen::Index j = 0; j < bs; ++j) Wt.col(j) = op.precondition(R.col(j), eps);
    Eigen::LDLT<Mat> xbx(X.transpose() * BX);
    Wt -= X * xbx.solve(BX.transpose() * Wt);
    if (P.cols()) {
      Mat cp = xbx.solve(BX.transpose() * P);
      P -= X * cp;
      AP -= AX * cp;
      BP -= BX * cp;
    }
    Mat AW = apply_cols(op, Wt), BW = sp.gram_apply(Wt);
    const Eigen::Index np = P.cols(), tot = 2 * bs + np;
    Mat V(N, tot), AV(N, tot), BV(N, tot);
    V << X, Wt, P;
    AV << AX, AW, AP;
    BV << BX, BW, BP;
    rayleigh_ritz(V, AV, BV, theta, C);
    scale = std::max(scale, theta.cwiseAbs().maxCoeff());
    Mat Cx = C.leftCols(bs);
    Mat Crest = Cx.bottomRows(tot - bs);
    P = V.rightCols(tot - bs) * Crest;
    AP = AV.rightCols(tot - bs) * Crest;
    BP = BV.rightCols(tot - bs) * Crest;
    X = V * Cx;
    AX = AV * Cx;
    BX = BV * Cx;
    lam = theta.head(bs);
    if (it % 20 == 19) {
      AX = apply_cols(op, X);
      BX = sp.gram_apply(X);
      if (P.cols()) {
        AP = apply_cols(op, P);
        BP = sp.gram_apply(P);
      }
    }
    if (it + 1 == maxit) numeric_error("EigenNotConverged", "block eigensolver did not converge in " + std::to_string(maxit) + " iterations");
  }
  // final Rayleigh–Ritz removes drift in the implicit updates
  AX = apply_cols(op, X);
  BX = sp.gram_apply(X);
  rayleigh_ritz(X, AX, BX, theta, C);
  out.values = theta.head(k);
  out.vectors = X * C.leftCols(k);
  return out;
}

void normalize_signs(Mat& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    const double big = V.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < V.rows(); ++i)
      if (std::abs(V(i, j)) > 1e-8 * big) {
        if (V(i, j) < 0) V.col(j) = -V.col(j);
        break;
      }
  }
}

}  // namespace

Spectrum spectrum(const DiscreteOperator& op, int k, bool vectors) {
  const Space& sp = op.space();
  const Eigen::Index N = op.dofs();
  if (k < 1 || k > N) config_error("SpectrumRequest", "requested eigenvalue count out of range");
  Spectrum out;
  Mat C;
  if (op.has_dense() || N <= kDenseEigenLimit) {
    const Mat& S = op.stiffness_dense();
    const auto opt = vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
    if (sp.nodal()) {
      Vec s = sp.weights().cwiseSqrt().cwiseInverse();
      Mat Sh = s.asDiagonal() * S * s.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Mat> es(Sh, opt);
      out.values = es.eigenvalues().head(k);
      if (vectors) C = s.asDiagonal() * es.eigenvectors().leftCols(k);
    } else {
      Mat M = sp.gram();
      if (M.isIdentity(0.0)) {
        Eigen::SelfAdjointEigenSolver<Mat> es(S, opt);
        out.values = es.eigenvalues().head(k);
        if (vectors) C = es.eigenvectors().leftCols(k);
      } else {
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(S, M, opt | Eigen::Ax_lBx);
        out.values = es.eigenvalues().head(k);
        if (vectors) C = es.eigenvectors().leftCols(k);
      }
    }
    out.method = "dense";
  } else {
    Lobpcg r = lobpcg(op, k, 1e-9, 500);
    out.values = r.values;
    C = r.vectors;
    out.method = "lobpcg(" + std::to_string(r.iterations) + ")";
  }
  if (!out.values.allFinite()) numeric_error("NonFinite", "eigenvalues are not finite");
  const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
  out.multiplicity.assign(k, 1);
  for (int i = 0; i < k;) {
    int j = i + 1;
    while (j < k && std::abs(out.values[j] - out.values[i]) <= 1e-7 * scale) ++j;
    for (int t = i; t < j; ++t) out.multiplicity[t] = j - i;
    i = j;
  }
  if (vectors) {
    Mat V(sp.nodes(), k);
    for (int j = 0; j < k; ++j) {
      Vec v = sp.values(C.col(j));
      V.col(j) = v / std::sqrt(sp.inner(v, v));
    }
    normalize_signs(V);
    out.vectors = V;
  }
  return out;
}

double operator_distance(const DiscreteOperator& A, const std::function<Vec(const Vec&)>& B, int iters) {
  const Space& sp = A.space();
  auto power = [&](const std::function<Vec(const Vec&)>& f) {
    Vec x = start_block(sp.nodes(), 2).col(1);
    x /= std::sqrt(sp.inner(x, x));
    double lam = 0.0;
    for (int i = 0; i < iters; ++i) {
      Vec y = f(x);
      lam = std::sqrt(sp.inner(y, y));
      if (lam == 0.0) return 0.0;
      x = y / lam;
    }
    return lam;
  };
  double d = power([&](const Vec& x) { return Vec(A.apply(x) - B(x)); });
  double b = power(B);
  return b > 0 ? d / b : d;
}

}  // namespace qc
