#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unsupported/Eigen/KroneckerProduct>

#include "qcurv/grid.hpp"
#include "qcurv/quadrature.hpp"

namespace qc {

namespace {

constexpr double kPi = std::numbers::pi;

// trig factor of a signed azimuthal index: cos(m x) for m>0, sin(|m| x) for m<0
inline double trig(int m, double x) { return m >= 0 ? std::cos(m * x) : std::sin(-m * x); }
inline double dtrig(int m, double x) { return m >= 0 ? -m * std::sin(m * x) : -m * std::cos(-m * x); }

// Orthonormalizes columns of C in the weighted inner product and applies the
// same transform to the companion matrices.
Mat orthonormalize(Mat& C, std::vector<Mat*> companions, const Vec& w) {
  Mat G = C.transpose() * w.asDiagonal() * C;
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) numeric_error("BasisBuild", "sector Gram matrix not positive definite");
  Mat Linv = llt.matrixL().solve(Mat::Identity(G.rows(), G.cols()));
  Mat T = Linv.transpose();
  C = C * T;
  for (Mat* m : companions) *m = *m * T;
  return T;
}

SpMat sparsify(const Mat& m, double tol = 1e-13) {
  SpMat s = m.sparseView(1.0, tol);
  s.makeCompressed();
  return s;
}

}  // namespace

void FrameGrid::build_s2(int K, Mat& Y, std::vector<Mat>& DY, std::vector<int>& deg, Vec& w, Mat& X) {
  const int nz = K + 1, nph = 2 * K + 2, nodes = nz * nph;
  GaussRule gl = gauss_legendre(nz);
  w.resize(nodes);
  X.resize(nodes, 3);
  Vec th(nodes), ph(nodes);
  for (int i = 0; i < nz; ++i)
    for (int p = 0; p < nph; ++p) {
      int k = i * nph + p;
      double z = gl.nodes[i], st = std::sqrt(1.0 - z * z), f = 2.0 * kPi * p / nph;
      w[k] = gl.weights[i] * 2.0 * kPi / nph;
      th[k] = std::acos(z);
      ph[k] = f;
      X(k, 0) = st * std::cos(f);
      X(k, 1) = st * std::sin(f);
      X(k, 2) = z;
    }
  // L_a = e_a × x in angle components
  Mat dth(nodes, 3), dph(nodes, 3);
  for (int k = 0; k < nodes; ++k) {
    Eigen::Vector3d x = X.row(k).transpose();
    double s2 = 1.0 - x[2] * x[2];
    for (int a = 0; a < 3; ++a) {
      Eigen::Vector3d V = Eigen::Vector3d::Unit(a).cross(x);
      dth(k, a) = -V[2] / std::sqrt(s2);
      dph(k, a) = (x[0] * V[1] - x[1] * V[0]) / s2;
    }
  }
  std::vector<double> P(K + 1), dP(K + 1);
  std::vector<Mat> cols, dcols[3];
  std::vector<std::vector<int>> degs;
  Y.resize(nodes, (K + 1) * (K + 1));
  for (auto& d : DY) d.resize(nodes, Y.cols());
  deg.clear();
  int col = 0;
  for (int m = -K; m <= K; ++m) {
    const int a = std::abs(m), nj = K - a + 1;
    Mat C(nodes, nj), Dth(nodes, nj), Dph(nodes, nj);
    for (int k = 0; k < nodes; ++k) {
      double z = std::cos(th[k]), s = std::sin(th[k]);
      legendre_table(z, nj - 1, P.data(), dP.data());
      double sa = std::pow(s, a), t = trig(m, ph[k]), dt = dtrig(m, ph[k]);
      double dsa = a == 0 ? 0.0 : a * std::pow(s, a - 1) * z;
      for (int j = 0; j < nj; ++j) {
        double F = sa * P[j];
        double dF = dsa * P[j] - sa * s * dP[j];
        C(k, j) = F * t;
        Dth(k, j) = dF * t;
        Dph(k, j) = F * dt;
      }
    }
    Mat L[3];
    for (int c = 0; c < 3; ++c) L[c] = dth.col(c).asDiagonal() * Dth + dph.col(c).asDiagonal() * Dph;
    s2_sectors_.push_back({m, 0, nj, orthonormalize(C, {&L[0], &L[1], &L[2]}, w)});
    Y.middleCols(col, nj) = C;
    for (int c = 0; c < 3; ++c) DY[c].middleCols(col, nj) = L[c];
    for (int j = 0; j < nj; ++j) deg.push_back(a + j);
    col += nj;
  }
  vars_.emplace_back("theta", th);
  vars_.emplace_back("phi", ph);
}

void FrameGrid::build_torus(Mat& Y, std::vector<Mat>& DY, std::vector<int>& deg, Vec& w,
                            std::vector<Vec>& coords) {
  const int k = torus_axes();
  Y = Mat::Ones(1, 1);
  w = Vec::Ones(1);
  deg.assign(1, 0);
  DY.clear();
  coords.clear();
  for (int ax = 0; ax < k; ++ax) {
    const int N = spec_.resolution[ax];
    const double L = spec_.period[ax];
    if (N < 4) config_error("GridSpec", "torus factor resolution must be at least 4");
    if (!(L > 0)) config_error("GridSpec", "periods must be positive");
    const int mmax = (N - 1) / 2, nd = 2 * mmax + 1;
    Mat B(N, nd), dB(N, nd);
    Vec wa = Vec::Constant(N, L / N), xa(N);
    std::vector<int> da;
    for (int p = 0; p < N; ++p) {
      double x = L * p / N;
      xa[p] = x;
      int c = 0;
      for (int m = 0; m <= mmax; ++m)
        for (int sgn : {1, -1}) {
          if (m == 0 && sgn < 0) continue;
          int sm = sgn * m;
          double kx = 2.0 * kPi / L, nrm = m == 0 ? std::sqrt(1.0 / L) : std::sqrt(2.0 / L);
          B(p, c) = nrm * trig(sm, kx * x);
          dB(p, c) = nrm * kx * dtrig(sm, kx * x);
          if (p == 0) da.push_back(m);
          ++c;
        }
    }
    // extend the running product: previous axes outer, this axis inner
    Mat Ynew = Eigen::kroneckerProduct(Y, B);
    for (auto& d : DY) d = Eigen::kroneckerProduct(d, B).eval();
    DY.push_back(Eigen::kroneckerProduct(Y, dB));
    Vec wnew = Eigen::kroneckerProduct(w, wa);
    for (auto& c : coords) c = Eigen::kroneckerProduct(c, Vec::Ones(N)).eval();
    coords.push_back(Eigen::kroneckerProduct(Vec::Ones(w.size()), xa));
    std::vector<int> dnew;
    for (int d0 : deg)
      for (int d1 : da) dnew.push_back(d0 + d1);
    Y = std::move(Ynew);
    w = std::move(wnew);
    deg = std::move(dnew);
  }
}

void FrameGrid::build_s3(int K) {
  const int ns = K / 2 + 1, N = 2 * K + 2, nodes = ns * N * N;
  const double r = spec_.radius;
  GaussRule gl = gauss_legendre(ns);
  weights_.resize(nodes);
  Vec eta(nodes), x1(nodes), x2(nodes), x3(nodes), x4(nodes), xi1(nodes), xi2(nodes), theta(nodes);
  for (int i = 0; i < ns; ++i)
    for (int p = 0; p < N; ++p)
      for (int q = 0; q < N; ++q) {
        int k = (i * N + p) * N + q;
        double e = 0.5 * std::acos(gl.nodes[i]);
        double a = 2.0 * kPi * p / N, b = 2.0 * kPi * q / N;
        weights_[k] = gl.weights[i] / 4.0 * (2.0 * kPi / N) * (2.0 * kPi / N) * r * r * r;
        eta[k] = e;
        xi1[k] = a;
        xi2[k] = b;
        x1[k] = std::cos(e) * std::cos(a);
        x2[k] = std::cos(e) * std::sin(a);
        x3[k] = std::sin(e) * std::cos(b);
        x4[k] = std::sin(e) * std::sin(b);
        theta[k] = std::acos(std::clamp(x4[k], -1.0, 1.0));
      }
  // Killing frame X_a = A_a x and its coordinate components
  Mat deta(nodes, 3), dx1(nodes, 3), dx2(nodes, 3);
  for (int k = 0; k < nodes; ++k) {
    double y1 = x1[k], y2 = x2[k], y3 = x3[k], y4 = x4[k];
    double V[3][4] = {{-y2, y1, y4, -y3}, {-y3, -y4, y1, y2}, {-y4, y3, -y2, y1}};
    double c = std::cos(eta[k]), s = std::sin(eta[k]);
    for (int a = 0; a < 3; ++a) {
      dx1(k, a) = (y1 * V[a][1] - y2 * V[a][0]) / (c * c);
      dx2(k, a) = (y3 * V[a][3] - y4 * V[a][2]) / (s * s);
      deta(k, a) = -(y1 * V[a][0] + y2 * V[a][1]) / (c * s);
    }
  }
  int total = 0;
  for (int k = 0; k <= K; ++k) total += (k + 1) * (k + 1);
  Y_.resize(nodes, total);
  std::vector<Mat> XY(3, Mat(nodes, total));
  degree_.clear();
  std::vector<std::pair<int, int>> sector_of;  // (|m1|, |m2|) per column
  std::vector<double> P(K + 1), dP(K + 1);
  int col = 0;
  for (int m1 = -K; m1 <= K; ++m1)
    for (int m2 = -K; m2 <= K; ++m2) {
      const int a = std::abs(m1), b = std::abs(m2);
      if (a + b > K) continue;
      const int nj = (K - a - b) / 2 + 1;
      Mat C(nodes, nj), Ce(nodes, nj), C1(nodes, nj), C2(nodes, nj);
      for (int k = 0; k < nodes; ++k) {
        double c = std::cos(eta[k]), s = std::sin(eta[k]), z = std::cos(2 * eta[k]);
        legendre_table(z, nj - 1, P.data(), dP.data());
        double ca = std::pow(c, a), sb = std::pow(s, b);
        double dcs = (a ? -a * std::pow(c, a - 1) * s * sb : 0.0) + (b ? b * ca * std::pow(s, b - 1) * c : 0.0);
        double t1 = trig(m1, xi1[k]), t2 = trig(m2, xi2[k]);
        double d1 = dtrig(m1, xi1[k]), d2 = dtrig(m2, xi2[k]);
        for (int j = 0; j < nj; ++j) {
          double F = ca * sb * P[j];
          double dF = dcs * P[j] - 2.0 * std::sin(2 * eta[k]) * ca * sb * dP[j];
          C(k, j) = F * t1 * t2;
          Ce(k, j) = dF * t1 * t2;
          C1(k, j) = F * d1 * t2;
          C2(k, j) = F * t1 * d2;
        }
      }
      Mat L[3];
      for (int f = 0; f < 3; ++f)
        L[f] = deta.col(f).asDiagonal() * Ce + dx1.col(f).asDiagonal() * C1 + dx2.col(f).asDiagonal() * C2;
      s3_sectors_.push_back({m1, m2, nj, orthonormalize(C, {&L[0], &L[1], &L[2]}, weights_)});
      Y_.middleCols(col, nj) = C;
      for (int f = 0; f < 3; ++f) XY[f].middleCols(col, nj) = L[f] / r;
      for (int j = 0; j < nj; ++j) {
        degree_.push_back(a + b + 2 * j);
        sector_of.emplace_back(a, b);
      }
      col += nj;
    }
  // frame matrices by projection, restricted to neighbouring sectors
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (int c = 0; c < total; ++c) groups[sector_of[c]].push_back(c);
  Mat WY = weights_.asDiagonal() * Y_;
  for (int f = 0; f < 3; ++f) {
    std::vector<Eigen::Triplet<double>> trip;
    for (auto& [key, cols] : groups) {
      Mat XYc(nodes, cols.size());
      for (std::size_t j = 0; j < cols.size(); ++j) XYc.col(j) = XY[f].col(cols[j]);
      for (auto& [key2, rows] : groups) {
        if (std::abs(key2.first - key.first) > 1 || std::abs(key2.second - key.second) > 1) continue;
        Mat WYr(nodes, rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) WYr.col(i) = WY.col(rows[i]);
        Mat blk = WYr.transpose() * XYc;
        for (std::size_t i = 0; i < rows.size(); ++i)
          for (std::size_t j = 0; j < cols.size(); ++j)
            if (std::abs(blk(i, j)) > 1e-13) trip.emplace_back(rows[i], cols[j], blk(i, j));
      }
    }
    SpMat D(total, total);
    D.setFromTriplets(trip.begin(), trip.end());
    D_.push_back(std::move(D));
  }
  vars_.emplace_back("x1", x1);
  vars_.emplace_back("x2", x2);
  vars_.emplace_back("x3", x3);
  vars_.emplace_back("x4", x4);
  vars_.emplace_back("eta", eta);
  vars_.emplace_back("phi", xi1);
  vars_.emplace_back("theta", theta);
}

FrameGrid::FrameGrid(const GridSpec& s) : Grid(s) {
  const int K = spec_.degree;
  const double r = spec_.radius;
  if (!(r > 0)) config_error("GridSpec", "radius must be positive");
  if (spec_.backend != Backend::Product && K < 2) config_error("GridSpec", "spectral degree must be at least 2");
  if (spec_.backend == Backend::Sphere3) {
    if (spec_.dim != 3) config_error("UnsupportedGrid", "sphere3-spectral requires dimension 3");
    if (!spec_.resolution.empty()) config_error("GridSpec", "sphere3-spectral takes no torus axes");
    s3_ = true;
    m_ = 3;
    build_s3(K);
  } else {
    const bool product = spec_.backend == Backend::Product;
    const int k = torus_axes();
    if (product) {
      if (K < 1) config_error("GridSpec", "product backend needs a sphere degree of at least 1");
      if (k < 1 || spec_.dim != 2 + k) config_error("UnsupportedGrid", "product backend is S²×T^k with dimension 2+k");
      if (static_cast<int>(spec_.period.size()) != k) config_error("GridSpec", "one period per torus axis");
    } else if (spec_.dim != 2 || k != 0) {
      config_error("UnsupportedGrid", "sphere2-spectral requires dimension 2");
    }
    s2_ = true;
    m_ = 3 + k;
    Mat Y2, X;
    std::vector<Mat> DY2(3);
    std::vector<int> deg2;
    Vec w2;
    build_s2(K, Y2, DY2, deg2, w2, X);
    w2 *= r * r;
    Y2 /= r;
    for (auto& d : DY2) d /= r * r;
    Mat Yt;
    std::vector<Mat> DYt;
    std::vector<int> degt;
    Vec wt;
    std::vector<Vec> coords;
    build_torus(Yt, DYt, degt, wt, coords);
    const Eigen::Index nt = wt.size(), dt = Yt.cols();
    weights_ = Eigen::kroneckerProduct(w2, wt);
    Y_ = Eigen::kroneckerProduct(Y2, Yt);
    xs2_ = Eigen::kroneckerProduct(X, Vec::Ones(nt));
    for (auto& [name, v] : vars_) v = Eigen::kroneckerProduct(v, Vec::Ones(nt)).eval();
    if (!product)
      for (int a = 0; a < 3; ++a) vars_.emplace_back("x" + std::to_string(a + 1), Vec(xs2_.col(a)));
    for (int a = 0; a < k; ++a)
      vars_.emplace_back("x" + std::to_string(a + 1), Eigen::kroneckerProduct(Vec::Ones(w2.size()), coords[a]).eval());
    Mat W2Y2 = w2.asDiagonal() * Y2;
    SpMat It(dt, dt), I2(Y2.cols(), Y2.cols());
    It.setIdentity();
    I2.setIdentity();
    for (int a = 0; a < 3; ++a) {
      SpMat d2 = sparsify(W2Y2.transpose() * DY2[a]);
      D_.push_back(Eigen::kroneckerProduct(d2, It));
    }
    Mat WtYt = wt.asDiagonal() * Yt;
    for (int a = 0; a < k; ++a) {
      SpMat dtor = sparsify(WtYt.transpose() * DYt[a]);
      D_.push_back(Eigen::kroneckerProduct(I2, dtor));
    }
    for (int d2 : deg2)
      for (int d1 : degt) degree_.push_back(d2 + d1);
  }
  K_ = K;
  lap_ = SpMat(dofs(), dofs());
  for (const auto& d : D_) lap_ += SpMat(d * d);
  lap_.prune(1e-12, 1.0);
}

Vec FrameGrid::analysis(const Vec& f) const {
  if (f.size() != size()) config_error("GridMismatch", "field length does not match grid");
  return Y_.transpose() * weights_.cwiseProduct(f);
}

Vec FrameGrid::synthesis(const Vec& c) const {
  if (c.size() != dofs()) config_error("GridMismatch", "coefficient length does not match basis");
  return Y_ * c;
}

Vec FrameGrid::derivative(const Vec& f, int a) const { return Y_ * (D_[a] * analysis(f)); }

Vec FrameGrid::frame_metric(int a, int b) const {
  const Eigen::Index n = size();
  if (s2_ && a < 3 && b < 3) return Vec::Constant(n, a == b ? 1.0 : 0.0) - xs2_.col(a).cwiseProduct(xs2_.col(b));
  return Vec::Constant(n, a == b ? 1.0 : 0.0);
}

Vec FrameGrid::base_ricci(int a, int b) const {
  const double r = spec_.radius;
  if (s3_) return Vec::Constant(size(), a == b ? 2.0 / (r * r) : 0.0);
  if (a < 3 && b < 3) return frame_metric(a, b) / (r * r);
  return Vec::Zero(size());
}

Vec FrameGrid::connection(int a, int b, const std::vector<Vec>& df) const {
  const double r = spec_.radius;
  Vec out = Vec::Zero(size());
  if (s3_) {
    // ∇_{V_a}V_b = ε_abc V_c / r
    int c = 3 - a - b;
    if (a == b) return out;
    double sgn = ((b - a + 3) % 3 == 1) ? 1.0 : -1.0;
    return sgn / r * df[c];
  }
  if (a >= 3 || b >= 3) return out;
  // ∇_{V_a}V_b = x_b Π e_a / r, and (Π e_a) f = Σ_c (e_c × x)_a V_c f
  for (int c = 0; c < 3; ++c) {
    int i = (c + 1) % 3, j = (c + 2) % 3;  // (e_c × x) = e_j x_i - e_i x_j
    Vec comp;
    if (a == j) comp = xs2_.col(i);
    else if (a == i) comp = -xs2_.col(j);
    else continue;
    out += comp.cwiseProduct(df[c]);
  }
  return out.cwiseProduct(xs2_.col(b)) / r;
}

Eigen::RowVectorXd FrameGrid::basis_at(const Vec& x) const {
  const double r = spec_.radius;
  std::vector<double> P(K_ + 1), dP(K_ + 1);
  if (s3_) {
    if (x.size() != 4) config_error("GridMismatch", "S³ points have four embedding coordinates");
    Vec u = x / x.norm();
    double c = std::hypot(u[0], u[1]), s = std::hypot(u[2], u[3]);
    double e = std::atan2(s, c), a = std::atan2(u[1], u[0]), b = std::atan2(u[3], u[2]);
    Eigen::RowVectorXd row(dofs());
    int col = 0;
    for (const auto& sec : s3_sectors_) {
      const int ma = std::abs(sec.m1), mb = std::abs(sec.m2);
      legendre_table(std::cos(2 * e), sec.nj - 1, P.data(), dP.data());
      double pre = std::pow(std::cos(e), ma) * std::pow(std::sin(e), mb) * trig(sec.m1, a) * trig(sec.m2, b);
      Eigen::RowVectorXd raw(sec.nj);
      for (int j = 0; j < sec.nj; ++j) raw[j] = pre * P[j];
      row.segment(col, sec.nj) = raw * sec.T;
      col += sec.nj;
    }
    return row;
  }
  const int k = torus_axes();
  if (x.size() != 3 + k) config_error("GridMismatch", "point needs three sphere coordinates and one per torus axis");
  Eigen::Vector3d u = x.head(3).normalized();
  double th = std::acos(std::clamp(u[2], -1.0, 1.0)), ph = std::atan2(u[1], u[0]);
  Eigen::RowVectorXd row2(static_cast<Eigen::Index>((K_ + 1) * (K_ + 1)));
  int col = 0;
  for (const auto& sec : s2_sectors_) {
    const int a = std::abs(sec.m1);
    legendre_table(std::cos(th), sec.nj - 1, P.data(), dP.data());
    double pre = std::pow(std::sin(th), a) * trig(sec.m1, ph);
    Eigen::RowVectorXd raw(sec.nj);
    for (int j = 0; j < sec.nj; ++j) raw[j] = pre * P[j];
    row2.segment(col, sec.nj) = raw * sec.T / r;
    col += sec.nj;
  }
  Eigen::RowVectorXd row = row2;
  for (int ax = 0; ax < k; ++ax) {
    const int N = spec_.resolution[ax];
    const double L = spec_.period[ax];
    const int mmax = (N - 1) / 2;
    Eigen::RowVectorXd ba(2 * mmax + 1);
    int c = 0;
    for (int m = 0; m <= mmax; ++m)
      for (int sgn : {1, -1}) {
        if (m == 0 && sgn < 0) continue;
        double nrm = m == 0 ? std::sqrt(1.0 / L) : std::sqrt(2.0 / L);
        ba[c++] = nrm * trig(sgn * m, 2.0 * kPi / L * x[3 + ax]);
      }
    row = Eigen::kroneckerProduct(row, ba).eval();
  }
  return row;
}

}  // namespace qc
