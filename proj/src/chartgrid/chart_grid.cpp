#include <cmath>
#include <numbers>

#include "qcurv/grid.hpp"

namespace qc {

namespace {

// FD4 central stencils on offsets -2..2
constexpr double kD1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
constexpr double kD2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

Mat real_fourier_basis(int N) {
  Mat B(N, N);
  int col = 0;
  const double pi2 = 2.0 * std::numbers::pi;
  for (int j = 0; j < N; ++j) B(j, col) = 1.0 / std::sqrt(double(N));
  ++col;
  for (int k = 1; 2 * k < N; ++k) {
    for (int j = 0; j < N; ++j) {
      B(j, col) = std::sqrt(2.0 / N) * std::cos(pi2 * k * j / N);
      B(j, col + 1) = std::sqrt(2.0 / N) * std::sin(pi2 * k * j / N);
    }
    col += 2;
  }
  if (N % 2 == 0) {
    for (int j = 0; j < N; ++j) B(j, col) = (j % 2 ? -1.0 : 1.0) / std::sqrt(double(N));
  }
  return B;
}

// wavenumber index of each basis column
std::vector<int> column_wavenumbers(int N) {
  std::vector<int> k{0};
  for (int m = 1; 2 * m < N; ++m) k.push_back(m), k.push_back(m);
  if (N % 2 == 0) k.push_back(N / 2);
  return k;
}

}  // namespace

ChartGrid::ChartGrid(const GridSpec& s) : Grid(s) {
  const int d = spec_.dim;
  if (d < 1 || d > 6) config_error("UnsupportedGrid", "periodic chart supports dimensions 1..6");
  if (static_cast<int>(spec_.resolution.size()) != d || static_cast<int>(spec_.period.size()) != d)
    config_error("GridSpec", "periodic chart needs one resolution and one period per axis");
  for (int a = 0; a < d; ++a) {
    if (spec_.resolution[a] < 4) config_error("GridSpec", "chart resolution must be at least 4 per axis");
    if (spec_.scheme == DiffScheme::FD4 && spec_.resolution[a] < 5)
      config_error("GridSpec", "resolution below the width of the 4th-order stencil (5)");
    if (!(spec_.period[a] > 0)) config_error("GridSpec", "periods must be positive");
  }
  n_ = spec_.resolution;
  Eigen::Index total = 1;
  for (int a = 0; a < d; ++a) {
    h_.push_back(spec_.period[a] / n_[a]);
    total *= n_[a];
  }
  stride_.assign(d, 1);
  for (int a = d - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * n_[a + 1];
  double cell = 1.0;
  for (double hh : h_) cell *= hh;
  weights_ = Vec::Constant(total, cell);

  for (int a = 0; a < d; ++a) {
    Vec x(total);
    for (Eigen::Index i = 0; i < total; ++i) x[i] = h_[a] * double((i / stride_[a]) % n_[a]);
    vars_.emplace_back("x" + std::to_string(a + 1), std::move(x));
  }

  for (int a = 0; a < d; ++a) {
    const int N = n_[a];
    const double h = h_[a];
    Mat B = real_fourier_basis(N);
    auto ks = column_wavenumbers(N);
    Vec sym(N);
    for (int c = 0; c < N; ++c) {
      if (spec_.scheme == DiffScheme::FD4) {
        double t = 2.0 * std::numbers::pi * ks[c] / N;
        sym[c] = (-2.0 * std::cos(2 * t) + 32.0 * std::cos(t) - 30.0) / (12.0 * h * h);
      } else {
        double kk = 2.0 * std::numbers::pi * ks[c] / spec_.period[a];
        sym[c] = -kk * kk;
      }
    }
    if (spec_.scheme == DiffScheme::Fourier) {
      Mat R = Mat::Zero(N, N);
      for (int c = 1; c + 1 < N; c += 2) {
        if (2 * ks[c] == N) break;
        double kk = 2.0 * std::numbers::pi * ks[c] / spec_.period[a];
        R(c + 1, c) = -kk;  // d/dx cos = -k sin
        R(c, c + 1) = kk;   // d/dx sin = k cos
      }
      d1_.push_back(B * R * B.transpose());
      d2_.push_back(B * sym.asDiagonal() * B.transpose());
    }
    basis_.push_back(std::move(B));
    d2sym_.push_back(std::move(sym));
  }
}

Vec ChartGrid::apply_axis(const Vec& f, int axis, const Mat& m) const {
  const Eigen::Index N = n_[axis], st = stride_[axis], total = size();
  const Eigen::Index outer = total / (N * st);
  Vec out(total);
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index o = 0; o < outer; ++o)
    for (Eigen::Index in = 0; in < st; ++in) {
      const Eigen::Index base = o * N * st + in;
      for (Eigen::Index j = 0; j < N; ++j) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < N; ++k) s += m(j, k) * f[base + k * st];
        out[base + j * st] = s;
      }
    }
  return out;
}

Vec ChartGrid::diff(const Vec& f, int axis, int order) const {
  if (f.size() != size()) config_error("GridMismatch", "field length does not match grid");
  if (order != 1 && order != 2) config_error("GridSpec", "derivative order must be 1 or 2");
  if (spec_.scheme == DiffScheme::Fourier) return apply_axis(f, axis, order == 1 ? d1_[axis] : d2_[axis]);
  const Eigen::Index N = n_[axis], st = stride_[axis], total = size();
  const Eigen::Index outer = total / (N * st);
  const double* c = order == 1 ? kD1 : kD2;
  const double scale = order == 1 ? 1.0 / h_[axis] : 1.0 / (h_[axis] * h_[axis]);
  Vec out(total);
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index o = 0; o < outer; ++o)
    for (Eigen::Index in = 0; in < st; ++in) {
      const Eigen::Index base = o * N * st + in;
      for (Eigen::Index j = 0; j < N; ++j) {
        double s = 0.0;
        for (int k = -2; k <= 2; ++k) s += c[k + 2] * f[base + ((j + k + N) % N) * st];
        out[base + j * st] = s * scale;
      }
    }
  return out;
}

SpMat ChartGrid::diff_matrix(int axis, int order) const {
  const Eigen::Index N = n_[axis], st = stride_[axis], total = size();
  std::vector<Eigen::Triplet<double>> t;
  if (spec_.scheme == DiffScheme::Fourier) {
    const Mat& m = order == 1 ? d1_[axis] : d2_[axis];
    t.reserve(total * N);
    for (Eigen::Index i = 0; i < total; ++i) {
      Eigen::Index j = (i / st) % N, base = i - j * st;
      for (Eigen::Index k = 0; k < N; ++k)
        if (m(j, k) != 0.0) t.emplace_back(i, base + k * st, m(j, k));
    }
  } else {
    const double* c = order == 1 ? kD1 : kD2;
    const double scale = order == 1 ? 1.0 / h_[axis] : 1.0 / (h_[axis] * h_[axis]);
    t.reserve(total * 5);
    for (Eigen::Index i = 0; i < total; ++i) {
      Eigen::Index j = (i / st) % N, base = i - j * st;
      for (int k = -2; k <= 2; ++k)
        if (c[k + 2] != 0.0) t.emplace_back(i, base + ((j + k + N) % N) * st, c[k + 2] * scale);
    }
  }
  SpMat M(total, total);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

Vec ChartGrid::flat_solve(const Vec& f, int power, double eps) const {
  Vec c = f;
  for (int a = 0; a < axes(); ++a) c = apply_axis(c, a, basis_[a].transpose());
  const Eigen::Index total = size();
  for (Eigen::Index i = 0; i < total; ++i) {
    double s = 0.0;
    for (int a = 0; a < axes(); ++a) s -= d2sym_[a][(i / stride_[a]) % n_[a]];
    c[i] /= std::pow(s, power) + eps;
  }
  for (int a = 0; a < axes(); ++a) c = apply_axis(c, a, basis_[a]);
  return c;
}

}  // namespace qc
