#include <algorithm>
#include <cmath>

#include "qcurv/kernels.hpp"

namespace qc {

namespace {

constexpr Eigen::Index kTile = 64;

const Mat& basis(const Space& sp) { return sp.frame()->basis(); }

void need_same(const Kernel& A, const Kernel& B) {
  if (A.space->metric().grid != B.space->metric().grid || A.space->dofs() != B.space->dofs())
    config_error("GridMismatch", "kernels live on different grids");
}

Vec pivot_coefficients(const Space& sp, const Pivot& q) {
  if (q.node >= 0) {
    if (q.node >= sp.nodes()) config_error("GridMismatch", "pivot node out of range");
    if (sp.nodal()) return Vec::Unit(sp.nodes(), q.node);
    return basis(sp).row(q.node).transpose();
  }
  if (sp.nodal()) config_error("UnsupportedGrid", "chart kernels are evaluated at nodes only");
  return sp.frame()->basis_at(q.point).transpose();
}

Vec matvec(const Mat& C, const Vec& b, bool parallel) {
  Vec out(C.rows());
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < C.rows(); ++i) out[i] = C.row(i).dot(b);
  } else {
    for (Eigen::Index i = 0; i < C.rows(); ++i) out[i] = C.row(i).dot(b);
  }
  return out;
}

Vec apply_impl(const Kernel& K, const Vec& phi, bool parallel) {
  const Space& sp = *K.space;
  if (phi.size() != sp.nodes()) config_error("GridMismatch", "field length does not match kernel grid");
  Vec b = sp.nodal() ? Vec(sp.weights().cwiseProduct(phi)) : Vec(basis(sp).transpose() * sp.weights().cwiseProduct(phi));
  Vec c = K.dense() ? matvec(K.C, b, parallel) : K.action(sp.gram_solve(b));
  return sp.values(c);
}

Kernel compose_impl(const Kernel& A, const Kernel& B, bool parallel) {
  need_same(A, B);
  Kernel out;
  out.space = A.space;
  out.label = A.label + "*" + B.label;
  if (A.dense() && B.dense()) {
    Mat T = A.space->gram_apply(B.C);
    const Eigen::Index n = T.cols(), tiles = (n + kTile - 1) / kTile;
    out.C.resize(A.C.rows(), n);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
      for (Eigen::Index t = 0; t < tiles; ++t) {
        const Eigen::Index c0 = t * kTile, w = std::min(kTile, n - c0);
        out.C.middleCols(c0, w).noalias() = A.C * T.middleCols(c0, w);
      }
    } else {
      for (Eigen::Index t = 0; t < tiles; ++t) {
        const Eigen::Index c0 = t * kTile, w = std::min(kTile, n - c0);
        out.C.middleCols(c0, w).noalias() = A.C * T.middleCols(c0, w);
      }
    }
    return out;
  }
  auto fa = A.dense() ? std::function<Vec(const Vec&)>([C = A.C, sp = A.space](const Vec& c) { return Vec(C * sp->gram_apply(c)); })
                      : A.action;
  auto fb = B.dense() ? std::function<Vec(const Vec&)>([C = B.C, sp = B.space](const Vec& c) { return Vec(C * sp->gram_apply(c)); })
                      : B.action;
  out.action = [fa, fb](const Vec& c) { return fa(fb(c)); };
  return out;
}

}  // namespace

Kernel identity_kernel(SpacePtr sp) {
  Kernel k;
  k.space = sp;
  k.C = sp->gram_solve(Mat(Mat::Identity(sp->dofs(), sp->dofs())));
  k.symmetric = true;
  k.label = "delta";
  return k;
}

Kernel constant_kernel(SpacePtr sp, double value) {
  Kernel k;
  k.space = sp;
  Vec c1 = sp->coefficients(Vec::Ones(sp->nodes()));
  k.C = value * c1 * c1.transpose();
  k.symmetric = true;
  k.label = "const";
  return k;
}

Kernel kernel_from_nodes(SpacePtr sp, const Mat& values, bool symmetric) {
  if (values.rows() != sp->nodes() || values.cols() != sp->nodes())
    config_error("GridMismatch", "node kernel has the wrong shape");
  Kernel k;
  k.space = sp;
  k.symmetric = symmetric;
  if (sp->nodal()) {
    k.C = values;
  } else {
    Mat A = sp->analysis_matrix();
    Mat AK = A * values;
    k.C = AK * A.transpose();
  }
  if (symmetric) k.C = (0.5 * (k.C + k.C.transpose())).eval();
  return k;
}

Kernel kernel_scale_add(double a, const Kernel& A, double b, const Kernel& B) {
  need_same(A, B);
  Kernel out;
  out.space = A.space;
  out.symmetric = A.symmetric && B.symmetric;
  if (A.dense() && B.dense()) {
    out.C = a * A.C + b * B.C;
    return out;
  }
  auto act = [](const Kernel& K) {
    return K.dense() ? std::function<Vec(const Vec&)>([C = K.C, sp = K.space](const Vec& c) { return Vec(C * sp->gram_apply(c)); })
                     : K.action;
  };
  auto fa = act(A), fb = act(B);
  out.action = [fa, fb, a, b](const Vec& c) { return Vec(a * fa(c) + b * fb(c)); };
  return out;
}

Mat kernel_nodes(const Kernel& K) {
  const Space& sp = *K.space;
  if (!K.dense()) {
    Mat out(sp.nodes(), sp.nodes());
    for (Eigen::Index q = 0; q < sp.nodes(); ++q) out.col(q) = kernel_column(K, Pivot::at_node(q));
    return out;
  }
  if (sp.nodal()) return K.C;
  const Mat& Y = basis(sp);
  Mat YC = Y * K.C;
  return YC * Y.transpose();
}

Vec kernel_column(const Kernel& K, const Pivot& q) {
  const Space& sp = *K.space;
  Vec y = pivot_coefficients(sp, q);
  Vec c = K.dense() ? Vec(K.C * y) : K.action(sp.gram_solve(y));
  return sp.values(c);
}

double kernel_value(const Kernel& K, const Pivot& p, const Pivot& q) {
  const Space& sp = *K.space;
  Vec yp = pivot_coefficients(sp, p), yq = pivot_coefficients(sp, q);
  Vec c = K.dense() ? Vec(K.C * yq) : K.action(sp.gram_solve(yq));
  return yp.dot(c);
}

Vec kernel_apply(const Kernel& K, const Vec& phi) { return apply_impl(K, phi, true); }
Vec kernel_apply_serial(const Kernel& K, const Vec& phi) { return apply_impl(K, phi, false); }
Kernel kernel_compose(const Kernel& A, const Kernel& B) { return compose_impl(A, B, true); }
Kernel kernel_compose_serial(const Kernel& A, const Kernel& B) { return compose_impl(A, B, false); }

double kernel_symmetry_defect(const Kernel& K) {
  if (!K.dense()) config_error("KernelRepresentation", "symmetry check needs a dense kernel");
  double big = K.C.cwiseAbs().maxCoeff();
  return big > 0 ? (K.C - K.C.transpose()).cwiseAbs().maxCoeff() / big : 0.0;
}

Vec node_distance(const Grid& g, const Pivot& p) {
  const Eigen::Index N = g.size();
  auto var = [&](const std::string& name) -> const Vec& {
    const Vec* v = g.variable(name);
    if (!v) config_error("GridMismatch", "grid lacks coordinate " + name);
    return *v;
  };
  auto coord = [&](const std::string& name, int idx) {
    if (p.node >= 0) return var(name)[p.node];
    if (idx >= p.point.size()) config_error("GridMismatch", "pivot point has too few coordinates");
    return p.point[idx];
  };
  const double r = g.spec().radius;
  Vec d = Vec::Zero(N);
  switch (g.backend()) {
    case Backend::Sphere3: {
      double c[4];
      for (int a = 0; a < 4; ++a) c[a] = coord("x" + std::to_string(a + 1), a);
      double nrm = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]);
      for (Eigen::Index k = 0; k < N; ++k) {
        double dot = 0;
        for (int a = 0; a < 4; ++a) dot += c[a] / nrm * var("x" + std::to_string(a + 1))[k];
        d[k] = r * std::acos(std::clamp(dot, -1.0, 1.0));
      }
      return d;
    }
    case Backend::Sphere2:
    case Backend::Product: {
      const Vec& th = var("theta");
      const Vec& ph = var("phi");
      Eigen::Vector3d c;
      if (p.node >= 0) {
        c << std::sin(th[p.node]) * std::cos(ph[p.node]), std::sin(th[p.node]) * std::sin(ph[p.node]), std::cos(th[p.node]);
      } else {
        c = p.point.head(3).normalized();
      }
      const int k = static_cast<int>(g.spec().resolution.size());
      for (Eigen::Index j = 0; j < N; ++j) {
        Eigen::Vector3d x(std::sin(th[j]) * std::cos(ph[j]), std::sin(th[j]) * std::sin(ph[j]), std::cos(th[j]));
        double ds = r * std::acos(std::clamp(c.dot(x), -1.0, 1.0));
        double s = ds * ds;
        for (int a = 0; a < k; ++a) {
          double L = g.spec().period[a];
          double t = std::fmod(std::abs(var("x" + std::to_string(a + 1))[j] - coord("x" + std::to_string(a + 1), 3 + a)), L);
          t = std::min(t, L - t);
          s += t * t;
        }
        d[j] = std::sqrt(s);
      }
      return d;
    }
    case Backend::Chart: {
      for (int a = 0; a < g.dim(); ++a) {
        const std::string name = "x" + std::to_string(a + 1);
        double L = g.spec().period[a], c = coord(name, a);
        const Vec& x = var(name);
        for (Eigen::Index j = 0; j < N; ++j) {
          double t = std::fmod(std::abs(x[j] - c), L);
          t = std::min(t, L - t);
          d[j] += t * t;
        }
      }
      return d.cwiseSqrt();
    }
    case Backend::Homogeneous: break;
  }
  config_error("UnsupportedGrid", "distances need a chart or spectral grid");
}

double default_mask_radius(const Grid& g) {
  if (g.backend() == Backend::Chart) {
    double h = 0;
    for (std::size_t a = 0; a < g.spec().resolution.size(); ++a)
      h = std::max(h, g.spec().period[a] / g.spec().resolution[a]);
    return 4 * h;
  }
  return 4.0 / std::max(1, g.spec().degree) * g.spec().radius;
}

std::vector<Eigen::Index> pivot_sample(const Grid& g, int count) {
  const Eigen::Index N = g.size();
  std::vector<Eigen::Index> out;
  const Eigen::Index m = std::min<Eigen::Index>(count, N);
  for (Eigen::Index i = 0; i < m; ++i) out.push_back(i * N / m);
  return out;
}

}  // namespace qc
