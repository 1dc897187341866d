#include <cmath>
#include <numbers>
#include <sstream>

#include "qcurv/grid.hpp"

namespace qc {

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::Chart: return "periodic-chart";
    case Backend::Sphere2: return "sphere2-spectral";
    case Backend::Sphere3: return "sphere3-spectral";
    case Backend::Product: return "product";
    case Backend::Homogeneous: return "homogeneous-analytic";
  }
  return "?";
}

Backend backend_from_name(const std::string& s) {
  for (Backend b : {Backend::Chart, Backend::Sphere2, Backend::Sphere3, Backend::Product, Backend::Homogeneous})
    if (backend_name(b) == s) return b;
  config_error("UnknownBackend", "unknown backend '" + s + "'");
}

const Vec* Grid::variable(const std::string& name) const {
  if (name == "pi") return nullptr;
  for (const auto& [n, v] : vars_)
    if (n == name) return &v;
  return nullptr;
}

std::vector<std::string> Grid::variable_names() const {
  std::vector<std::string> out;
  for (const auto& kv : vars_) out.push_back(kv.first);
  return out;
}

Vec Grid::field(const ExprPtr& e) const {
  return eval_expr(e, static_cast<std::size_t>(size()), [this](const std::string& n) { return variable(n); });
}

double Grid::integrate(const Vec& f) const {
  if (f.size() != size()) config_error("GridMismatch", "field length does not match grid");
  return weighted_sum(f, weights_);
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << backend_name(spec_.backend) << " n=" << spec_.dim << " nodes=" << size();
  if (!spec_.resolution.empty()) {
    os << " resolution=";
    for (std::size_t i = 0; i < spec_.resolution.size(); ++i) os << (i ? "x" : "") << spec_.resolution[i];
  }
  if (spec_.backend == Backend::Sphere2 || spec_.backend == Backend::Sphere3 || spec_.backend == Backend::Product)
    os << " degree=" << spec_.degree << " radius=" << spec_.radius;
  return os.str();
}

namespace {

double model_volume(const HomogeneousModel& m) {
  const double pi = std::numbers::pi;
  switch (m.kind) {
    case HomogeneousModel::Kind::RoundSphere:
      return 2.0 * std::pow(pi, (m.n + 1) / 2.0) / std::tgamma((m.n + 1) / 2.0) * std::pow(m.r, m.n);
    case HomogeneousModel::Kind::Berger:
      return 2.0 * pi * pi * m.lambda;
    case HomogeneousModel::Kind::ProductS2Tk: {
      double v = 4.0 * pi * m.r * m.r;
      for (double p : m.periods) v *= p;
      return v;
    }
    case HomogeneousModel::Kind::ProductS2S1:
      return 4.0 * pi * m.r * m.r * m.L;
  }
  return 0.0;
}

}  // namespace

PointGrid::PointGrid(const GridSpec& s) : Grid(s) {
  const auto& m = spec_.model;
  if (!(m.r > 0) || !(m.lambda > 0) || !(m.L > 0)) config_error("ModelParameters", "model parameters must be positive");
  for (double p : m.periods)
    if (!(p > 0)) config_error("ModelParameters", "periods must be positive");
  weights_ = Vec::Constant(1, model_volume(m));
}

GridPtr build_grid(const GridSpec& spec) {
  switch (spec.backend) {
    case Backend::Chart: return std::make_shared<ChartGrid>(spec);
    case Backend::Sphere2:
    case Backend::Sphere3:
    case Backend::Product: return std::make_shared<FrameGrid>(spec);
    case Backend::Homogeneous: return std::make_shared<PointGrid>(spec);
  }
  config_error("UnknownBackend", "unsupported backend");
}

}  // namespace qc
