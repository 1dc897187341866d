#include "qcurv/cli.hpp"

namespace qc::cli {

Instance build_instance(const JobConfig& c) {
  Instance inst;
  inst.grid = build_grid(c.grid);
  if (c.grid.backend == Backend::Homogeneous) return inst;
  const MetricSpec& m = c.metric;
  try {
    if (m.kind == "standard") {
      inst.metric = metric_standard(inst.grid);
    } else if (m.kind == "conformal") {
      Vec f = inst.grid->field(m.factor);
      inst.metric = m.convention == Convention::E2W ? metric_conformal(inst.grid, f)
                                                   : conformal_deform(metric_standard(inst.grid), f, m.convention);
    } else {
      std::vector<Vec> comps;
      for (const auto& e : m.components) comps.push_back(inst.grid->field(e));
      inst.metric = metric_components(inst.grid, comps);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) config_error(e.code(), std::string("metric: ") + e.message());
    throw;
  }
  return inst;
}

}  // namespace qc::cli
