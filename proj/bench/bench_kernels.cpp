// Parallel vs serial kernel apply and compose on round-S³ Green's kernels.
#include <benchmark/benchmark.h>

#include <map>

#include "qcurv/kernels.hpp"

using namespace qc;

namespace {

Kernel green(int K) {
  GridSpec s;
  s.backend = Backend::Sphere3;
  s.dim = 3;
  s.degree = K;
  MetricField g = metric_standard(build_grid(s));
  DiscreteOperator P(OpKind::Paneitz, g, curvature_from_metric(g));
  return greens_kernel(P);
}

const Kernel& cached(int K) {
  static std::map<int, Kernel> cache;
  auto it = cache.find(K);
  if (it == cache.end()) it = cache.emplace(K, green(K)).first;
  return it->second;
}

template <Vec (*F)(const Kernel&, const Vec&)>
void apply(benchmark::State& st) {
  const Kernel& G = cached(static_cast<int>(st.range(0)));
  Vec f = Vec::LinSpaced(G.space->nodes(), -1.0, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(F(G, f));
  st.counters["nodes"] = static_cast<double>(G.space->nodes());
}

template <Kernel (*F)(const Kernel&, const Kernel&)>
void compose(benchmark::State& st) {
  const Kernel& G = cached(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(F(G, G).C.data());
  st.counters["dofs"] = static_cast<double>(G.space->dofs());
}

}  // namespace

BENCHMARK(apply<kernel_apply>)->Name("kernel_apply/parallel")->Arg(6)->Arg(10)->Unit(benchmark::kMicrosecond);
BENCHMARK(apply<kernel_apply_serial>)->Name("kernel_apply/serial")->Arg(6)->Arg(10)->Unit(benchmark::kMicrosecond);
BENCHMARK(compose<kernel_compose>)->Name("kernel_compose/parallel")->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(compose<kernel_compose_serial>)->Name("kernel_compose/serial")->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
