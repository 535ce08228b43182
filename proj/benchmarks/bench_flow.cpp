#include <benchmark/benchmark.h>

#include <cmath>

#include "lagflow/flow.hpp"
#include "lagflow/quadrature.hpp"

using namespace lagflow;

namespace {

std::vector<TorusPoint> cloud(int n) {
  std::vector<TorusPoint> out;
  double u[2];
  for (int i = 0; i < n; ++i) {
    halton_point(i, 2, u);
    out.push_back(wrap({u[0], u[1]}));
  }
  return out;
}

void BM_EulerAdvance(benchmark::State& state) {
  const VelocityField f = rigid_rotation_patch(CatalogParams{});
  FlowConfig cfg;
  cfg.dt = std::ldexp(1.0, -static_cast<int>(state.range(0)));
  cfg.delta_rule = DeltaRule::none;
  const EulerFlow flow(f, cfg);
  const std::vector<TorusPoint> x0 = cloud(1024);
  for (auto _ : state) {
    ParticleEnsemble e = ParticleEnsemble::at_start(x0);
    flow.advance(e, 1.0);
    benchmark::DoNotOptimize(e.positions.data());
  }
  state.SetItemsProcessed(state.iterations() * 1024 * cfg.steps());
}
BENCHMARK(BM_EulerAdvance)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

void BM_MollifiedVortexEval(benchmark::State& state) {
  CatalogParams p;
  p.alpha = 1.2;
  const VelocityField m =
      mollify(radial_vortex(p), 0.125, MollifierKernel::bump(2), static_cast<int>(state.range(0)));
  const std::vector<TorusPoint> x = cloud(256);
  for (auto _ : state)
    for (const TorusPoint& p0 : x) benchmark::DoNotOptimize(m.eval(0.0, p0));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_MollifiedVortexEval)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
