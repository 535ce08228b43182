#include <benchmark/benchmark.h>

#include "lagflow/mesh.hpp"
#include "lagflow/random.hpp"

using namespace lagflow;

namespace {

void run_locate(benchmark::State& state, MeshKind kind, double jitter) {
  const Mesh mesh = build_mesh(kind, 2, static_cast<int>(state.range(0)), jitter, 1);
  RandomStream rng(2);
  std::vector<TorusPoint> pts;
  for (int i = 0; i < 4096; ++i) pts.push_back(wrap({rng.uniform(), rng.uniform()}));
  for (auto _ : state)
    for (const TorusPoint& x : pts) benchmark::DoNotOptimize(mesh.locate(x));
  state.SetItemsProcessed(state.iterations() * pts.size());
}

void BM_LocateCartesian(benchmark::State& state) { run_locate(state, MeshKind::cartesian, 0.0); }
void BM_LocateJittered(benchmark::State& state) { run_locate(state, MeshKind::jittered, 0.15); }
void BM_LocateVoronoi(benchmark::State& state) { run_locate(state, MeshKind::voronoi, 0.0); }

BENCHMARK(BM_LocateCartesian)->Arg(16)->Arg(64);
BENCHMARK(BM_LocateJittered)->Arg(16)->Arg(64);
BENCHMARK(BM_LocateVoronoi)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
