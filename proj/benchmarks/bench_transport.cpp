#include <benchmark/benchmark.h>

#include "lagflow/quadrature.hpp"
#include "lagflow/random.hpp"
#include "lagflow/transport.hpp"

using namespace lagflow;

namespace {

DiscreteMeasure random_measure(int n, std::uint64_t seed) {
  RandomStream rng(seed);
  DiscreteMeasure m(2);
  for (int i = 0; i < n; ++i) m.add(wrap({rng.uniform(), rng.uniform()}), 0.5 + rng.uniform());
  return m.normalized();
}

void BM_WassersteinExact(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DiscreteMeasure a = random_measure(n, 1), b = random_measure(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein_exact(a, b, GroundMetric::euclidean()).cost);
  state.SetComplexityN(n);
}
BENCHMARK(BM_WassersteinExact)->RangeMultiplier(4)->Range(16, 1024)->Unit(benchmark::kMillisecond);

void BM_WassersteinLogMetric(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DiscreteMeasure a = random_measure(n, 3), b = random_measure(n, 4);
  const GroundMetric metric = GroundMetric::logarithmic(0.5, 1.0 / 64);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein_exact(a, b, metric).cost);
}
BENCHMARK(BM_WassersteinLogMetric)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_WassersteinEntropic(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DiscreteMeasure a = random_measure(n, 5), b = random_measure(n, 6);
  for (auto _ : state)
    benchmark::DoNotOptimize(wasserstein_entropic(a, b, GroundMetric::euclidean(), 0.01).upper);
}
BENCHMARK(BM_WassersteinEntropic)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
