#include "benchmark/benchmark.h"

#include "convexorder/sim.hpp"

using namespace convexorder;

namespace {

sim::StrategySpec mixed_spec(double scale) {
  sim::StrategySpec s;
  s.dim = 2;
  s.drivers = 2;
  s.grid = {0.0, 0.5, 1.0};
  Matrix a(2, 2, 0.0);
  a(0, 0) = 0.5 * scale;
  a(1, 1) = 0.3 * scale;
  Matrix j(2, 2, 0.0);
  j(0, 0) = scale;
  j(1, 1) = scale;
  s.diffusion = {a, a};
  s.jumps = {j, j};
  s.intensities = {{0.5, 0.5}, {0.5, 0.5}};
  return s;
}

void BM_SimulatePaths(benchmark::State& state) {
  const sim::StrategySpec spec = mixed_spec(1.0);
  const std::size_t paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto m = sim::simulate_terminal(spec, paths, 42);
    benchmark::DoNotOptimize(m);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(paths));
}
BENCHMARK(BM_SimulatePaths)->Arg(10000)->Arg(100000);

void BM_Compare(benchmark::State& state) {
  const sim::StrategySpec f = mixed_spec(1.0);
  sim::StrategySpec g = mixed_spec(1.0);
  for (Vec& rates : g.intensities)
    for (double& r : rates) r *= 2.0;  // same jumps, doubled intensity
  for (Matrix& a : g.diffusion)
    for (std::size_t i = 0; i < 2; ++i) a(i, i) *= 1.5;
  for (auto _ : state) {
    auto rep = sim::compare(f, g, order::Relation::cxp, 20000, 7);
    benchmark::DoNotOptimize(rep);
  }
}
BENCHMARK(BM_Compare);

}  // namespace
