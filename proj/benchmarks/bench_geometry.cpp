#include <cmath>

#include "benchmark/benchmark.h"

#include "convexorder/geometry.hpp"
#include "convexorder/measure.hpp"

using namespace convexorder;

namespace {

DiscreteMeasure triangle_nu() {
  const double s = std::sqrt(3.0) / 2.0;
  return DiscreteMeasure(2, {{{1.0, 0.0}, 1.0 / 3.0}, {{-0.5, s}, 1.0 / 3.0},
                             {{-0.5, -s}, 1.0 / 3.0}});
}

DiscreteMeasure triangle_mu() {
  return DiscreteMeasure(2, {{{0.5, 0.0}, 1.0 / 3.0}, {{-0.25, 0.0}, 2.0 / 3.0}});
}

void BM_CxSetExact(benchmark::State& state) {
  const DiscreteMeasure mu = triangle_mu(), nu = triangle_nu();
  for (auto _ : state) {
    auto p = geometry::cx_set(mu, nu, {0.5, 0.0});
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_CxSetExact);

void BM_CxSetExtraDirections(benchmark::State& state) {
  const DiscreteMeasure mu = triangle_mu(), nu = triangle_nu();
  for (auto _ : state) {
    auto p = geometry::cx_set(mu, nu, {0.5, 0.0}, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_CxSetExtraDirections)->Arg(256)->Arg(2048);

void BM_Witness(benchmark::State& state) {
  const DiscreteMeasure mu = triangle_mu(), nu = triangle_nu();
  for (auto _ : state) {
    auto w = geometry::find_witness(mu, nu, {0.5, 0.0});
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(BM_Witness);

}  // namespace
