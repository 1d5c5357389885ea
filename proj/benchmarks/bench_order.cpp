#include "benchmark/benchmark.h"

#include "convexorder/lp.hpp"
#include "convexorder/order.hpp"
#include "support/instances.hpp"

using namespace convexorder;

namespace {

// Grouped instances (kind 1) are cx-ordered, independent pairs (kind 0) are
// typically separated; both paths of the decision procedure get exercised.

void BM_BuildCoupling(benchmark::State& state) {
  const auto inst = testsupport::make_instance(0xbe7c4, 4 * state.range(0) + 1);
  for (auto _ : state) {
    auto c = order::build_coupling(inst.mu, inst.nu, order::Relation::cx);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_BuildCoupling)->Arg(1)->Arg(7)->Arg(23);

void BM_FindSeparator(benchmark::State& state) {
  const auto inst = testsupport::make_instance(0xbe7c4, 4 * state.range(0));
  for (auto _ : state) {
    auto s = order::find_separator(inst.mu, inst.nu, order::Relation::cxp);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_FindSeparator)->Arg(1)->Arg(7)->Arg(23);

void BM_CheckOrder(benchmark::State& state) {
  const auto inst = testsupport::make_instance(0xbe7c4, state.range(0));
  for (auto _ : state) {
    auto v = order::check_order(inst.mu, inst.nu, order::Relation::cxp);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_CheckOrder)->DenseRange(0, 3);

void BM_ExactCouplingSolve(benchmark::State& state) {
  const auto inst = testsupport::make_instance(0xbe7c4, 4 * state.range(0) + 1);
  for (auto _ : state) {
    bool feasible = order::exact_coupling_feasible(inst.mu, inst.nu, order::Relation::cx);
    benchmark::DoNotOptimize(feasible);
  }
}
BENCHMARK(BM_ExactCouplingSolve)->Arg(1)->Arg(7);

void BM_KernelIterative(benchmark::State& state) {
  const auto inst = testsupport::make_instance(0xbe7c4, 4 * state.range(0) + 1);
  for (auto _ : state) {
    auto k = order::build_kernel_iterative(inst.mu, inst.nu);
    benchmark::DoNotOptimize(k);
  }
}
BENCHMARK(BM_KernelIterative)->Arg(1)->Arg(7);

}  // namespace
