#include <benchmark/benchmark.h>

#include "vortex/kernel.hpp"
#include "vortex/particles.hpp"
#include "vortex/rng.hpp"

using namespace vortex;

namespace {

std::vector<Vec2> points(int n) {
    PhiloxStream s(7, 0);
    std::vector<Vec2> p(static_cast<std::size_t>(n));
    for (auto& x : p) x = {s.uniform() - 0.5, s.uniform() - 0.5};
    return p;
}

const PairKernel& kernel() {
    static const PairKernel k(parse_kernel("mollified:0.01"));
    return k;
}

void BM_drift(benchmark::State& state) {
    auto p = points(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(drift(p, kernel()));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_drift_reference(benchmark::State& state) {
    auto p = points(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(drift_reference(p, kernel()));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

}  // namespace

BENCHMARK(BM_drift)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_drift_reference)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
