#include <random>

#include <benchmark/benchmark.h>

#include "snswf/pipeline.hpp"

using namespace snswf;

namespace {

std::vector<double> noise(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    return x;
}

const MultichannelRecord& scenario() {
    static const auto rec = synth_simulation(SimulationConfig{});
    return rec;
}

void BM_Sobi(benchmark::State& state) {
    const Matrix refs = scenario().data.bottomRows(8);
    for (auto _ : state) benchmark::DoNotOptimize(sobi(refs, 20.0));
}
BENCHMARK(BM_Sobi)->Unit(benchmark::kMillisecond);

void BM_Burg(benchmark::State& state) {
    const auto x = noise(2400, 1);
    const int order = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(burg_fit(x, order, 20.0));
}
BENCHMARK(BM_Burg)->Arg(30)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_EstimatePsd(benchmark::State& state) {
    const auto x = noise(2400, 2);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_psd(x, 20.0, SpectralConfig{}));
}
BENCHMARK(BM_EstimatePsd)->Unit(benchmark::kMicrosecond);

// refs x 40 taps on 2400 samples, the classic-filter shape
void BM_SolveWiener(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    std::vector<std::vector<double>> refs;
    for (std::size_t i = 0; i < m; ++i) refs.push_back(noise(2400, 10 + static_cast<unsigned>(i)));
    const auto d = noise(2400, 3);
    for (auto _ : state) {
        const auto corr = estimate_correlations(refs, d, 40);
        benchmark::DoNotOptimize(solve_wiener(corr, 1e-6 * corr.max_zero_lag_power()));
    }
}
BENCHMARK(BM_SolveWiener)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_RunSnswf(benchmark::State& state) {
    const auto& rec = scenario();
    const auto refs = default_references(rec, "sg");
    for (auto _ : state) benchmark::DoNotOptimize(run_snswf(rec, "sg", refs, PipelineConfig{}));
}
BENCHMARK(BM_RunSnswf)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
