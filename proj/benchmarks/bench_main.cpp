#include <benchmark/benchmark.h>

#include "kgads/bchar.hpp"
#include "kgads/microlocal.hpp"
#include "kgads/propagators.hpp"
#include "kgads/spectral.hpp"

using namespace kgads;

namespace {

std::shared_ptr<const SpectralModel> model(int N, int modes) {
    SpectralOptions o;
    o.N = N;
    o.n_modes = modes;
    return build_spectral(make_toy_model(ModelKind::ads2_strip, 1.0, 1.0), o);
}

void BM_BuildSpectral(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(model(N, 40));
}
BENCHMARK(BM_BuildSpectral)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_TimeMatrix(benchmark::State& state) {
    const auto s = model(400, 20);
    const auto k = make_propagator(s, KernelKind::lambda_plus, TimeGrid{0.0, 0.02, static_cast<int>(state.range(0))},
                                   Weighting::tilde);
    for (auto _ : state) benchmark::DoNotOptimize(k.time_matrix(0, 5));
}
BENCHMARK(BM_TimeMatrix)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_QuadrantScan(benchmark::State& state) {
    const auto s = model(400, 20);
    const auto k = make_propagator(s, KernelKind::lambda_plus, TimeGrid{0.0, 0.02, 800}, Weighting::tilde);
    ScanOptions so;
    so.window = 40.0 / s->m_floor_sqrt();
    for (auto _ : state) benchmark::DoNotOptimize(kernel_wavefront_scan(k, s->m_floor_sqrt(), so));
}
BENCHMARK(BM_QuadrantScan)->Unit(benchmark::kMillisecond);

void BM_TraceGbb(benchmark::State& state) {
    const auto m = make_toy_model(ModelKind::ads2_strip, 1.0, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(trace_gbb(m, PhasePointB::make(0.5, 0.0, 1.0, -1.0), 5.0, 1e-3));
}
BENCHMARK(BM_TraceGbb)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
