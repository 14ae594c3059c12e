#include "billspec/curve_io.hpp"
#include "billspec/orbits.hpp"

#include <benchmark/benchmark.h>

using namespace billspec;

namespace {

FourierCurve perturbed() {
    PrecisionScope scope(kCurveDefinitionBits);
    return FourierCurve(Real(1), {{3, Real(std::string_view("0.1")), Real(0)}});
}

RealContext context(int bits) {
    RealContext ctx;
    ctx.mantissa_bits = bits;
    return ctx;
}

Exec mode(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

// scan of F(s0) over the grid nodes
void BM_OrbitPairScan(benchmark::State& state) {
    const auto ctx = context(256);
    PrecisionScope scope(256);
    Problem pr{perturbed(), Table::Inner};
    PairOptions opts;
    opts.exec = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(find_orbit_pair(pr, 1, 12, ctx, opts));
    label(state);
}

// one task per q record
void BM_DeltaSpectrum(benchmark::State& state) {
    const auto ctx = context(256);
    PrecisionScope scope(256);
    Problem pr{perturbed(), Table::Inner};
    SpectrumOptions opts;
    opts.exec = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(delta_spectrum(pr, 1, {7, 8, 9, 10, 11, 12}, ctx, opts));
    label(state);
}

void BM_GraphPair(benchmark::State& state) {
    const auto ctx = context(256);
    PrecisionScope scope(256);
    Problem pr{perturbed(), Table::Inner};
    for (auto _ : state) benchmark::DoNotOptimize(graph_pair(pr, 1, 7, ctx, 64, mode(state)));
    label(state);
}

}  // namespace

BENCHMARK(BM_OrbitPairScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DeltaSpectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GraphPair)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
