// Serial reference against the OpenMP path for the three parallel kernels.
// Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "wavedisp/branchpoints.hpp"
#include "wavedisp/transient.hpp"

using namespace wavedisp;

namespace {

const LayerStack kRef = LayerStack::reference();

ExecPolicy policy_of(const benchmark::State& st) { return st.range(0) ? ExecPolicy::Parallel : ExecPolicy::Serial; }

void BM_Continuation(benchmark::State& st) {
    const auto roots = find_roots_at_reference(cplx(0.0, 20.0), 0.0, 40.0, 19, kRef);
    std::vector<std::pair<cplx, cplx>> seeds;
    for (cplx k : roots) seeds.emplace_back(cplx(0.0, 20.0), k);
    const auto mesh = polyline_nodes({cplx(0.0, 20.0), cplx(0.0, 1.0), cplx(33.0, 1.0)}, 0.05);
    ContinuationOptions opt;
    opt.policy = policy_of(st);
    for (auto _ : st) benchmark::DoNotOptimize(continue_branches(seeds, mesh, kRef, opt));
}

void BM_TraceMany(benchmark::State& st) {
    const auto ids = ids_in_band(400.0, 0.0, kRef);
    const PathSpec spec;
    for (auto _ : st) benchmark::DoNotOptimize(trace_many(ids, spec, +1, kRef, policy_of(st)));
}

void BM_Synthesize(benchmark::State& st) {
    static const SpacingPolicy pol;
    static const FrequencyContour c = build_contour(0.0, 0.0, 0.0, pol, kRef);
    static const ContourBranches br = track_branches(c, 19, kRef);
    const std::vector<std::size_t> subset{0, 1, 2, 3, 4, 5};
    const auto t = time_grid(0.0, 15.0, 0.05);
    SynthesisOptions opt;
    opt.policy = policy_of(st);
    for (auto _ : st) benchmark::DoNotOptimize(synthesize(c, br, subset, 10.0, kRef.H3, t, kRef, pol, opt));
}

void BM_Accumulate(benchmark::State& st) {
    std::vector<QuadTerm> terms;
    for (int j = 0; j < 50000; ++j) terms.push_back({cplx(0.001 * j, 0.0), cplx(1.0 / (1 + j), 0.0)});
    const auto t = time_grid(0.0, 15.0, 0.05);
    for (auto _ : st) benchmark::DoNotOptimize(accumulate_signal(terms, t, policy_of(st)));
}

}  // namespace

BENCHMARK(BM_Continuation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TraceMany)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Synthesize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Accumulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
