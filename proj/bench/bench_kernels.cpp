// Serial reference against the OpenMP paths: parametric_step (threads = 1 vs default) and
// beg_energy vs beg_energy_serial.
#include "begflow/oracle.hpp"

#include <benchmark/benchmark.h>

using namespace begflow;

namespace {

SpinConfig octagon(i64 w, i64 c, i64 C, double k)
{
    OctagonGeom g;
    g.width = g.height = w;
    g.cuts = {c, c, c, c};
    SpinConfig u;
    u.ones = rasterize(g);
    u.zeros = canonical_surfactant(u.ones, C, k);
    return u;
}

void step(benchmark::State& st, int threads)
{
    const ModelParams p{0.1, 0.6, 0.5, 1.0};
    const SpinConfig u = octagon(st.range(0), st.range(0) / 4, st.range(0) / 2, p.k);
    SearchBudget b;
    b.threads = threads;
    for (auto _ : st) benchmark::DoNotOptimize(parametric_step(u, p, b).functional_value);
}

void BM_parametric_step_serial(benchmark::State& st) { step(st, 1); }
void BM_parametric_step_omp(benchmark::State& st) { step(st, 0); }

void BM_energy_serial(benchmark::State& st)
{
    const ModelParams p{0.1, 1.0, 0.5, 1.0};
    const SpinConfig u = octagon(st.range(0), st.range(0) / 4, st.range(0), p.k);
    for (auto _ : st) benchmark::DoNotOptimize(beg_energy_serial(u, p).total);
}

void BM_energy_omp(benchmark::State& st)
{
    const ModelParams p{0.1, 1.0, 0.5, 1.0};
    const SpinConfig u = octagon(st.range(0), st.range(0) / 4, st.range(0), p.k);
    for (auto _ : st) benchmark::DoNotOptimize(beg_energy(u, p).total);
}

}  // namespace

BENCHMARK(BM_parametric_step_serial)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_parametric_step_omp)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_energy_serial)->Arg(100)->Arg(300);
BENCHMARK(BM_energy_omp)->Arg(100)->Arg(300);

BENCHMARK_MAIN();
