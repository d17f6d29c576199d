// Serial reference against the OpenMP kernels on the replica-parallel hot paths.
#include <benchmark/benchmark.h>

#include "brwlab/brw.hpp"
#include "brwlab/ldp.hpp"
#include "brwlab/walk.hpp"

using namespace brwlab;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

void BM_WalkSpeed(benchmark::State& state) {
    const auto env = TreeEnvironment::regular(2);
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_speed(env, 1.0, 20000, 64, 1, EnvMode::quenched, 0, exec_of(state)));
    label(state);
}

void BM_WalkSpeedAnnealed(benchmark::State& state) {
    const auto env = TreeEnvironment::random(OffspringLaw::parse("2:0.5,3:0.5"), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_speed(env, 1.0, 5000, 64, 1, EnvMode::annealed, 0, exec_of(state)));
    label(state);
}

void BM_DepthDistribution(benchmark::State& state) {
    const auto env = TreeEnvironment::regular(2);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            empirical_depth_distribution(env, {1.0, WalkVariant::killed_at_root}, 30, 100000, 1, exec_of(state)));
    label(state);
}

void BM_FinalDepths(benchmark::State& state) {
    const auto env = TreeEnvironment::regular(2);
    for (auto _ : state) benchmark::DoNotOptimize(final_depths(env, 1.0, 60, 100000, 1, exec_of(state)));
    label(state);
}

void BM_WindowedSurvival(benchmark::State& state) {
    const auto env = TreeEnvironment::regular(2);
    BrwConfig cfg;
    cfg.branching_law = OffspringLaw::parse("1:0.7,2:0.3");
    WindowedSpec spec;
    spec.stages = 5;
    spec.stage_cap = 50;
    for (auto _ : state) benchmark::DoNotOptimize(survival_probability(env, cfg, spec, 100, 1, exec_of(state)));
    label(state);
}

void BM_ManyToOne(benchmark::State& state) {
    const auto env = TreeEnvironment::regular(3);
    const auto mu = OffspringLaw::parse("1:0.5,2:0.5");
    for (auto _ : state) benchmark::DoNotOptimize(many_to_one_check(env, mu, 1.0, 8, 12, 2000, 1, exec_of(state)));
    label(state);
}

}  // namespace

BENCHMARK(BM_WalkSpeed)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WalkSpeedAnnealed)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DepthDistribution)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FinalDepths)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WindowedSurvival)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ManyToOne)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
