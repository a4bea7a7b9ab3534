#include <spotsched/adversary.hpp>
#include <spotsched/engine.hpp>
#include <spotsched/oracle.hpp>
#include <spotsched/policies.hpp>

#include <benchmark/benchmark.h>

using namespace spotsched;

namespace {

SpotTrace bench_trace(std::size_t n) {
    return generate_synthetic_trace(MarkovTrace{0.05, 0.05}, n, 60.0, 1);
}

void BM_RunPolicy(benchmark::State& state, const char* id) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto trace = bench_trace(n);
    const Job job(static_cast<double>(n) / 2.0, static_cast<double>(n));
    const CostModel cm(4.0, 0.01 * job.compute_length());
    SimConfig cfg;
    cfg.record_steps = false;
    auto policy = make_policy(id);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(*policy, trace, job, cm, cfg, seed++).total_cost);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK_CAPTURE(BM_RunPolicy, greedy, "greedy")->Range(256, 16384);
BENCHMARK_CAPTURE(BM_RunPolicy, ross_greedy, "ross-greedy")->Range(256, 16384);

void BM_OptWithDelays(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto trace = bench_trace(n);
    const Job job(static_cast<double>(n) / 2.0, static_cast<double>(n));
    const CostModel cm(4.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(opt_cost_with_delays(trace, job, cm));
    }
}
BENCHMARK(BM_OptWithDelays)->Range(64, 1024);

void BM_OptDelayFree(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto trace = bench_trace(n);
    const Job job(static_cast<double>(n) / 2.0, static_cast<double>(n));
    for (auto _ : state) {
        benchmark::DoNotOptimize(opt_cost_delay_free(trace, job, 4.0));
    }
}
BENCHMARK(BM_OptDelayFree)->Range(256, 65536);

void BM_Minimax(benchmark::State& state) {
    const double resolution = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(minimax_search(4.0, 1.0, 2.0, resolution).point.value);
    }
}
BENCHMARK(BM_Minimax)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
