// Serial vs OpenMP timings for the parallel kernels. Arg 0 = serial, 1 = OpenMP.

#include <benchmark/benchmark.h>

#include "spg/rollouts.hpp"
#include "spg/verify.hpp"

using namespace spg;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::OpenMP : Exec::Serial; }

void BM_CollectRollouts(benchmark::State& state) {
  const EnvSpec spec;
  const TabularPolicy policy = TabularPolicy::with_search_bias(4, 0.3);
  std::vector<RolloutRequest> req(static_cast<std::size_t>(state.range(1)), RolloutRequest{&spec, 0});
  std::uint64_t stream = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(collect_rollouts(req, policy, 1, stream++, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_CollectRollouts)->ArgsProduct({{0, 1}, {32, 4096}});

void BM_MonteCarloGradient(benchmark::State& state) {
  const EnvSpec spec;
  const TabularPolicy policy = TabularPolicy::with_search_bias(4, -0.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(monte_carlo_gradient(spec, policy, 8, 2000, Estimator::Blend,
                                                  AdvantageOptions{}, 3, exec_of(state)));
  }
}
BENCHMARK(BM_MonteCarloGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MonteCarloStrata(benchmark::State& state) {
  const EnvSpec spec;
  const TabularPolicy policy(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(monte_carlo_strata(spec, policy, 20000, 5, exec_of(state)));
  }
}
BENCHMARK(BM_MonteCarloStrata)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_VerifySuite(benchmark::State& state) {
  VerifyOptions o;
  o.batches = 300;
  o.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(run_verify(o));
}
BENCHMARK(BM_VerifySuite)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
