#include <benchmark/benchmark.h>

#include <omp.h>

#include "treasure/montecarlo.hpp"

namespace {

treasure::mc::SweepSpec spec(int reps) {
  treasure::mc::SweepSpec s;
  s.condition = treasure::Condition::NoProtection;
  s.grid = {15, 20, 25};
  s.reps = reps;
  s.seed = 7;
  return s;
}

void BM_SweepSerial(benchmark::State& state) {
  const auto s = spec(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(treasure::mc::run_sweep_serial(s));
  state.SetItemsProcessed(state.iterations() * 9 * state.range(0));
}

void BM_SweepOpenMP(benchmark::State& state) {
  const auto s = spec(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(treasure::mc::run_sweep(s));
  state.SetItemsProcessed(state.iterations() * 9 * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_SingleGame(benchmark::State& state) {
  const auto s = spec(1);
  const std::vector<treasure::Strategy> seats(4, treasure::Strategy{20, 25});
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(treasure::mc::play_one(s, seats, ++seed));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepOpenMP)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SingleGame)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
