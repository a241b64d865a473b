#include <benchmark/benchmark.h>

#include "bgc/barrier_analysis.hpp"
#include "bgc/ensemble_io.hpp"
#include "bgc/sde_engine.hpp"

namespace {

bgc::SimulationConfig config(std::size_t paths) {
  bgc::SimulationConfig c;
  c.n_paths = paths;
  return c;
}

const bgc::PathEnsemble& reference_run() {
  static const bgc::PathEnsemble ens = bgc::simulate_ensemble(config(2000));
  return ens;
}

void BM_SimulateEnsemble(benchmark::State& state) {
  const auto c = config(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bgc::simulate_ensemble(c, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<long>(c.steps));
}
BENCHMARK(BM_SimulateEnsemble)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FitBarrier(benchmark::State& state) {
  const auto env = bgc::empirical_envelope(reference_run(), 0.995);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bgc::fit_barrier(env, bgc::BarrierSide::SymmetricJoint));
  }
}
BENCHMARK(BM_FitBarrier)->Unit(benchmark::kMillisecond);

void BM_Envelope(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bgc::empirical_envelope(reference_run(), 0.995));
}
BENCHMARK(BM_Envelope)->Unit(benchmark::kMillisecond);

void BM_DetectBands(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bgc::detect_bands(reference_run()));
}
BENCHMARK(BM_DetectBands)->Unit(benchmark::kMillisecond);

void BM_Digest(benchmark::State& state) {
  const auto ens = bgc::simulate_ensemble(config(200));
  for (auto _ : state) benchmark::DoNotOptimize(bgc::ensemble_digest(ens));
}
BENCHMARK(BM_Digest)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
