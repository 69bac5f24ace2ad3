// Serial reference vs OpenMP batch runner, plus the per-step kernels they
// are built from.
#include "qcart/batch.hpp"
#include "qcart/calibration.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace qcart;

EnvConfig quantum_config() {
  EnvConfig c;
  c.binding.controller = ControllerKind::kLqr;
  c.binding.max_steps = 500;
  return c;
}

EnvConfig classical_config() {
  EnvConfig c;
  c.system = SystemKind::kClassical;
  c.noise = NoiseModel::classical(0.8, kDefaultSigmaDyn, c.params.coupling);
  c.binding.estimator = EstimatorKind::kKalman;
  c.binding.max_steps = 2000;
  return c;
}

void BM_QuantumBatchSerial(benchmark::State& state) {
  const EnvConfig c = quantum_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_batch_serial(c, state.range(0), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_QuantumBatchParallel(benchmark::State& state) {
  const EnvConfig c = quantum_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_batch(c, state.range(0), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ClassicalBatchSerial(benchmark::State& state) {
  const EnvConfig c = classical_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_batch_serial(c, state.range(0), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ClassicalBatchParallel(benchmark::State& state) {
  const EnvConfig c = classical_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_batch(c, state.range(0), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SplitStep(benchmark::State& state) {
  const GridPtr grid = make_grid(static_cast<std::size_t>(state.range(0)));
  const SimParams params;
  const Propagator prop(grid, PotentialSpec::quadratic(), params);
  Wavefunction psi = gaussian_wavepacket(grid, 1.0, 0.0, 0.0);
  std::vector<cplx> scratch;
  for (auto _ : state) {
    prop.step(psi, scratch);
    benchmark::ClobberMemory();
  }
}

void BM_WeakMeasurementPair(benchmark::State& state) {
  const GridPtr grid = make_grid(static_cast<std::size_t>(state.range(0)));
  const Wavefunction start = gaussian_wavepacket(grid, 1.0, 0.0, 0.0);
  const MeasurementConfig mx{0.05, 0.7, Observable::kPosition};
  const MeasurementConfig mp{0.05, 0.7, Observable::kMomentum};
  Rng rng(3);
  Wavefunction psi = start;
  for (auto _ : state) {
    benchmark::DoNotOptimize(measure(psi, mx, rng));
    benchmark::DoNotOptimize(measure(psi, mp, rng));
  }
}

BENCHMARK(BM_QuantumBatchSerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuantumBatchParallel)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ClassicalBatchSerial)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassicalBatchParallel)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SplitStep)->Arg(512)->Arg(1024)->Arg(2048);
BENCHMARK(BM_WeakMeasurementPair)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
