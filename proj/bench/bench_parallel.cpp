// Serial reference vs OpenMP driver for the normalization-error sweep, and
// naive vs blocked matrix products at the shapes training actually uses.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "aecomm/matrix.hpp"
#include "aecomm/metrics.hpp"
#include "oracles.hpp"

namespace {

aecomm::NormErrorSweep bench_sweep() {
  aecomm::NormErrorSweep s;
  s.m_values = {16, 64};
  s.batch_sizes = {16, 64, 256};
  s.n_inits = 8;
  s.n_batches = 200;
  return s;
}

void BM_NormErrorSerial(benchmark::State& state) {
  const auto sweep = bench_sweep();
  for (auto _ : state) benchmark::DoNotOptimize(aecomm::norm_error_experiment_serial(sweep));
}
BENCHMARK(BM_NormErrorSerial)->Unit(benchmark::kMillisecond);

void BM_NormErrorParallel(benchmark::State& state) {
  const auto sweep = bench_sweep();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(aecomm::norm_error_experiment(sweep, workers));
  state.counters["workers"] = workers;
}
BENCHMARK(BM_NormErrorParallel)
    ->DenseRange(1, 4)
    ->Arg(omp_get_max_threads())
    ->Unit(benchmark::kMillisecond);

// (rows, inner, cols): hidden layer over the alphabet, and its weight gradient.
void matmul_args(benchmark::internal::Benchmark* b) {
  b->Args({128, 100, 100})->Args({16, 100, 100})->Args({256, 60, 60})->Args({128, 2, 100});
}

void BM_MatmulNaive(benchmark::State& state) {
  std::mt19937_64 g(1);
  const auto a = oracle::random_matrix(state.range(0), state.range(1), g);
  const auto b = oracle::random_matrix(state.range(1), state.range(2), g);
  for (auto _ : state) benchmark::DoNotOptimize(oracle::naive_matmul(a, b));
}
BENCHMARK(BM_MatmulNaive)->Apply(matmul_args);

void BM_MatmulBlocked(benchmark::State& state) {
  std::mt19937_64 g(1);
  const auto a = oracle::random_matrix(state.range(0), state.range(1), g);
  const auto b = oracle::random_matrix(state.range(1), state.range(2), g);
  aecomm::Matrix out(a.rows(), b.cols());
  for (auto _ : state) {
    aecomm::kernels::matmul(a, b, out);
    benchmark::DoNotOptimize(out.values().data());
  }
}
BENCHMARK(BM_MatmulBlocked)->Apply(matmul_args);

}  // namespace

BENCHMARK_MAIN();
