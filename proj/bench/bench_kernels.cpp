#include <benchmark/benchmark.h>

#include "ruelle/limits.hpp"
#include "ruelle/spectral.hpp"
#include "ruelle/toral.hpp"

namespace {

const ruelle::ExpandingCircleMap& bench_map() {
  static const ruelle::ExpandingCircleMap m = ruelle::build_expanding_map(2, {{1, 0.05, 0.0}});
  return m;
}

void BM_AssembleParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ruelle::assemble_transfer_matrix(bench_map(), n).entries.data());
}

void BM_AssembleSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ruelle::reference::assemble_transfer_matrix(bench_map(), n).entries.data());
}

void BM_EmpiricalCltParallel(benchmark::State& state) {
  static const ruelle::CltModel model(ruelle::doubling_map(), ruelle::TrigObservable::cosine(1), 64);
  for (auto _ : state) benchmark::DoNotOptimize(ruelle::empirical_clt(model, 1024, 2000, 1, 0.5).ks_distance);
}

void BM_EmpiricalCltSerial(benchmark::State& state) {
  static const ruelle::CltModel model(ruelle::doubling_map(), ruelle::TrigObservable::cosine(1), 64);
  for (auto _ : state) benchmark::DoNotOptimize(ruelle::reference::empirical_clt(model, 1024, 2000, 1, 0.5).ks_distance);
}

void BM_RatioScan(benchmark::State& state) {
  const auto t = ruelle::cat_map();
  for (auto _ : state)
    benchmark::DoNotOptimize(ruelle::ly_ratio_scan(t, {}, static_cast<int>(state.range(0))).max_ratio_outside_gamma);
}

}  // namespace

BENCHMARK(BM_AssembleParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmpiricalCltParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmpiricalCltSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RatioScan)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
