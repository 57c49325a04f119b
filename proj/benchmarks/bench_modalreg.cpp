#include <benchmark/benchmark.h>

#include "modalreg/bandwidth.hpp"
#include "modalreg/coverage.hpp"
#include "modalreg/scenarios.hpp"
#include "modalreg/varying_coeff.hpp"

using namespace modalreg;

namespace {

void BM_FitPoint(benchmark::State& state) {
  const Dataset d = generate_example1(static_cast<std::size_t>(state.range(0)), 1).data;
  const EMConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fit_point(d, 0.5, {0.15, 0.8}, cfg));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitPoint)->RangeMultiplier(4)->Range(200, 12800)->Complexity();

void BM_FitCurve(benchmark::State& state) {
  const Dataset d = generate_example1(400, 2).data;
  const std::vector<double> grid = linspace(0.1, 0.9, static_cast<int>(state.range(0)));
  const EMConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fit_curve(d, grid, {0.15, 0.8}, cfg));
}
BENCHMARK(BM_FitCurve)->Arg(50)->Arg(200);

void BM_PluginBandwidths(benchmark::State& state) {
  const Dataset d = generate_example1(static_cast<std::size_t>(state.range(0)), 3).data;
  for (auto _ : state) benchmark::DoNotOptimize(select_plugin_bandwidths(d));
}
BENCHMARK(BM_PluginBandwidths)->Arg(200)->Arg(800);

void BM_VCFitPoint(benchmark::State& state) {
  const VCDataset d = generate_vc_model(1, static_cast<std::size_t>(state.range(0)), 4).data;
  const EMConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(vc_fit_point(d, 0.5, {0.15, 1.0}, cfg));
}
BENCHMARK(BM_VCFitPoint)->Arg(200)->Arg(2000);

void BM_VCPluginBandwidths(benchmark::State& state) {
  const VCDataset d = generate_vc_model(1, 400, 5).data;
  for (auto _ : state) benchmark::DoNotOptimize(select_vc_plugin_bandwidths(d));
}
BENCHMARK(BM_VCPluginBandwidths);

}  // namespace

BENCHMARK_MAIN();
