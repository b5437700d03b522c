#include <benchmark/benchmark.h>

#include <cmath>

#include "flatten/curves.hpp"
#include "flatten/measures.hpp"
#include "flatten/moments.hpp"
#include "flatten/spectral.hpp"

using namespace flatten;

namespace {

DiscreteMeasure cantor_parabola(int k) {
  return pushforward(discretize(systems::middle_thirds(), std::ldexp(1.0, -k)), CurveSpec::moment(2, {-0.1, 1.1}));
}

void BM_CutSetDiscretize(benchmark::State& state) {
  const double tau = std::ldexp(1.0, -static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(discretize(systems::dyadic(), tau));
}
BENCHMARK(BM_CutSetDiscretize)->Arg(12)->Arg(16)->Arg(20);

void BM_FtScanBall(benchmark::State& state) {
  const auto m = cantor_parabola(10);
  const double R = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lp_region_integral_scan(m, region::Ball{R}, 2.0, 0.25));
}
BENCHMARK(BM_FtScanBall)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_L2Pairwise(benchmark::State& state) {
  const auto m = cantor_parabola(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lp_region_integral(m, region::Ball{1024.0}, 2.0, 0.25));
}
BENCHMARK(BM_L2Pairwise)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);

void BM_SuperlevelScan(benchmark::State& state) {
  const double R = static_cast<double>(state.range(0));
  for (auto _ : state) {
    SelfSimilarTransform t(systems::middle_thirds());
    benchmark::DoNotOptimize(superlevel_cover_count(t, R, 0.02, 0.05));
  }
}
BENCHMARK(BM_SuperlevelScan)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_Convolve(benchmark::State& state) {
  const auto m = cantor_parabola(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(convolve(m, m));
}
BENCHMARK(BM_Convolve)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_ConvolutionHistogram(benchmark::State& state) {
  const auto m = cantor_parabola(14);
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(convolution_histogram(m, m, level));
}
BENCHMARK(BM_ConvolutionHistogram)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Bin(benchmark::State& state) {
  const auto m = pushforward(discretize(systems::dyadic(), std::ldexp(1.0, -18)), CurveSpec::moment(2, {-0.1, 1.1}));
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bin(m, level));
}
BENCHMARK(BM_Bin)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
