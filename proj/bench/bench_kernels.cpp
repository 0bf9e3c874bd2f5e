#include <benchmark/benchmark.h>

#include <vector>

#include "pointcvar/kernels.hpp"
#include "pointcvar/optimize.hpp"
#include "pointcvar/rng.hpp"

namespace {

std::vector<pcvar::Point3> cloud(std::size_t n) {
  pcvar::Rng rng(5);
  std::vector<pcvar::Point3> pts(n);
  for (auto& p : pts) p = rng.in_ball(1.0);
  return pts;
}

void knn_serial(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pcvar::kernels::knn_serial(pts, 4));
}

void knn_omp(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pcvar::kernels::knn_omp(pts, 4));
}

void radius_serial(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pcvar::kernels::radius_counts_serial(pts, 0.1));
}

void radius_omp(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pcvar::kernels::radius_counts_omp(pts, 0.1));
}

void select(benchmark::State& state) {
  pcvar::Rng rng(6);
  std::vector<double> risks(static_cast<std::size_t>(state.range(0)));
  for (auto& r : risks) r = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(pcvar::sort_select(risks, 0.92));
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(knn_serial)->Arg(256)->Arg(1024)->Arg(1126);
BENCHMARK(knn_omp)->Arg(256)->Arg(1024)->Arg(1126);
BENCHMARK(radius_serial)->Arg(1024)->Arg(4096);
BENCHMARK(radius_omp)->Arg(1024)->Arg(4096);
BENCHMARK(select)->RangeMultiplier(10)->Range(10000, 1000000)->Complexity(benchmark::oN);

BENCHMARK_MAIN();
