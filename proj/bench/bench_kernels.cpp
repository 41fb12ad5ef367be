#include "lamcmc/kernels.hpp"
#include "lamcmc/local_model.hpp"
#include "lamcmc/random.hpp"
#include "lamcmc/sample_store.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace lamcmc;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  Stream rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() - 0.5;
  return v;
}

constexpr std::size_t kDim = 3;

template <auto Fn>
void BM_squared_distances(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto points = random_values(n * kDim, 1);
  const auto query = random_values(kDim, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    Fn(points, kDim, query, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <auto Fn>
void BM_min_squared_distances(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto points = random_values(n * kDim, 3);
  const auto candidates = random_values(100 * kDim, 4);
  std::vector<double> out(100);
  for (auto _ : state) {
    Fn(candidates, points, kDim, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(100 * n));
}

template <auto Fn>
void BM_autocovariance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto series = random_values(n, 5);
  std::vector<double> out(64);
  for (auto _ : state) {
    Fn(series, 0, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(64 * n));
}

Neighborhood neighborhood(std::size_t dim) {
  Stream rng(7);
  SampleStore store(dim, 1);
  while (store.size() < 200) {
    const Vector x = rng.standard_normal(dim);
    store.insert(x, Vector::Constant(1, x.squaredNorm() + x.sum()));
  }
  return store.nearest_k(Vector::Zero(dim), LocalFitConfig::defaults(dim).n_points);
}

void BM_loo_downdate(benchmark::State& state) {
  const Neighborhood nb = neighborhood(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(leave_one_out_fits(nb));
}

void BM_loo_direct(benchmark::State& state) {
  const Neighborhood nb = neighborhood(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(leave_one_out_fits_direct(nb));
}

}  // namespace

BENCHMARK(BM_squared_distances<kernels::squared_distances_serial>)
    ->RangeMultiplier(10)->Range(1000, 1000000);
BENCHMARK(BM_squared_distances<kernels::squared_distances_omp>)
    ->RangeMultiplier(10)->Range(1000, 1000000);
BENCHMARK(BM_min_squared_distances<kernels::min_squared_distances_serial>)
    ->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_min_squared_distances<kernels::min_squared_distances_omp>)
    ->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_autocovariance<kernels::autocovariance_serial>)
    ->RangeMultiplier(10)->Range(1000, 1000000);
BENCHMARK(BM_autocovariance<kernels::autocovariance_omp>)
    ->RangeMultiplier(10)->Range(1000, 1000000);
BENCHMARK(BM_loo_downdate)->Arg(1)->Arg(2)->Arg(3)->Arg(5);
BENCHMARK(BM_loo_direct)->Arg(1)->Arg(2)->Arg(3)->Arg(5);

BENCHMARK_MAIN();
