// Throughput comparison of the OpenMP kernels against their serial
// reference implementations.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bhlab/kernels.hpp"

using namespace bhlab;

namespace {

std::vector<float> random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::vector<float> data(n * dim);
    for (auto& x : data) x = normal(rng);
    return data;
}

void bench_metric_distances(benchmark::State& state, bool parallel) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t dim = static_cast<std::size_t>(state.range(1));
    const auto base = random_matrix(n, dim, 1);
    const auto query = random_matrix(1, dim, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        if (parallel)
            kernels::metric_distances(base.data(), n, dim, nullptr, query.data(), 0.0,
                                      DistanceMetric::Euclidean, out.data());
        else
            kernels::metric_distances_serial(base.data(), n, dim, nullptr, query.data(), 0.0,
                                             DistanceMetric::Euclidean, out.data());
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void bench_nearest_other(benchmark::State& state, bool parallel) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t dim = static_cast<std::size_t>(state.range(1));
    const auto base = random_matrix(n, dim, 3);
    std::vector<double> out(n);
    for (auto _ : state) {
        if (parallel)
            kernels::nearest_other_distances(base.data(), n, dim, nullptr,
                                             DistanceMetric::Euclidean, out.data());
        else
            kernels::nearest_other_distances_serial(base.data(), n, dim, nullptr,
                                                    DistanceMetric::Euclidean, out.data());
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}

void MetricDistancesSerial(benchmark::State& s) { bench_metric_distances(s, false); }
void MetricDistancesOmp(benchmark::State& s) { bench_metric_distances(s, true); }
void NearestOtherSerial(benchmark::State& s) { bench_nearest_other(s, false); }
void NearestOtherOmp(benchmark::State& s) { bench_nearest_other(s, true); }

BENCHMARK(MetricDistancesSerial)->Args({100000, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(MetricDistancesOmp)->Args({100000, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(NearestOtherSerial)->Args({2000, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(NearestOtherOmp)->Args({2000, 256})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
