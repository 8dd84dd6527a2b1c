#include "mcjudge/meta_eval.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

std::vector<double> scores(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> v(0, 50);
    std::vector<double> out(n);
    for (auto& x : out) {
        x = v(rng);
    }
    return out;
}

void BM_KendallTauB(benchmark::State& state)
{
    const auto x = scores(static_cast<std::size_t>(state.range(0)), 1);
    const auto y = scores(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcjudge::kendall_tau_b(x, y));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTauB)->RangeMultiplier(4)->Range(16, 16384)->Complexity();

void BM_Spearman(benchmark::State& state)
{
    const auto x = scores(static_cast<std::size_t>(state.range(0)), 3);
    const auto y = scores(static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcjudge::spearman_rho(x, y));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Spearman)->RangeMultiplier(4)->Range(16, 16384)->Complexity();

void BM_Kappa(benchmark::State& state)
{
    mcjudge::ConfusionMatrix m;
    long c = 1;
    for (auto& row : m.counts) {
        for (auto& cell : row) {
            cell = c++ * 37;
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcjudge::cohen_kappa(m));
    }
}
BENCHMARK(BM_Kappa);

}  // namespace
