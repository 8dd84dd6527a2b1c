#include "mcjudge/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

struct Query {
    std::vector<std::string> ranking;
    mcjudge::QueryLabels labels;
};

Query make_query(std::size_t depth)
{
    std::mt19937_64 rng(depth);
    std::uniform_int_distribution<int> label(0, 3);
    Query q;
    for (std::size_t i = 0; i < depth; ++i) {
        q.ranking.push_back("doc" + std::to_string(i));
        if (i % 3 != 0) {
            q.labels[q.ranking.back()] = label(rng);
        }
    }
    return q;
}

void BM_Ndcg10(benchmark::State& state)
{
    const Query q = make_query(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcjudge::ndcg_at_k(q.ranking, q.labels, 10));
    }
}
BENCHMARK(BM_Ndcg10)->Arg(100)->Arg(1000);

void BM_AveragePrecision(benchmark::State& state)
{
    const Query q = make_query(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcjudge::average_precision(q.ranking, q.labels));
    }
}
BENCHMARK(BM_AveragePrecision)->Arg(100)->Arg(1000);

void BM_EvaluateSystem(benchmark::State& state)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::uniform_int_distribution<int> label(0, 3);
    mcjudge::Run run("bench");
    mcjudge::JudgmentSet qrels;
    for (int q = 0; q < state.range(0); ++q) {
        const std::string qid = "q" + std::to_string(q);
        for (int d = 0; d < 100; ++d) {
            const std::string doc = "d" + std::to_string(d);
            run.add({qid, doc, d + 1, score(rng), "bench"});
            if (d % 2 == 0) {
                qrels.add(qid, doc, label(rng));
            }
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcjudge::evaluate_system(run, qrels, mcjudge::MetricSpec{}).mean);
    }
}
BENCHMARK(BM_EvaluateSystem)->Arg(50)->Unit(benchmark::kMicrosecond);

}  // namespace
