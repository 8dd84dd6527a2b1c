#include "mcjudge/aggregation.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

struct DevSet {
    mcjudge::GradeStore store;
    mcjudge::JudgmentSet qrels;
    std::vector<mcjudge::Run> runs;
};

DevSet make_dev(int queries, int docs, int systems)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> grade(0, 3);
    std::uniform_real_distribution<double> noise(0.0, 3.0);
    const auto keys = mcjudge::default_criteria().keys();
    const mcjudge::ThresholdMap planted;
    DevSet dev;
    for (int q = 0; q < queries; ++q) {
        const std::string qid = "q" + std::to_string(q);
        for (int d = 0; d < docs; ++d) {
            const std::string doc = "d" + std::to_string(d);
            int sum = 0;
            for (const auto& key : keys) {
                const int g = grade(rng);
                sum += g;
                dev.store.add({qid, doc, key, g, false, std::to_string(g), "bench", "h", "t"});
            }
            dev.qrels.add(qid, doc, planted.label(sum));
        }
    }
    for (int s = 0; s < systems; ++s) {
        mcjudge::Run run("sys" + std::to_string(s));
        for (const auto& e : dev.qrels.entries()) {
            run.add({e.query_id, e.doc_id, 1, e.relevance + (0.5 + s) * noise(rng), run.system_id()});
        }
        dev.runs.push_back(std::move(run));
    }
    return dev;
}

void BM_TuneThresholds(benchmark::State& state)
{
    const DevSet dev = make_dev(static_cast<int>(state.range(0)), 20, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            mcjudge::tune_thresholds(dev.store, "bench", mcjudge::default_criteria(), dev.qrels, dev.runs).thresholds);
    }
}
BENCHMARK(BM_TuneThresholds)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_AggregateSum(benchmark::State& state)
{
    const std::vector<int> grades{2, 3, 1, 2};
    const mcjudge::ThresholdMap t;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcjudge::aggregate_sum(grades, t));
    }
}
BENCHMARK(BM_AggregateSum);

}  // namespace
