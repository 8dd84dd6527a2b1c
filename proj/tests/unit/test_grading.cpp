#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "mcjudge/error.hpp"
#include "mcjudge/grading.hpp"
#include "mcjudge/llm_client.hpp"
#include "mcjudge/mock_backend.hpp"

#include <algorithm>

using namespace mcjudge;

namespace {

ClientOptions offline()
{
    ClientOptions o;
    o.requests_per_second = 0.0;
    o.retry.max_attempts = 1;
    return o;
}

GradingOptions options(std::string model = "mock")
{
    GradingOptions o;
    o.model_id = std::move(model);
    o.clock = [] { return std::string("2025-01-01T00:00:00Z"); };
    return o;
}

std::vector<JudgingPair> two_pairs()
{
    return {{{"q1", "lobster tail"}, {"d1", "boil it"}}, {{"q1", "lobster tail"}, {"d2", "grill it"}}};
}

}  // namespace

TEST_CASE("2 pairs x 4 criteria with an always-2 mock gives 8 records of grade 2")
{
    ChatClient client(MockBackend::always("2"), offline());
    GradeStore store;
    const GradingReport report = grade_pairs(two_pairs(), default_criteria(), client, store, options());
    CHECK(report.graded == 8);
    CHECK(report.skipped == 0);
    CHECK(report.complete());
    REQUIRE(store.size() == 8);
    for (const auto& r : store.records()) {
        CHECK(r.grade == 2);
        CHECK_FALSE(r.parse_failed);
        CHECK(r.model_id == "mock");
    }

    const GradingReport again = grade_pairs(two_pairs(), default_criteria(), client, store, options());
    CHECK(again.graded == 0);
    CHECK(again.skipped == 8);
    CHECK(store.size() == 8);
}

TEST_CASE("unparseable answers become grade 0 with the flag set")
{
    ChatClient client(MockBackend::always("I cannot judge this"), offline());
    GradeStore store;
    const GradingReport report = grade_pairs(two_pairs(), default_criteria(), client, store, options());
    CHECK(report.parse_failed == 8);
    for (const auto& r : store.records()) {
        CHECK(r.grade == 0);
        CHECK(r.parse_failed);
        CHECK(r.raw_output == "I cannot judge this");
    }
}

TEST_CASE("every record's digest re-derives from its prompt")
{
    const auto corpus = fixture::planted_corpus(3, 4, 2, 1);
    const CriteriaSet criteria = default_criteria();
    ChatClient client(fixture::planted_backend(corpus, criteria), offline());
    GradeStore store;
    grade_pairs(corpus.pairs(), criteria, client, store, options());
    CHECK(store.size() == 48);
    for (const auto& r : store.records()) {
        const JudgingPair pair{{r.query_id, corpus.queries.at(r.query_id)}, {r.doc_id, corpus.passages.at(r.doc_id)}};
        CHECK(verify_provenance(r, pair, criteria));
        GradeRecord tampered = r;
        tampered.criterion_key = r.criterion_key == "coverage" ? "exactness" : "coverage";
        CHECK_FALSE(verify_provenance(tampered, pair, criteria));
    }
}

TEST_CASE("permuting the pair order yields the same store")
{
    const auto corpus = fixture::planted_corpus(4, 5, 2, 3);
    const CriteriaSet criteria = default_criteria();
    auto pairs = corpus.pairs();
    GradeStore a;
    {
        ChatClient client(fixture::planted_backend(corpus, criteria), offline());
        grade_pairs(pairs, criteria, client, a, options());
    }
    std::reverse(pairs.begin(), pairs.end());
    std::swap(pairs[1], pairs[7]);
    GradeStore b;
    {
        ChatClient client(fixture::planted_backend(corpus, criteria), offline());
        auto o = options();
        o.workers = 1;
        grade_pairs(pairs, criteria, client, b, o);
    }
    CHECK(same_judgments(a, b));
}

TEST_CASE("crash after 3 records, then resume, equals an uninterrupted run")
{
    fixture::TempDir dir;
    const auto corpus = fixture::planted_corpus(5, 4, 2, 9);
    const CriteriaSet criteria = default_criteria();

    GradeStore clean;
    {
        ChatClient client(fixture::planted_backend(corpus, criteria), offline());
        grade_pairs(corpus.pairs(), criteria, client, clean, options());
    }

    const std::string path = dir.file("store.jsonl");
    {
        auto backend = fixture::planted_backend(corpus, criteria);
        backend->fail_after(3);
        ChatClient client(backend, offline());
        GradeStore store = GradeStore::open(path);
        auto o = options();
        o.workers = 1;
        CHECK_THROWS_AS(grade_pairs(corpus.pairs(), criteria, client, store, o), TransportError);
        CHECK(store.size() == 3);
    }
    {
        GradeStore reopened = GradeStore::open(path);
        CHECK(reopened.size() == 3);
        ChatClient client(fixture::planted_backend(corpus, criteria), offline());
        const GradingReport report = grade_pairs(corpus.pairs(), criteria, client, reopened, options());
        CHECK(report.skipped == 3);
        CHECK(report.graded == clean.size() - 3);
    }
    CHECK(same_judgments(GradeStore::open(path), clean));
}

TEST_CASE("cancellation stops dispatch and reports the remainder")
{
    const auto corpus = fixture::planted_corpus(5, 4, 2, 2);
    const CriteriaSet criteria = default_criteria();
    ChatClient client(fixture::planted_backend(corpus, criteria), offline());
    GradeStore store;
    std::atomic<bool> cancel{false};
    auto o = options();
    o.workers = 1;
    o.cancel = &cancel;
    o.on_record = [&](const GradeRecord&) {
        if (store.size() >= 5) {
            cancel = true;
        }
    };
    const GradingReport report = grade_pairs(corpus.pairs(), criteria, client, store, o);
    CHECK_FALSE(report.complete());
    CHECK(report.graded + report.remaining == 80);
    CHECK(store.size() == report.graded);
}

TEST_CASE("grade store rejects corrupt files and duplicate records")
{
    fixture::TempDir dir;
    fixture::write_file(dir.file("bad.jsonl"), "{\"query_id\":1}\n");
    CHECK_THROWS_AS(GradeStore::open(dir.file("bad.jsonl")), StoreLoadError);

    GradeRecord r{"q", "d", "exactness", 1, false, "1", "m", "h", "t"};
    const std::string line = to_json_line(r) + "\n";
    fixture::write_file(dir.file("dup.jsonl"), line + line);
    CHECK_THROWS_AS(GradeStore::open(dir.file("dup.jsonl")), StoreLoadError);

    GradeStore store = GradeStore::open(dir.file("ok.jsonl"));
    CHECK(store.add(r));
    CHECK_FALSE(store.add(r));
    GradeRecord other_model = r;
    other_model.model_id = "m2";
    CHECK(store.add(other_model));
    CHECK(store.model_ids() == std::vector<std::string>{"m", "m2"});
    CHECK(fixture::read_file(dir.file("ok.jsonl")) == line + to_json_line(other_model) + "\n");
    GradeRecord bad = r;
    bad.grade = 9;
    CHECK_THROWS_AS(store.add(bad), ValidationError);
}

TEST_CASE("store grades() reports completeness per pair")
{
    GradeStore store;
    const CriteriaSet criteria = default_criteria();
    for (const auto& c : criteria) {
        store.add({"q", "d", c.key, 2, false, "2", "m", "h", "t"});
    }
    store.add({"q", "e", "exactness", 1, false, "1", "m", "h", "t"});
    CHECK(store.grades("q", "d", criteria, "m").has_value());
    CHECK_FALSE(store.grades("q", "e", criteria, "m").has_value());
    CHECK(store.grades("q", "e", criteria.select("E"), "m").has_value());
    CHECK_FALSE(store.grades("q", "d", criteria, "other").has_value());
    CHECK(store.pairs("m").size() == 2);
}

TEST_CASE("grade_pairs validates its inputs")
{
    ChatClient client(MockBackend::always("1"), offline());
    GradeStore store;
    CHECK_THROWS_AS(grade_pairs({}, default_criteria(), client, store, options()), ValidationError);
    CHECK_THROWS_AS(grade_pairs({{{"q", ""}, {"d", "p"}}}, default_criteria(), client, store, options()),
                    ValidationError);
}

TEST_CASE("pooling: disjoint top docs and identical runs")
{
    std::vector<Run> runs;
    runs.push_back(parse_run("q1 Q0 a 1 3 x\nq1 Q0 b 2 2 x\nq2 Q0 c 1 3 x\nq2 Q0 d 2 1 x\n", "r1"));
    runs.push_back(parse_run("q1 Q0 b 1 3 x\nq1 Q0 a 2 2 x\nq2 Q0 d 1 3 x\nq2 Q0 c 2 1 x\n", "r2"));
    const auto pool = pool_top_k(runs, 1);
    CHECK(pool.at("q1") == std::set<std::string>{"a", "b"});
    CHECK(pool.at("q2") == std::set<std::string>{"c", "d"});

    Run big("big");
    for (int i = 0; i < 30; ++i) {
        big.add({"q1", "doc" + std::to_string(i), i + 1, 100.0 - i, "big"});
    }
    Run same = big;
    const auto deep = pool_top_k({big, same}, 10);
    CHECK(deep.at("q1").size() == 10);
}

TEST_CASE("pooling matches the brute-force union on random runs")
{
    fixture::Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Run> runs;
        std::vector<std::map<std::string, std::vector<std::pair<std::string, double>>>> raw;
        const int systems = rng.uniform(1, 5);
        for (int s = 0; s < systems; ++s) {
            Run run("s" + std::to_string(s));
            std::map<std::string, std::vector<std::pair<std::string, double>>> r;
            for (int q = 0; q < 4; ++q) {
                std::set<std::string> used;
                for (int i = 0; i < 15; ++i) {
                    const std::string d = "d" + std::to_string(rng.uniform(0, 30));
                    if (!used.insert(d).second) continue;
                    const double score = rng.uniform(0, 6);
                    run.add({"q" + std::to_string(q), d, i + 1, score, run.system_id()});
                    r["q" + std::to_string(q)].push_back({d, score});
                }
            }
            runs.push_back(std::move(run));
            raw.push_back(std::move(r));
        }
        CHECK(pool_top_k(runs, 5) == oracle::pool(raw, 5));
    }
}

TEST_CASE("load_pairs joins texts and reports what is missing")
{
    fixture::TempDir dir;
    fixture::write_file(dir.file("q.tsv"), "q1\tfirst query\nq2\tsecond query has spaces\n");
    fixture::write_file(dir.file("p.tsv"), "d1\tpassage one\nd2\tpassage two\n");
    fixture::write_file(dir.file("pairs.txt"), "q1 d1\nq1 d9\nq2 0 d2 1\nq3 d1\n");
    const PairLoad load = load_pairs(dir.file("q.tsv"), dir.file("p.tsv"), dir.file("pairs.txt"));
    REQUIRE(load.pairs.size() == 2);
    CHECK(load.pairs[0].query.query_id == "q1");
    CHECK(load.pairs[0].passage.text == "passage one");
    CHECK(load.pairs[1].query.text == "second query has spaces");
    CHECK(load.missing_passages == std::vector<std::pair<std::string, std::string>>{{"q1", "d9"}});
    CHECK(load.missing_queries == std::vector<std::string>{"q3"});

    CHECK_THROWS(parse_tsv_texts("d1\tone\nd1\ttwo\n"));
    CHECK_THROWS(parse_tsv_texts("no tab here\n"));
}
