#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "cli/cli.hpp"
#include "mcjudge/grade_records.hpp"
#include "mcjudge/grading.hpp"

#include <json.hpp>

#include <chrono>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace mcjudge;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args)
{
    cli::cancel_flag() = false;
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct Workspace {
    fixture::TempDir dir;
    fixture::PlantedCorpus corpus;

    Workspace(int queries, int docs, int systems, std::uint64_t seed)
        : corpus(fixture::planted_corpus(queries, docs, systems, seed))
    {
        fixture::write_file(file("queries.tsv"), corpus.queries_tsv());
        fixture::write_file(file("passages.tsv"), corpus.passages_tsv());
        fixture::write_file(file("gold.qrels"), write_qrels(corpus.qrels));
        fixture::write_file(file("mock.json"), fixture::planted_mock_script(corpus, default_criteria()));
        std::filesystem::create_directories(dir.path() / "runs");
        for (const auto& run : corpus.runs) {
            fixture::write_file(file("runs/" + run.system_id()), write_run(run));
        }
    }

    std::string file(const std::string& name) const { return dir.file(name); }

    std::vector<std::string> grade_args(const std::string& store, const std::string& mock = "mock.json") const
    {
        return {"grade", "--queries", file("queries.tsv"), "--passages", file("passages.tsv"), "--pairs",
                file("gold.qrels"), "--store", file(store), "--mock", file(mock)};
    }
};

}  // namespace

TEST_CASE("grade with a mock writes one record per pair and criterion")
{
    Workspace ws(1, 2, 2, 1);
    fixture::write_file(ws.file("always.json"), R"({"default":"2"})");
    const Result r = run_cli(ws.grade_args("store.jsonl", "always.json"));
    CHECK(r.code == 0);
    CHECK(r.out == "pairs 2, criteria 4: graded 8, already present 0, unparseable 0, remaining 0\n");
    const auto records = parse_grade_records(fixture::read_file(ws.file("store.jsonl")));
    CHECK(records.size() == 8);

    CHECK(run_cli(ws.grade_args("store.jsonl", "always.json")).code == 1);
    auto resume = ws.grade_args("store.jsonl", "always.json");
    resume.push_back("--resume");
    const Result again = run_cli(resume);
    CHECK(again.code == 0);
    CHECK(again.out.find("graded 0, already present 8") != std::string::npos);
}

TEST_CASE("grade on two queries by two passages gives 16 records")
{
    Workspace ws(2, 2, 2, 2);
    const Result r = run_cli(ws.grade_args("store.jsonl"));
    CHECK(r.code == 0);
    CHECK(GradeStore::open(ws.file("store.jsonl")).size() == 16);
}

TEST_CASE("grade reports missing inputs with exit code 1")
{
    Workspace ws(1, 2, 2, 1);
    auto args = ws.grade_args("store.jsonl");
    args[4] = ws.file("nope.tsv");
    const Result r = run_cli(args);
    CHECK(r.code == 1);
    CHECK(r.err.find("nope.tsv") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(ws.file("store.jsonl")));

    CHECK(run_cli({"grade", "--bogus"}).code == 1);
    CHECK(run_cli({}).code == 1);
}

TEST_CASE("grade skips pairs without passage text and keeps going")
{
    Workspace ws(1, 2, 2, 1);
    fixture::write_file(ws.file("pairs.txt"), "q1 d1_1\nq1 d1_2\nq1 ghost\n");
    auto args = ws.grade_args("store.jsonl");
    args[6] = ws.file("pairs.txt");
    const Result r = run_cli(args);
    CHECK(r.code == 0);
    CHECK(r.err.find("no text for passage ghost") != std::string::npos);
    CHECK(GradeStore::open(ws.file("store.jsonl")).size() == 8);
}

TEST_CASE("grade pools pairs from runs")
{
    Workspace ws(2, 6, 2, 3);
    const Result r = run_cli({"grade", "--queries", ws.file("queries.tsv"), "--passages", ws.file("passages.tsv"),
                              "--runs", ws.file("runs"), "--pool-depth", "2", "--store", ws.file("s.jsonl"), "--mock",
                              ws.file("mock.json")});
    CHECK(r.code == 0);
    const auto pool = pool_top_k(ws.corpus.runs, 2);
    std::size_t expected = 0;
    for (const auto& [q, docs] : pool) expected += docs.size();
    CHECK(GradeStore::open(ws.file("s.jsonl")).size() == expected * 4);
}

TEST_CASE("sum aggregation output equals independently binned qrels byte for byte")
{
    Workspace ws(4, 6, 2, 4);
    REQUIRE(run_cli(ws.grade_args("store.jsonl")).code == 0);
    const Result r = run_cli({"aggregate", "--store", ws.file("store.jsonl"), "--method", "sum", "--output",
                              ws.file("pred.qrels")});
    REQUIRE(r.code == 0);

    JudgmentSet expected;
    const GradeStore store = GradeStore::open(ws.file("store.jsonl"));
    for (const auto& [q, d] : store.pairs("mock")) {
        int sum = 0;
        for (const auto& key : default_criteria().keys()) sum += store.find(q, d, key, "mock")->grade;
        expected.add(q, d, oracle::table3_label(sum));
    }
    CHECK(fixture::read_file(ws.file("pred.qrels")) == write_qrels(expected));
    CHECK(expected == ws.corpus.qrels);
}

TEST_CASE("aggregate errors")
{
    Workspace ws(1, 2, 2, 1);
    REQUIRE(run_cli(ws.grade_args("store.jsonl")).code == 0);
    const Result prompt = run_cli({"aggregate", "--store", ws.file("store.jsonl"), "--method", "prompt"});
    CHECK(prompt.code == 1);
    CHECK(prompt.err.find("backend") != std::string::npos);
    CHECK(run_cli({"aggregate", "--store", ws.file("store.jsonl"), "--method", "sum", "--thresholds", "5,7,10"}).code
          == 1);
    CHECK(run_cli({"aggregate", "--store", ws.file("missing.jsonl")}).code == 1);

    const Result subset = run_cli({"aggregate", "--store", ws.file("store.jsonl"), "--method", "sum",
                                   "--criteria-subset", "TCF", "--output", ws.file("tcf.qrels")});
    CHECK(subset.code == 0);
    CHECK(subset.out.find("thresholds 8,5,4") != std::string::npos);
}

TEST_CASE("aggregate through the prompt method with an echo mock")
{
    Workspace ws(2, 3, 2, 6);
    REQUIRE(run_cli(ws.grade_args("store.jsonl")).code == 0);
    fixture::write_file(ws.file("echo.json"), R"({"rules":[{"kind":"aggregation","echo":"exactness"}]})");
    const Result r = run_cli({"aggregate", "--store", ws.file("store.jsonl"), "--method", "prompt", "--mock",
                              ws.file("echo.json"), "--queries", ws.file("queries.tsv"), "--passages",
                              ws.file("passages.tsv"), "--output", ws.file("p.qrels")});
    REQUIRE(r.code == 0);
    const JudgmentSet labels = read_qrels_file(ws.file("p.qrels"));
    for (const auto& e : ws.corpus.qrels.entries()) {
        CHECK(labels.label(e.query_id, e.doc_id) == fixture::grades_for_label(e.relevance)[0]);
    }
}

TEST_CASE("compare with identical judgments reports perfect correlation")
{
    Workspace ws(5, 8, 5, 7);
    REQUIRE(run_cli(ws.grade_args("store.jsonl")).code == 0);
    const Result r = run_cli({"--output-dir", ws.file("out"), "compare", "--qrels", ws.file("gold.qrels"), "--pred",
                              ws.file("gold.qrels"), "--runs", ws.file("runs"), "--store", ws.file("store.jsonl")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("| ndcg_cut.10 | 1.0000 | 1.0000 |") != std::string::npos);
    for (const char* name : {"compare.md", "leaderboard_gold.csv", "leaderboard_predicted.csv", "confusion.csv",
                             "scatter.csv", "indicator_correlations.csv"}) {
        CHECK(std::filesystem::exists(ws.dir.path() / "out" / name));
    }
    CHECK(fixture::read_file(ws.file("out/leaderboard_gold.csv"))
          == fixture::read_file(ws.file("out/leaderboard_predicted.csv")));
}

TEST_CASE("evaluate prints per-query and mean lines")
{
    Workspace ws(2, 4, 2, 5);
    const Result r = run_cli({"evaluate", "--qrels", ws.file("gold.qrels"), "--runs", ws.file("runs/sys0"),
                              "--metric", "recip_rank"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("sys0\trecip_rank\tq1\t") != std::string::npos);
    CHECK(r.out.find("sys0\trecip_rank\tall\t") != std::string::npos);
}

TEST_CASE("tune recovers 10,7,5 on a planted dev set")
{
    fixture::TempDir dir;
    const auto dev = fixture::tuning_dev_set(2, 23);
    fixture::write_file(dir.file("dev.jsonl"), write_grade_records(dev.records));
    fixture::write_file(dir.file("dev.qrels"), write_qrels(dev.qrels));
    std::filesystem::create_directories(dir.path() / "runs");
    for (const auto& run : dev.runs) fixture::write_file(dir.file("runs/" + run.system_id()), write_run(run));
    const Result r = run_cli({"tune", "--store", dir.file("dev.jsonl"), "--qrels", dir.file("dev.qrels"), "--runs",
                              dir.file("runs"), "--model", "mock", "--output", dir.file("spec.json")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("thresholds 10,7,5\n") != std::string::npos);
    CHECK(r.out.find("candidates 286") != std::string::npos);
    const auto spec = nlohmann::json::parse(fixture::read_file(dir.file("spec.json")));
    CHECK(spec.at("thresholds") == nlohmann::json::array({10, 7, 5}));
}

TEST_CASE("report renders an annotated table")
{
    fixture::TempDir dir;
    fixture::write_file(dir.file("r.csv"), "method,ndcg\nsum,0.9\nprompt,0.8\n");
    const Result r = run_cli({"report", "--input", dir.file("r.csv"), "--digits", "2"});
    CHECK(r.code == 0);
    CHECK(r.out.find("| sum | **0.90** |") != std::string::npos);
    CHECK(run_cli({"report", "--input", dir.file("none.csv")}).code == 1);
}

TEST_CASE("config file values apply and flags override them")
{
    Workspace ws(1, 2, 2, 1);
    fixture::write_file(ws.file("always.json"), R"({"default":"3"})");
    nlohmann::json config{{"queries", ws.file("queries.tsv")},
                          {"passages", ws.file("passages.tsv")},
                          {"pairs", ws.file("gold.qrels")},
                          {"store", ws.file("from_config.jsonl")},
                          {"mock", ws.file("always.json")},
                          {"backend", {{"model", "cfg-model"}}}};
    fixture::write_file(ws.file("config.json"), config.dump());
    const Result r = run_cli({"--config", ws.file("config.json"), "grade", "--model", "flag-model"});
    REQUIRE(r.code == 0);
    const GradeStore store = GradeStore::open(ws.file("from_config.jsonl"));
    CHECK(store.model_ids() == std::vector<std::string>{"flag-model"});

    fixture::write_file(ws.file("bad.json"), "{not json");
    CHECK(run_cli({"--config", ws.file("bad.json"), "grade"}).code == 1);
}

TEST_CASE("a backend that keeps failing exits 2 and resume completes the store")
{
    Workspace ws(5, 4, 2, 10);
    REQUIRE(run_cli(ws.grade_args("clean.jsonl")).code == 0);

    auto script = nlohmann::json::parse(fixture::read_file(ws.file("mock.json")));
    script["fail_after"] = 13;
    fixture::write_file(ws.file("crashy.json"), script.dump());
    fixture::write_file(ws.file("noretry.json"), R"({"backend":{"max_attempts":1,"workers":1}})");
    auto crash = ws.grade_args("store.jsonl", "crashy.json");
    crash.insert(crash.begin(), {"--config", ws.file("noretry.json")});
    const Result crashed = run_cli(crash);
    CHECK(crashed.code == 2);
    CHECK(crashed.err.find("--resume") != std::string::npos);
    CHECK(GradeStore::open(ws.file("store.jsonl")).size() == 13);

    auto resume = ws.grade_args("store.jsonl");
    resume.push_back("--resume");
    const Result resumed = run_cli(resume);
    CHECK(resumed.code == 0);
    CHECK(resumed.out.find("already present 13") != std::string::npos);
    CHECK(same_judgments(GradeStore::open(ws.file("store.jsonl")), GradeStore::open(ws.file("clean.jsonl"))));
}

TEST_CASE("SIGINT stops grading with exit 3 and resume matches a clean run")
{
    Workspace ws(10, 10, 2, 11);
    REQUIRE(run_cli(ws.grade_args("clean.jsonl")).code == 0);

    auto script = nlohmann::json::parse(fixture::read_file(ws.file("mock.json")));
    script["delay_ms"] = 10;
    fixture::write_file(ws.file("slow.json"), script.dump());
    auto args = ws.grade_args("store.jsonl", "slow.json");
    args.insert(args.begin(), std::string(MCJUDGE_BINARY));
    args.push_back("--workers");
    args.push_back("2");

    const pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        const int null = open("/dev/null", O_WRONLY);
        dup2(null, STDOUT_FILENO);
        dup2(null, STDERR_FILENO);
        execv(argv[0], argv.data());
        _exit(127);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    kill(pid, SIGINT);
    int status = 0;
    waitpid(pid, &status, 0);
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 3);

    const std::size_t partial = GradeStore::open(ws.file("store.jsonl")).size();
    CHECK(partial > 0);
    CHECK(partial < 400);

    auto resume = ws.grade_args("store.jsonl");
    resume.push_back("--resume");
    REQUIRE(run_cli(resume).code == 0);
    CHECK(same_judgments(GradeStore::open(ws.file("store.jsonl")), GradeStore::open(ws.file("clean.jsonl"))));
}
