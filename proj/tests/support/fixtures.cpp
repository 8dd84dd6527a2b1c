#include "fixtures.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <stdlib.h>

namespace fixture {

TempDir::TempDir()
{
    std::string pattern = (std::filesystem::temp_directory_path() / "mcjudge-test-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) {
        throw std::runtime_error("mkdtemp failed");
    }
    path_ = pattern;
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
}

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<int> grades_for_label(int label)
{
    switch (label) {
    case 3:
        return {3, 3, 3, 3};
    case 2:
        return {2, 2, 2, 2};
    case 1:
        return {2, 1, 1, 1};
    default:
        return {0, 0, 0, 0};
    }
}

std::string PlantedCorpus::queries_tsv() const
{
    std::string out;
    for (const auto& [id, text] : queries) {
        out += id + "\t" + text + "\n";
    }
    return out;
}

std::string PlantedCorpus::passages_tsv() const
{
    std::string out;
    for (const auto& [id, text] : passages) {
        out += id + "\t" + text + "\n";
    }
    return out;
}

std::vector<mcjudge::JudgingPair> PlantedCorpus::pairs() const
{
    std::vector<mcjudge::JudgingPair> out;
    for (const auto& e : qrels.entries()) {
        out.push_back({{e.query_id, queries.at(e.query_id)}, {e.doc_id, passages.at(e.doc_id)}});
    }
    return out;
}

PlantedCorpus planted_corpus(int queries, int docs_per_query, int systems, std::uint64_t seed)
{
    Rng rng(seed);
    PlantedCorpus c;
    for (int q = 1; q <= queries; ++q) {
        const std::string qid = "q" + std::to_string(q);
        c.queries[qid] = "synthetic question number " + std::to_string(q) + " about topic {" + std::to_string(q) + "}";
        for (int d = 1; d <= docs_per_query; ++d) {
            const std::string doc = "d" + std::to_string(q) + "_" + std::to_string(d);
            c.passages[doc] = "passage " + doc + " with some words on topic " + std::to_string(q);
            c.qrels.add(qid, doc, rng.uniform(0, 3));
        }
    }
    for (int s = 0; s < systems; ++s) {
        mcjudge::Run run("sys" + std::to_string(s));
        const double noise = 0.5 + 1.5 * s;
        for (const auto& e : c.qrels.entries()) {
            const double score = e.relevance + noise * rng.real(0.0, 3.0);
            run.add({e.query_id, e.doc_id, 1, score, run.system_id()});
        }
        c.runs.push_back(std::move(run));
    }
    return c;
}

namespace {

int planted_grade(const mcjudge::JudgmentSet& qrels, const mcjudge::CriteriaSet& criteria, const std::string& qid,
                  const std::string& doc, const std::string& key)
{
    const auto grades = grades_for_label(qrels.label(qid, doc).value_or(0));
    std::size_t index = 0;
    for (const auto& c : criteria) {
        if (c.key == key) {
            break;
        }
        ++index;
    }
    return grades.at(index % grades.size());
}

}  // namespace

std::shared_ptr<mcjudge::MockBackend> planted_backend(const PlantedCorpus& corpus, const mcjudge::CriteriaSet& criteria)
{
    std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>> by_text;
    for (const auto& e : corpus.qrels.entries()) {
        by_text[{corpus.queries.at(e.query_id), corpus.passages.at(e.doc_id)}] = {e.query_id, e.doc_id};
    }
    auto backend = std::make_shared<mcjudge::MockBackend>();
    backend->add_rule(mcjudge::field_rule(
        criteria, [qrels = corpus.qrels, criteria, by_text](const mcjudge::PromptFields& f) -> std::optional<std::string> {
            if (f.kind != mcjudge::PromptKind::criterion) {
                return std::nullopt;
            }
            auto it = by_text.find({f.query, f.passage});
            if (it == by_text.end()) {
                return std::nullopt;
            }
            return std::to_string(planted_grade(qrels, criteria, it->second.first, it->second.second, f.criterion_key));
        }));
    return backend;
}

std::string planted_mock_script(const PlantedCorpus& corpus, const mcjudge::CriteriaSet& criteria)
{
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& e : corpus.qrels.entries()) {
        for (const auto& c : criteria) {
            rules.push_back({{"kind", "criterion"},
                             {"criterion", c.key},
                             {"query", corpus.queries.at(e.query_id)},
                             {"passage", corpus.passages.at(e.doc_id)},
                             {"response", std::to_string(planted_grade(corpus.qrels, criteria, e.query_id, e.doc_id, c.key))}});
        }
    }
    return nlohmann::json{{"rules", rules}}.dump();
}

mcjudge::GradeStore TuningDevSet::store() const
{
    mcjudge::GradeStore s;
    for (const auto& r : records) {
        s.add(r);
    }
    return s;
}

TuningDevSet tuning_dev_set(int copies, std::uint64_t seed)
{
    Rng rng(seed);
    TuningDevSet dev;
    const auto keys = mcjudge::default_criteria().keys();
    auto add = [&](const std::string& qid, const std::string& doc, const std::vector<int>& grades) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const std::string g = std::to_string(grades[i]);
            dev.records.push_back({qid, doc, keys[i], grades[i], false, g, dev.model_id, "h-" + qid + doc + keys[i],
                                   "2025-01-01T00:00:00Z"});
        }
    };
    for (int c = 0; c < copies; ++c) {
        for (int sum = 0; sum <= 12; ++sum) {
            std::vector<int> grades(4);
            int total = -1;
            while (total != sum) {
                total = 0;
                for (auto& g : grades) {
                    g = rng.uniform(0, 3);
                    total += g;
                }
            }
            const std::string qid = "t" + std::to_string(c) + "s" + std::to_string(sum);
            add(qid, "x" + qid, grades);
            add(qid, "ref" + qid, {3, 3, 3, 3});
            dev.qrels.add(qid, "x" + qid, oracle::table3_label(sum));
            dev.qrels.add(qid, "ref" + qid, 3);
            mcjudge::Run run("sys" + qid);
            run.add({qid, "x" + qid, 1, 2.0, run.system_id()});
            run.add({qid, "ref" + qid, 2, 1.0, run.system_id()});
            dev.runs.push_back(std::move(run));
        }
    }
    return dev;
}

mcjudge::ConfusionMatrix published_confusion()
{
    const long rows[4][4] = {
        {98, 97, 116, 122},
        {243, 596, 682, 692},
        {26, 72, 244, 409},
        {10, 43, 191, 771},
    };
    mcjudge::ConfusionMatrix m;
    for (int p = 0; p < 4; ++p) {
        for (int j = 0; j < 4; ++j) {
            m.counts[static_cast<std::size_t>(3 - p)][static_cast<std::size_t>(3 - j)] = rows[p][j];
        }
    }
    return m;
}

}  // namespace fixture
