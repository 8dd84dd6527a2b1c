#pragma once

#include "mcjudge/criteria.hpp"
#include "mcjudge/grading.hpp"
#include "mcjudge/meta_eval.hpp"
#include "mcjudge/mock_backend.hpp"
#include "mcjudge/trec_io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Per-criterion grades whose four-way sum falls in the Table 3 bin of `label`.
std::vector<int> grades_for_label(int label);

/// Synthetic collection with planted labels and systems of graded quality.
struct PlantedCorpus {
    std::map<std::string, std::string> queries;   ///< qid -> text
    std::map<std::string, std::string> passages;  ///< doc id -> text
    mcjudge::JudgmentSet qrels;
    std::vector<mcjudge::Run> runs;

    std::string queries_tsv() const;
    std::string passages_tsv() const;
    std::vector<mcjudge::JudgingPair> pairs() const;
};

/// `queries` x `docs_per_query` judged pairs, labels drawn uniformly from 0..3, and `systems`
/// runs whose scores mix the planted label with noise of decreasing weight.
PlantedCorpus planted_corpus(int queries, int docs_per_query, int systems, std::uint64_t seed);

/// Mock backend answering each criterion prompt with the grade from grades_for_label of the
/// planted label of its pair.
std::shared_ptr<mcjudge::MockBackend> planted_backend(const PlantedCorpus& corpus,
                                                      const mcjudge::CriteriaSet& criteria);

/// The same behaviour as a JSON mock script (one rule per pair and criterion).
std::string planted_mock_script(const PlantedCorpus& corpus, const mcjudge::CriteriaSet& criteria);

/// Dev set for threshold tuning. Each query holds one doc with random four-criterion grades
/// and a reference doc graded (3,3,3,3); every grade sum 0..12 occurs `copies` times. Human
/// labels come from the 10/7/5 bins. Each query has its own one-query system that ranks the
/// random doc first, so a system's score is strictly increasing in that doc's label.
struct TuningDevSet {
    std::vector<mcjudge::GradeRecord> records;
    mcjudge::JudgmentSet qrels;
    std::vector<mcjudge::Run> runs;
    std::string model_id = "mock";

    mcjudge::GradeStore store() const;
};

TuningDevSet tuning_dev_set(int copies, std::uint64_t seed);

/// Published 4412-pair confusion counts (predicted rows 3..0 against judged columns 3..0).
mcjudge::ConfusionMatrix published_confusion();

}  // namespace fixture
