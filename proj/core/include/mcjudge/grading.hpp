#pragma once

// Phase one: grade every (query, passage, criterion) triple independently and persist
// one GradeRecord per triple. Runs are resumable: triples already in the store are skipped.

#include "mcjudge/criteria.hpp"
#include "mcjudge/grade_records.hpp"
#include "mcjudge/llm_client.hpp"
#include "mcjudge/trec_io.hpp"

#include <atomic>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace mcjudge {

struct Query {
    std::string query_id;
    std::string text;

    bool operator==(const Query&) const = default;
};

struct Passage {
    std::string doc_id;
    std::string text;

    bool operator==(const Passage&) const = default;
};

struct JudgingPair {
    Query query;
    Passage passage;

    bool operator==(const JudgingPair&) const = default;
};

/// Grade records keyed by (query_id, doc_id, criterion_key, model_id). When opened on a
/// file, every new record is appended and flushed as one JSON line before add() returns.
/// Thread-safe.
class GradeStore {
public:
    using Key = std::tuple<std::string, std::string, std::string, std::string>;

    GradeStore() = default;

    /// Loads `path` if present (StoreLoadError on corrupt lines or duplicate keys) and
    /// appends subsequent additions to it.
    static GradeStore open(const std::string& path);

    GradeStore(GradeStore&& other) noexcept;
    GradeStore& operator=(GradeStore&& other) noexcept;
    GradeStore(const GradeStore&) = delete;
    GradeStore& operator=(const GradeStore&) = delete;

    /// Validates and inserts. Returns false (nothing written) when the key already exists.
    bool add(GradeRecord record);

    bool contains(const std::string& query_id, const std::string& doc_id, const std::string& criterion_key,
                  const std::string& model_id) const;

    const GradeRecord* find(const std::string& query_id, const std::string& doc_id,
                            const std::string& criterion_key, const std::string& model_id) const;

    /// Grades of one pair for `model_id`, restricted to `criteria`; nullopt unless all are present.
    std::optional<CriterionGrades> grades(const std::string& query_id, const std::string& doc_id,
                                          const CriteriaSet& criteria, const std::string& model_id) const;

    /// Distinct (query_id, doc_id) pairs graded by `model_id`, sorted.
    std::vector<std::pair<std::string, std::string>> pairs(const std::string& model_id) const;

    /// Distinct model ids, sorted.
    std::vector<std::string> model_ids() const;

    /// Snapshot ordered by key.
    std::vector<GradeRecord> records() const;

    std::size_t size() const;
    bool empty() const { return size() == 0; }
    const std::string& path() const { return path_; }

private:
    std::map<Key, GradeRecord> records_;
    std::string path_;
    std::ofstream out_;
    mutable std::mutex mutex_;
};

/// True when both stores hold the same keys with the same grades, flags, raw outputs and
/// prompt digests. Timestamps are ignored.
bool same_judgments(const GradeStore& a, const GradeStore& b);

struct GradingOptions {
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 100;
    std::size_t workers = 4;
    /// Checked between tasks; setting it stops dispatch and returns a partial report.
    const std::atomic<bool>* cancel = nullptr;
    /// Timestamp source; defaults to utc_timestamp().
    std::function<std::string()> clock;
    /// Called after each committed record (from worker threads, serialised).
    std::function<void(const GradeRecord&)> on_record;
};

struct GradingReport {
    std::size_t graded = 0;
    std::size_t skipped = 0;  ///< triples already present in the store
    std::size_t parse_failed = 0;
    std::size_t remaining = 0;  ///< triples not processed because the run was cancelled
    bool complete() const { return remaining == 0; }
};

/// Throws ValidationError for an empty pair list or empty texts. A backend failure that
/// survives retries stops dispatch, waits for in-flight work, and is rethrown; every record
/// committed before that point stays in the store.
GradingReport grade_pairs(const std::vector<JudgingPair>& pairs, const CriteriaSet& criteria, ChatClient& client,
                          GradeStore& store, const GradingOptions& options);

/// Rebuilds the prompt for a record and checks its stored digest.
bool verify_provenance(const GradeRecord& record, const JudgingPair& pair, const CriteriaSet& criteria);

/// `id<TAB>text` lines. Text may contain spaces; duplicate ids rejected.
std::map<std::string, std::string> parse_tsv_texts(std::string_view text);
std::map<std::string, std::string> read_tsv_texts(const std::string& path);

/// Union of the top-k doc ids per query across runs.
std::map<std::string, std::set<std::string>> pool_top_k(const std::vector<Run>& runs, std::size_t depth);

/// `qid docid` or qrels-shaped `qid iter docid rel` lines.
std::map<std::string, std::set<std::string>> parse_pair_list(std::string_view text);

struct PairLoad {
    std::vector<JudgingPair> pairs;  ///< sorted by (query_id, doc_id)
    std::vector<std::pair<std::string, std::string>> missing_passages;
    std::vector<std::string> missing_queries;
};

/// Joins requested (query, doc) ids against query and passage texts.
PairLoad join_pairs(const std::map<std::string, std::set<std::string>>& wanted,
                    const std::map<std::string, std::string>& queries,
                    const std::map<std::string, std::string>& passages);

PairLoad load_pairs(const std::string& queries_file, const std::string& passages_file, const std::string& pairs_file);
PairLoad load_pairs(const std::string& queries_file, const std::string& passages_file, const std::vector<Run>& runs,
                    std::size_t depth = 10);

}  // namespace mcjudge
