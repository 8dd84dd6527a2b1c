#pragma once

// TREC qrels and run files.
//
// qrels:  `qid iter docid rel`         (iter ignored, rel in 0..3)
// run:    `qid Q0 docid rank score tag` (Q0 ignored, tag replaced by the caller's system id)
//
// Lines split on LF or CRLF, fields on spaces/tabs. Blank lines are skipped; anything
// else either parses or raises a ParseError carrying the 1-based line number.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mcjudge {

inline constexpr int kMinLabel = 0;
inline constexpr int kMaxLabel = 3;

enum class JudgmentSource { human, predicted };

struct QrelEntry {
    std::string query_id;
    std::string doc_id;
    int relevance = 0;

    bool operator==(const QrelEntry&) const = default;
};

/// Per-query view: doc_id -> label.
using QueryLabels = std::map<std::string, int, std::less<>>;

/// (query_id, doc_id) -> label on the graded 0..3 scale. Keys are unique.
class JudgmentSet {
public:
    explicit JudgmentSet(JudgmentSource source = JudgmentSource::human) : source_(source) {}

    /// Throws RangeError for labels outside 0..3, DuplicateError (line 0) for a repeated key,
    /// ValidationError for empty or whitespace-bearing ids.
    void add(std::string query_id, std::string doc_id, int relevance);

    std::optional<int> label(std::string_view query_id, std::string_view doc_id) const;
    bool contains(std::string_view query_id, std::string_view doc_id) const;

    /// Labels of one query, or nullptr when the query has no judgments.
    const QueryLabels* query(std::string_view query_id) const;

    const std::map<std::string, QueryLabels, std::less<>>& queries() const { return by_query_; }

    /// Entries ordered by (query_id, doc_id).
    std::vector<QrelEntry> entries() const;

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    JudgmentSource source() const { return source_; }
    void set_source(JudgmentSource source) { source_ = source; }

    /// Label-wise equality; the source tag is not compared.
    bool operator==(const JudgmentSet& other) const { return by_query_ == other.by_query_; }

private:
    std::map<std::string, QueryLabels, std::less<>> by_query_;
    std::size_t size_ = 0;
    JudgmentSource source_;
};

struct RunEntry {
    std::string query_id;
    std::string doc_id;
    long rank = 1;
    double score = 0.0;
    std::string system_id;

    bool operator==(const RunEntry&) const = default;
};

/// One system's retrieval output. Entries of each query are kept in ranking order:
/// descending score, ties broken by ascending doc_id. The file's rank column is kept
/// for provenance but never used for ordering.
class Run {
public:
    Run() = default;
    explicit Run(std::string system_id) : system_id_(std::move(system_id)) {}

    const std::string& system_id() const { return system_id_; }

    /// Throws ValidationError if the doc is already present for that query.
    void add(RunEntry entry);

    /// Bulk insert; one re-sort per touched query. Same duplicate rule as add().
    void add_all(std::vector<RunEntry> entries);

    const std::map<std::string, std::vector<RunEntry>, std::less<>>& queries() const { return by_query_; }

    /// Ranked doc ids for a query (empty when the query is absent).
    std::vector<std::string> ranking(std::string_view query_id) const;

    std::size_t size() const;

    bool operator==(const Run&) const = default;

private:
    std::string system_id_;
    std::map<std::string, std::vector<RunEntry>, std::less<>> by_query_;
};

JudgmentSet parse_qrels(std::string_view text, JudgmentSource source = JudgmentSource::human);
std::string write_qrels(const JudgmentSet& judgments);

Run parse_run(std::string_view text, const std::string& system_id);

/// Lines grouped by query_id, then in ranking order; scores use the shortest
/// representation that parses back to the same double.
std::string write_run(const Run& run);

JudgmentSet read_qrels_file(const std::string& path, JudgmentSource source = JudgmentSource::human);
Run read_run_file(const std::string& path, const std::string& system_id);

/// Reads a run file and names the system after the file stem.
Run read_run_file(const std::string& path);

/// Loads every run under `paths`; directories contribute all regular files, sorted by name.
/// Throws ValidationError on duplicate system ids.
std::vector<Run> read_runs(const std::vector<std::string>& paths);

namespace detail {

/// Splits text into lines on LF, dropping a trailing CR. Line numbers are 1-based.
std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string_view> split_fields(std::string_view line);
std::string read_file(const std::string& path);

}  // namespace detail

}  // namespace mcjudge
