#pragma once

// Leaderboards, rank correlation between leaderboards, and agreement analytics between
// predicted and human judgment sets.

#include "mcjudge/criteria.hpp"
#include "mcjudge/grading.hpp"
#include "mcjudge/metrics.hpp"
#include "mcjudge/trec_io.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcjudge {

struct LeaderboardRow {
    std::string system_id;
    double score = 0.0;

    bool operator==(const LeaderboardRow&) const = default;
};

/// Rows sorted by descending score, ties by ascending system id.
struct Leaderboard {
    MetricSpec metric;
    std::vector<LeaderboardRow> rows;

    /// Sorts and checks ids are unique and there are at least two systems.
    static Leaderboard from_scores(MetricSpec metric, std::vector<LeaderboardRow> rows);

    bool operator==(const Leaderboard&) const = default;
};

Leaderboard build_leaderboard(std::span<const Run> runs, const JudgmentSet& judgments, const MetricSpec& spec);

/// Tau-b over paired values. Throws ValidationError on size mismatch or fewer than two
/// items, UndefinedStatisticError when either side is constant.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average (fractional) ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Pearson correlation; UndefinedStatisticError when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Leaderboard versions pair scores by system id; ValidationError if the system sets differ.
double kendall_tau(const Leaderboard& a, const Leaderboard& b);
double spearman_rho(const Leaderboard& a, const Leaderboard& b);

/// counts[predicted][judged] over labels 0..3.
struct ConfusionMatrix {
    std::array<std::array<long, 4>, 4> counts{};

    long total() const;
    long row_total(int predicted) const;
    long column_total(int judged) const;

    bool operator==(const ConfusionMatrix&) const = default;
};

/// Over pairs present in both sets. Throws EvaluationError when they share none.
ConfusionMatrix confusion(const JudgmentSet& predicted, const JudgmentSet& gold);

/// Cohen's kappa on the full 4x4 table, or on the 2x2 table obtained by mapping each label
/// through `binarize` when given. Throws UndefinedStatisticError when expected agreement is 1
/// or the table is empty.
double cohen_kappa(const ConfusionMatrix& m, const std::function<bool(int)>& binarize = {});

/// Kappa of an arbitrary square count table.
double cohen_kappa(const std::vector<std::vector<long>>& table);

struct AgreementStats {
    double exact_fraction = 0.0;
    double off_by_one_fraction = 0.0;
    long gross_mismatch_count = 0;             ///< |predicted - judged| >= 2
    long lenient_gross_count = 0;              ///< gross mismatches with predicted > judged
    std::optional<double> lenient_fraction_of_gross;  ///< nullopt when there are no gross mismatches
};

AgreementStats agreement_stats(const ConfusionMatrix& m);

/// One 0/1 indicator per (source, level). Sources are the criteria codes (or keys) followed
/// by "L" (predicted label) and "J" (human judgment).
struct IndicatorCorrelation {
    struct Variable {
        std::string source;
        int level = 0;
        std::string name() const { return source + "=" + std::to_string(level); }
    };

    std::vector<Variable> variables;
    /// Symmetric; nullopt where either indicator is constant over the population.
    std::vector<std::vector<std::optional<double>>> matrix;
    std::size_t population = 0;
};

/// Population: pairs graded on every criterion by `model_id` that also appear in both
/// judgment sets. Throws EvaluationError with fewer than two such pairs.
IndicatorCorrelation indicator_correlations(const GradeStore& store, const CriteriaSet& criteria,
                                            const std::string& model_id, const JudgmentSet& predicted,
                                            const JudgmentSet& gold);

struct PatternStats {
    double high_only_fraction = 0.0;  ///< every grade >= 2
    double low_only_fraction = 0.0;   ///< every grade <= 1
    double mixed_fraction = 0.0;
    std::size_t pairs = 0;
    /// Grade tuples in criteria order with their counts; count descending, then tuple ascending.
    std::vector<std::pair<std::vector<int>, std::size_t>> top_patterns;
};

/// Over pairs graded on every criterion. Throws EvaluationError if there are none.
PatternStats pattern_stats(const GradeStore& store, const CriteriaSet& criteria, const std::string& model_id);

struct ScatterRow {
    std::string system_id;
    std::string query_id;  ///< "ALL" for the per-system mean
    double auto_score = 0.0;
    double manual_score = 0.0;
};

/// Per system: one "ALL" row (means under each judgment set) followed by one row per query
/// scored under both sets, queries ascending. Systems ascending by id.
std::vector<ScatterRow> scatter_export(std::span<const Run> runs, const JudgmentSet& predicted,
                                       const JudgmentSet& gold, const MetricSpec& spec);

}  // namespace mcjudge
