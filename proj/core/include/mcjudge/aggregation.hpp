#pragma once

// Phase two: turn per-criterion grades into one 0..3 relevance label.

#include "mcjudge/criteria.hpp"
#include "mcjudge/grading.hpp"
#include "mcjudge/llm_client.hpp"
#include "mcjudge/meta_eval.hpp"
#include "mcjudge/metrics.hpp"
#include "mcjudge/trec_io.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcjudge {

/// Cut points over the grade sum: label 3 if sum >= t3, 2 if >= t2, 1 if >= t1, else 0.
struct ThresholdMap {
    int t3 = 10;
    int t2 = 7;
    int t1 = 5;

    /// Throws SpecError unless 3*criteria >= t3 > t2 > t1 >= 0.
    void validate(std::size_t criteria) const;
    int label(int sum) const;

    auto operator<=>(const ThresholdMap&) const = default;
};

/// (10, 7, 5) for four criteria; otherwise those cut points scaled to a 3*n sum range and
/// rounded, then nudged apart so they stay strictly decreasing.
ThresholdMap default_thresholds(std::size_t criteria);

/// Throws SpecError for an invalid grade or threshold map.
int aggregate_sum(std::span<const int> grades, const ThresholdMap& thresholds);

/// Uses exactly the grades of `subset`; extra grades are ignored, missing ones raise SpecError.
int aggregate_sum(const CriterionGrades& grades, const CriteriaSet& subset, const ThresholdMap& thresholds);

int aggregate_single(const CriterionGrades& grades, const std::string& key);

/// Categorical naive Bayes over criterion grades. All tables are Laplace-smoothed with alpha.
struct NBModel {
    double alpha = 1.0;
    std::vector<std::string> criteria;  ///< keys, in the order of `conditionals`
    std::array<double, 4> priors{};     ///< P(label)
    /// conditionals[c][label][grade] = P(grade of criterion c | label)
    std::vector<std::array<std::array<double, 4>, 4>> conditionals;

    /// Throws ValidationError when alpha <= 0 or any row is off the simplex by more than 1e-9.
    void validate() const;
};

/// Training pairs are the keys of `qrels`; each must carry every grade of `subset` for
/// `model_id` (IncompleteStoreError otherwise). Throws FitError on empty input.
NBModel fit_naive_bayes(const GradeStore& store, const std::string& model_id, const CriteriaSet& subset,
                        const JudgmentSet& qrels, double alpha = 1.0);

/// Same fit from plain (grades, label) examples.
NBModel fit_naive_bayes(const std::vector<std::pair<CriterionGrades, int>>& examples,
                        const std::vector<std::string>& criteria, double alpha = 1.0);

/// Argmax over labels of log prior + sum of log conditionals; ties go to the lower label.
int aggregate_naive_bayes(const CriterionGrades& grades, const NBModel& model);

struct LabelOutcome {
    int label = 0;
    bool parse_failed = false;
    std::string raw_output;
    std::string prompt_digest;
};

/// Renders the aggregation prompt for `subset`, asks the model, and extracts the label.
/// An unparseable answer becomes label 0 with parse_failed set.
LabelOutcome aggregate_prompt(std::string_view query, std::string_view passage, const CriterionGrades& grades,
                              const CriteriaSet& subset, ChatClient& client, const std::string& model_id,
                              double temperature = 0.0, int max_tokens = 100);

/// Single-prompt grading without criteria.
LabelOutcome judge_direct(std::string_view query, std::string_view passage, ChatClient& client,
                          const std::string& model_id, double temperature = 0.0, int max_tokens = 100);

enum class AggregationMethod { prompt, sum, naive_bayes, single };

std::string to_string(AggregationMethod method);
AggregationMethod parse_aggregation_method(std::string_view name);

struct AggregationSpec {
    AggregationMethod method = AggregationMethod::prompt;
    CriteriaSet criteria = default_criteria();
    std::optional<ThresholdMap> thresholds;  ///< sum
    std::optional<NBModel> nb_model;         ///< naive_bayes
    std::optional<std::string> single_key;   ///< single
    double alpha = 1.0;                      ///< naive_bayes smoothing used when fitting

    /// Throws SpecError when a method-specific field is missing or one is set for the wrong method.
    void validate() const;
};

/// JSON: {"method", "criteria":[keys or codes], "thresholds":[t3,t2,t1]?, "alpha"?, "key"?}.
/// Missing sum thresholds take default_thresholds(); the NB model must be fitted separately.
AggregationSpec parse_aggregation_spec(std::string_view json_text, const CriteriaSet& all);

struct PairTexts {
    std::map<std::string, std::string> queries;
    std::map<std::string, std::string> passages;
};

struct PredictOptions {
    std::string grade_model_id;      ///< which grades to read from the store
    std::string aggregation_model_id;  ///< prompt method; defaults to grade_model_id
    const PairTexts* texts = nullptr;  ///< prompt method
    ChatClient* client = nullptr;      ///< prompt method
    double temperature = 0.0;
    int max_tokens = 100;
    std::size_t workers = 4;  ///< concurrent prompt-method requests
};

struct Prediction {
    JudgmentSet labels{JudgmentSource::predicted};
    std::vector<QrelEntry> parse_failed;  ///< prompt method: pairs whose answer had no grade
};

/// One label per (query, doc) graded by grade_model_id. Throws IncompleteStoreError listing
/// every missing (pair, criterion), ConfigError when the prompt method lacks client or texts.
Prediction predict_judgments(const GradeStore& store, const AggregationSpec& spec, const PredictOptions& options);

enum class TuningObjective { kendall, spearman };

struct TuningResult {
    ThresholdMap thresholds;
    double correlation = 0.0;
    std::size_t candidates = 0;  ///< threshold maps evaluated
    std::size_t defined = 0;     ///< of which produced a defined correlation
};

/// All (t3, t2, t1) with 3*|subset| >= t3 > t2 > t1 >= 0, in lexicographically descending order.
std::vector<ThresholdMap> threshold_candidates(std::size_t criteria);

/// Exhaustive search for the thresholds whose sum-aggregated labels give the leaderboard most
/// correlated with the one under `dev_qrels`. Ties favour the lexicographically largest map.
/// Throws TuningError when the dev labels are all equal, the human leaderboard is constant,
/// or no candidate yields a defined correlation.
TuningResult tune_thresholds(const GradeStore& dev_store, const std::string& model_id, const CriteriaSet& subset,
                             const JudgmentSet& dev_qrels, std::span<const Run> dev_runs,
                             TuningObjective objective = TuningObjective::kendall,
                             const MetricSpec& metric = MetricSpec{});

}  // namespace mcjudge
