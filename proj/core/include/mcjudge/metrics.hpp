#pragma once

// trec_eval-compatible per-query metrics: ndcg_cut (linear gain), map, recip_rank.
// Unjudged retrieved documents count as label 0.

#include "mcjudge/trec_io.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>

namespace mcjudge {

enum class MetricKind { ndcg_cut, map, recip_rank };

struct MetricSpec {
    MetricKind kind = MetricKind::ndcg_cut;
    int k = 10;                   ///< ndcg cutoff
    int binarization_cutoff = 1;  ///< minimum label counted relevant by map / recip_rank

    /// trec_eval-style name, e.g. "ndcg_cut.10", "map", "recip_rank"; a non-default
    /// binarization cutoff is appended as "@2".
    std::string name() const;

    bool operator==(const MetricSpec&) const = default;
};

/// Parses "ndcg_cut.10", "ndcg_cut" (k=10), "map", "recip_rank", optionally suffixed "@<cutoff>".
MetricSpec parse_metric(std::string_view name);

/// Throws SpecError when k < 1 or the cutoff is outside 1..3.
void validate(const MetricSpec& spec);

double ndcg_at_k(std::span<const std::string> ranking, const QueryLabels& labels, int k);
double average_precision(std::span<const std::string> ranking, const QueryLabels& labels, int cutoff = 1);
double reciprocal_rank(std::span<const std::string> ranking, const QueryLabels& labels, int cutoff = 1);

double evaluate_query(std::span<const std::string> ranking, const QueryLabels& labels, const MetricSpec& spec);

struct SystemScore {
    std::string system_id;
    MetricSpec metric;
    std::map<std::string, double> per_query;
    double mean = 0.0;
};

/// Scores every query that appears in both the run and the judgments; the mean is over those.
/// Throws EvaluationError when no query overlaps.
SystemScore evaluate_system(const Run& run, const JudgmentSet& judgments, const MetricSpec& spec);

}  // namespace mcjudge
