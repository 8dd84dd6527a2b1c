#include "mcjudge/metrics.hpp"

#include "mcjudge/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace mcjudge {

namespace {

int label_of(const QueryLabels& labels, const std::string& doc)
{
    auto it = labels.find(doc);
    return it == labels.end() ? 0 : it->second;
}

std::optional<int> parse_int(std::string_view s)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

}  // namespace

std::string MetricSpec::name() const
{
    std::string out;
    switch (kind) {
    case MetricKind::ndcg_cut:
        return "ndcg_cut." + std::to_string(k);
    case MetricKind::map:
        out = "map";
        break;
    case MetricKind::recip_rank:
        out = "recip_rank";
        break;
    }
    if (binarization_cutoff != 1) {
        out += "@" + std::to_string(binarization_cutoff);
    }
    return out;
}

MetricSpec parse_metric(std::string_view name)
{
    MetricSpec spec;
    std::string_view base = name;
    if (auto at = name.find('@'); at != std::string_view::npos) {
        auto cutoff = parse_int(name.substr(at + 1));
        if (!cutoff) {
            throw SpecError("bad binarization cutoff in metric " + std::string(name));
        }
        spec.binarization_cutoff = *cutoff;
        base = name.substr(0, at);
    }
    if (base == "map") {
        spec.kind = MetricKind::map;
    } else if (base == "recip_rank" || base == "mrr") {
        spec.kind = MetricKind::recip_rank;
    } else if (base == "ndcg_cut" || base.starts_with("ndcg_cut.")) {
        spec.kind = MetricKind::ndcg_cut;
        if (base.size() > 8) {
            auto k = parse_int(base.substr(9));
            if (!k) {
                throw SpecError("bad ndcg cutoff in metric " + std::string(name));
            }
            spec.k = *k;
        }
    } else {
        throw SpecError("unknown metric " + std::string(name) + " (expected ndcg_cut.K, map, recip_rank)");
    }
    validate(spec);
    return spec;
}

void validate(const MetricSpec& spec)
{
    if (spec.k < 1) {
        throw SpecError("ndcg cutoff k must be >= 1");
    }
    if (spec.binarization_cutoff < 1 || spec.binarization_cutoff > kMaxLabel) {
        throw SpecError("binarization cutoff must be in 1..3");
    }
}

double ndcg_at_k(std::span<const std::string> ranking, const QueryLabels& labels, int k)
{
    if (k < 1) {
        throw SpecError("ndcg cutoff k must be >= 1");
    }
    const std::size_t depth = static_cast<std::size_t>(k);
    double dcg = 0.0;
    const std::size_t n = std::min(depth, ranking.size());
    for (std::size_t i = 0; i < n; ++i) {
        const int gain = label_of(labels, ranking[i]);
        if (gain > 0) {
            dcg += gain / std::log2(static_cast<double>(i) + 2.0);
        }
    }

    std::vector<int> ideal;
    ideal.reserve(labels.size());
    for (const auto& [doc, rel] : labels) {
        if (rel > 0) {
            ideal.push_back(rel);
        }
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(depth, ideal.size()); ++i) {
        idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double average_precision(std::span<const std::string> ranking, const QueryLabels& labels, int cutoff)
{
    const auto relevant = static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [&](const auto& kv) { return kv.second >= cutoff; }));
    if (relevant == 0) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (label_of(labels, ranking[i]) >= cutoff) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant);
}

double reciprocal_rank(std::span<const std::string> ranking, const QueryLabels& labels, int cutoff)
{
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (label_of(labels, ranking[i]) >= cutoff) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

double evaluate_query(std::span<const std::string> ranking, const QueryLabels& labels, const MetricSpec& spec)
{
    switch (spec.kind) {
    case MetricKind::ndcg_cut:
        return ndcg_at_k(ranking, labels, spec.k);
    case MetricKind::map:
        return average_precision(ranking, labels, spec.binarization_cutoff);
    case MetricKind::recip_rank:
        return reciprocal_rank(ranking, labels, spec.binarization_cutoff);
    }
    throw SpecError("unhandled metric kind");
}

SystemScore evaluate_system(const Run& run, const JudgmentSet& judgments, const MetricSpec& spec)
{
    validate(spec);
    SystemScore score;
    score.system_id = run.system_id();
    score.metric = spec;
    double total = 0.0;
    for (const auto& [qid, entries] : run.queries()) {
        const QueryLabels* labels = judgments.query(qid);
        if (labels == nullptr) {
            continue;
        }
        std::vector<std::string> ranking;
        ranking.reserve(entries.size());
        for (const auto& e : entries) {
            ranking.push_back(e.doc_id);
        }
        const double value = evaluate_query(ranking, *labels, spec);
        score.per_query.emplace(qid, value);
        total += value;
    }
    if (score.per_query.empty()) {
        throw EvaluationError("run " + run.system_id() + " shares no query with the judgments");
    }
    score.mean = total / static_cast<double>(score.per_query.size());
    return score;
}

}  // namespace mcjudge
