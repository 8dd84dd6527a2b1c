#include "mcjudge/aggregation.hpp"

#include "mcjudge/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace mcjudge {

namespace {

void check_grade(int grade)
{
    if (grade < kMinLabel || grade > kMaxLabel) {
        throw SpecError("criterion grade " + std::to_string(grade) + " outside 0..3");
    }
}

std::vector<int> ordered_grades(const CriterionGrades& grades, const CriteriaSet& subset)
{
    std::vector<int> out;
    out.reserve(subset.size());
    for (const auto& c : subset) {
        auto it = grades.find(c.key);
        if (it == grades.end()) {
            throw SpecError("missing grade for criterion " + c.key);
        }
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

void ThresholdMap::validate(std::size_t criteria) const
{
    const int max_sum = 3 * static_cast<int>(criteria);
    if (!(max_sum >= t3 && t3 > t2 && t2 > t1 && t1 >= 0)) {
        throw SpecError("thresholds (" + std::to_string(t3) + ", " + std::to_string(t2) + ", " + std::to_string(t1)
                        + ") must satisfy " + std::to_string(max_sum) + " >= t3 > t2 > t1 >= 0");
    }
}

int ThresholdMap::label(int sum) const
{
    if (sum >= t3) return 3;
    if (sum >= t2) return 2;
    if (sum >= t1) return 1;
    return 0;
}

ThresholdMap default_thresholds(std::size_t criteria)
{
    if (criteria == 0) {
        throw SpecError("thresholds need at least one criterion");
    }
    if (criteria == 4) {
        return {10, 7, 5};
    }
    const double range = 3.0 * static_cast<double>(criteria);
    auto scale = [&](int cut) { return static_cast<int>(std::lround(cut / 12.0 * range)); };
    ThresholdMap t{scale(10), scale(7), scale(5)};
    const int max_sum = 3 * static_cast<int>(criteria);
    t.t3 = std::clamp(t.t3, 2, max_sum);
    t.t2 = std::clamp(t.t2, 1, t.t3 - 1);
    t.t1 = std::clamp(t.t1, 0, t.t2 - 1);
    t.validate(criteria);
    return t;
}

int aggregate_sum(std::span<const int> grades, const ThresholdMap& thresholds)
{
    if (grades.empty()) {
        throw SpecError("sum aggregation needs at least one grade");
    }
    thresholds.validate(grades.size());
    int sum = 0;
    for (int g : grades) {
        check_grade(g);
        sum += g;
    }
    return thresholds.label(sum);
}

int aggregate_sum(const CriterionGrades& grades, const CriteriaSet& subset, const ThresholdMap& thresholds)
{
    const auto ordered = ordered_grades(grades, subset);
    return aggregate_sum(std::span<const int>(ordered), thresholds);
}

int aggregate_single(const CriterionGrades& grades, const std::string& key)
{
    auto it = grades.find(key);
    if (it == grades.end()) {
        throw SpecError("no grade for criterion " + key);
    }
    check_grade(it->second);
    return it->second;
}

void NBModel::validate() const
{
    if (!(alpha > 0.0)) {
        throw ValidationError("naive Bayes smoothing alpha must be > 0");
    }
    if (criteria.empty() || conditionals.size() != criteria.size()) {
        throw ValidationError("naive Bayes model needs one conditional table per criterion");
    }
    auto on_simplex = [](const std::array<double, 4>& row) {
        const double s = std::accumulate(row.begin(), row.end(), 0.0);
        return std::abs(s - 1.0) <= 1e-9 && std::all_of(row.begin(), row.end(), [](double p) { return p > 0.0; });
    };
    if (!on_simplex(priors)) {
        throw ValidationError("naive Bayes priors are not a distribution");
    }
    for (const auto& table : conditionals) {
        for (const auto& row : table) {
            if (!on_simplex(row)) {
                throw ValidationError("naive Bayes conditional row is not a distribution");
            }
        }
    }
}

NBModel fit_naive_bayes(const std::vector<std::pair<CriterionGrades, int>>& examples,
                        const std::vector<std::string>& criteria, double alpha)
{
    if (examples.empty()) {
        throw FitError("naive Bayes needs at least one training example");
    }
    if (criteria.empty()) {
        throw FitError("naive Bayes needs at least one criterion");
    }
    if (!(alpha > 0.0)) {
        throw FitError("naive Bayes smoothing alpha must be > 0");
    }
    std::array<double, 4> label_counts{};
    std::vector<std::array<std::array<double, 4>, 4>> counts(criteria.size());
    for (const auto& [grades, label] : examples) {
        check_grade(label);
        label_counts[static_cast<std::size_t>(label)] += 1.0;
        for (std::size_t c = 0; c < criteria.size(); ++c) {
            auto it = grades.find(criteria[c]);
            if (it == grades.end()) {
                throw FitError("training example lacks a grade for " + criteria[c]);
            }
            check_grade(it->second);
            counts[c][static_cast<std::size_t>(label)][static_cast<std::size_t>(it->second)] += 1.0;
        }
    }

    NBModel model;
    model.alpha = alpha;
    model.criteria = criteria;
    const double n = static_cast<double>(examples.size());
    for (std::size_t l = 0; l < 4; ++l) {
        model.priors[l] = (label_counts[l] + alpha) / (n + 4.0 * alpha);
    }
    model.conditionals.resize(criteria.size());
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        for (std::size_t l = 0; l < 4; ++l) {
            for (std::size_t g = 0; g < 4; ++g) {
                model.conditionals[c][l][g] = (counts[c][l][g] + alpha) / (label_counts[l] + 4.0 * alpha);
            }
        }
    }
    return model;
}

NBModel fit_naive_bayes(const GradeStore& store, const std::string& model_id, const CriteriaSet& subset,
                        const JudgmentSet& qrels, double alpha)
{
    std::vector<std::pair<CriterionGrades, int>> examples;
    std::vector<IncompleteStoreError::Missing> missing;
    for (const auto& entry : qrels.entries()) {
        CriterionGrades grades;
        for (const auto& c : subset) {
            const GradeRecord* r = store.find(entry.query_id, entry.doc_id, c.key, model_id);
            if (r == nullptr) {
                missing.push_back({entry.query_id, entry.doc_id, c.key});
            } else {
                grades[c.key] = r->grade;
            }
        }
        examples.emplace_back(std::move(grades), entry.relevance);
    }
    if (!missing.empty()) {
        throw IncompleteStoreError(std::move(missing));
    }
    return fit_naive_bayes(examples, subset.keys(), alpha);
}

int aggregate_naive_bayes(const CriterionGrades& grades, const NBModel& model)
{
    for (const auto& [key, g] : grades) {
        if (std::find(model.criteria.begin(), model.criteria.end(), key) == model.criteria.end()) {
            throw SpecError("criterion " + key + " is not part of the naive Bayes model");
        }
    }
    std::vector<std::size_t> observed;
    observed.reserve(model.criteria.size());
    for (const auto& key : model.criteria) {
        auto it = grades.find(key);
        if (it == grades.end()) {
            throw SpecError("missing grade for criterion " + key);
        }
        check_grade(it->second);
        observed.push_back(static_cast<std::size_t>(it->second));
    }
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < 4; ++l) {
        double score = std::log(model.priors[l]);
        for (std::size_t c = 0; c < observed.size(); ++c) {
            score += std::log(model.conditionals[c][l][observed[c]]);
        }
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(l);
        }
    }
    return best;
}

LabelOutcome aggregate_prompt(std::string_view query, std::string_view passage, const CriterionGrades& grades,
                              const CriteriaSet& subset, ChatClient& client, const std::string& model_id,
                              double temperature, int max_tokens)
{
    CriterionGrades used;
    for (const auto& c : subset) {
        auto it = grades.find(c.key);
        if (it == grades.end()) {
            throw SpecError("missing grade for criterion " + c.key);
        }
        used.emplace(c.key, it->second);
    }
    const PromptPair prompt = render_aggregation_prompt(query, passage, subset, used);
    const ChatResponse response = client.complete(make_request(prompt, model_id, temperature, max_tokens));
    const auto label = extract_grade(response.raw_text);
    return {label.value_or(0), !label.has_value(), response.raw_text, prompt_digest(prompt)};
}

LabelOutcome judge_direct(std::string_view query, std::string_view passage, ChatClient& client,
                          const std::string& model_id, double temperature, int max_tokens)
{
    const PromptPair prompt = render_direct_prompt(query, passage);
    const ChatResponse response = client.complete(make_request(prompt, model_id, temperature, max_tokens));
    const auto label = extract_grade(response.raw_text);
    return {label.value_or(0), !label.has_value(), response.raw_text, prompt_digest(prompt)};
}

std::string to_string(AggregationMethod method)
{
    switch (method) {
    case AggregationMethod::prompt:
        return "prompt";
    case AggregationMethod::sum:
        return "sum";
    case AggregationMethod::naive_bayes:
        return "naive_bayes";
    case AggregationMethod::single:
        return "single";
    }
    return "?";
}

AggregationMethod parse_aggregation_method(std::string_view name)
{
    if (name == "prompt") return AggregationMethod::prompt;
    if (name == "sum") return AggregationMethod::sum;
    if (name == "naive_bayes" || name == "nb") return AggregationMethod::naive_bayes;
    if (name == "single") return AggregationMethod::single;
    throw SpecError("unknown aggregation method " + std::string(name) + " (prompt, sum, naive_bayes, single)");
}

void AggregationSpec::validate() const
{
    if (thresholds && method != AggregationMethod::sum) {
        throw SpecError("thresholds only apply to the sum method");
    }
    if (nb_model && method != AggregationMethod::naive_bayes) {
        throw SpecError("a naive Bayes model only applies to the naive_bayes method");
    }
    if (single_key && method != AggregationMethod::single) {
        throw SpecError("a single criterion key only applies to the single method");
    }
    switch (method) {
    case AggregationMethod::sum:
        if (!thresholds) {
            throw SpecError("sum aggregation needs thresholds");
        }
        thresholds->validate(criteria.size());
        break;
    case AggregationMethod::naive_bayes:
        if (!nb_model) {
            throw SpecError("naive_bayes aggregation needs a fitted model");
        }
        nb_model->validate();
        if (nb_model->criteria != criteria.keys()) {
            throw SpecError("naive Bayes model was fitted on a different criteria subset");
        }
        break;
    case AggregationMethod::single:
        if (!single_key) {
            throw SpecError("single aggregation needs a criterion key");
        }
        if (criteria.size() != 1 || criteria.criteria()[0].key != *single_key) {
            throw SpecError("single aggregation uses exactly its one criterion");
        }
        break;
    case AggregationMethod::prompt:
        break;
    }
}

AggregationSpec parse_aggregation_spec(std::string_view json_text, const CriteriaSet& all)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("aggregation spec is not valid JSON: ") + e.what());
    }
    AggregationSpec spec;
    try {
        spec.method = parse_aggregation_method(doc.at("method").get<std::string>());
        if (doc.contains("criteria")) {
            std::string joined;
            for (const auto& k : doc["criteria"]) {
                if (!joined.empty()) joined += ',';
                joined += k.get<std::string>();
            }
            spec.criteria = all.select(joined);
        } else {
            spec.criteria = all;
        }
        if (doc.contains("alpha")) {
            spec.alpha = doc["alpha"].get<double>();
        }
        if (spec.method == AggregationMethod::single) {
            const std::string key = doc.contains("key") ? doc["key"].get<std::string>()
                                                        : (spec.criteria.size() == 1 ? spec.criteria.keys()[0] : "");
            spec.criteria = all.select(key);
            spec.single_key = spec.criteria.keys()[0];
        }
        if (spec.method == AggregationMethod::sum) {
            if (doc.contains("thresholds")) {
                const auto t = doc["thresholds"].get<std::vector<int>>();
                if (t.size() != 3) {
                    throw ConfigError("thresholds must be [t3, t2, t1]");
                }
                spec.thresholds = ThresholdMap{t[0], t[1], t[2]};
            } else {
                spec.thresholds = default_thresholds(spec.criteria.size());
            }
            spec.thresholds->validate(spec.criteria.size());
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad aggregation spec: ") + e.what());
    }
    return spec;
}

Prediction predict_judgments(const GradeStore& store, const AggregationSpec& spec, const PredictOptions& options)
{
    spec.validate();
    const bool prompted = spec.method == AggregationMethod::prompt;
    if (prompted && (options.client == nullptr || options.texts == nullptr)) {
        throw ConfigError("prompt aggregation needs a chat backend and query/passage texts");
    }

    const auto pairs = store.pairs(options.grade_model_id);
    std::vector<CriterionGrades> grades(pairs.size());
    std::vector<IncompleteStoreError::Missing> missing;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [qid, doc] = pairs[i];
        for (const auto& c : spec.criteria) {
            const GradeRecord* r = store.find(qid, doc, c.key, options.grade_model_id);
            if (r == nullptr) {
                missing.push_back({qid, doc, c.key});
            } else {
                grades[i][c.key] = r->grade;
            }
        }
    }
    if (!missing.empty()) {
        throw IncompleteStoreError(std::move(missing));
    }

    std::vector<LabelOutcome> outcomes(pairs.size());
    if (!prompted) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            switch (spec.method) {
            case AggregationMethod::sum:
                outcomes[i].label = aggregate_sum(grades[i], spec.criteria, *spec.thresholds);
                break;
            case AggregationMethod::naive_bayes:
                outcomes[i].label = aggregate_naive_bayes(grades[i], *spec.nb_model);
                break;
            case AggregationMethod::single:
                outcomes[i].label = aggregate_single(grades[i], *spec.single_key);
                break;
            case AggregationMethod::prompt:
                break;
            }
        }
    } else {
        const std::string model =
            options.aggregation_model_id.empty() ? options.grade_model_id : options.aggregation_model_id;
        for (const auto& [qid, doc] : pairs) {
            if (options.texts->queries.count(qid) == 0 || options.texts->passages.count(doc) == 0) {
                throw ValidationError("no text for pair (" + qid + ", " + doc + ")");
            }
        }
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= pairs.size() || failed.load()) {
                    return;
                }
                try {
                    const auto& [qid, doc] = pairs[i];
                    outcomes[i] = aggregate_prompt(options.texts->queries.at(qid), options.texts->passages.at(doc),
                                                   grades[i], spec.criteria, *options.client, model,
                                                   options.temperature, options.max_tokens);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    failed.store(true);
                    return;
                }
            }
        };
        {
            const std::size_t n = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(1, pairs.size()));
            std::vector<std::jthread> threads;
            for (std::size_t t = 0; t < n; ++t) {
                threads.emplace_back(worker);
            }
        }
        if (error) {
            std::rethrow_exception(error);
        }
    }

    Prediction out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        out.labels.add(pairs[i].first, pairs[i].second, outcomes[i].label);
        if (outcomes[i].parse_failed) {
            out.parse_failed.push_back({pairs[i].first, pairs[i].second, outcomes[i].label});
        }
    }
    return out;
}

std::vector<ThresholdMap> threshold_candidates(std::size_t criteria)
{
    const int max_sum = 3 * static_cast<int>(criteria);
    std::vector<ThresholdMap> out;
    for (int t3 = max_sum; t3 >= 2; --t3) {
        for (int t2 = t3 - 1; t2 >= 1; --t2) {
            for (int t1 = t2 - 1; t1 >= 0; --t1) {
                out.push_back({t3, t2, t1});
            }
        }
    }
    return out;
}

TuningResult tune_thresholds(const GradeStore& dev_store, const std::string& model_id, const CriteriaSet& subset,
                             const JudgmentSet& dev_qrels, std::span<const Run> dev_runs, TuningObjective objective,
                             const MetricSpec& metric)
{
    if (dev_qrels.empty()) {
        throw TuningError("development judgments are empty");
    }
    if (dev_runs.size() < 2) {
        throw TuningError("threshold tuning needs at least two development systems");
    }
    const auto entries = dev_qrels.entries();
    const bool uniform = std::all_of(entries.begin(), entries.end(),
                                     [&](const QrelEntry& e) { return e.relevance == entries.front().relevance; });
    if (uniform) {
        throw TuningError("development judgments all carry the same label");
    }

    struct PairSum {
        std::string query_id;
        std::string doc_id;
        int sum;
    };
    std::vector<PairSum> sums;
    for (const auto& [qid, doc] : dev_store.pairs(model_id)) {
        if (auto g = dev_store.grades(qid, doc, subset, model_id)) {
            int s = 0;
            for (const auto& [key, grade] : *g) {
                s += grade;
            }
            sums.push_back({qid, doc, s});
        }
    }
    if (sums.empty()) {
        throw TuningError("no development pair is graded on every criterion of the subset");
    }

    Leaderboard human;
    try {
        human = build_leaderboard(dev_runs, dev_qrels, metric);
    } catch (const Error& e) {
        throw TuningError(std::string("cannot build the human leaderboard: ") + e.what());
    }
    auto correlate = [&](const Leaderboard& predicted) {
        return objective == TuningObjective::kendall ? kendall_tau(predicted, human) : spearman_rho(predicted, human);
    };

    TuningResult best;
    bool found = false;
    const auto candidates = threshold_candidates(subset.size());
    best.candidates = candidates.size();
    for (const auto& t : candidates) {
        JudgmentSet labels(JudgmentSource::predicted);
        for (const auto& p : sums) {
            labels.add(p.query_id, p.doc_id, t.label(p.sum));
        }
        double r = 0.0;
        try {
            r = correlate(build_leaderboard(dev_runs, labels, metric));
        } catch (const UndefinedStatisticError&) {
            continue;
        } catch (const EvaluationError&) {
            continue;
        }
        ++best.defined;
        // candidates arrive in descending order, so strict improvement keeps the largest on ties
        if (!found || r > best.correlation) {
            best.thresholds = t;
            best.correlation = r;
            found = true;
        }
    }
    if (!found) {
        throw TuningError("no threshold map produced a defined leaderboard correlation");
    }
    return best;
}

}  // namespace mcjudge
