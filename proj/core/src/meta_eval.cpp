#include "mcjudge/meta_eval.hpp"

#include "mcjudge/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>

namespace mcjudge {

namespace {

void require_paired(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw ValidationError("correlation inputs differ in length");
    }
    if (x.size() < 2) {
        throw ValidationError("correlation needs at least two items");
    }
}

/// Doubled average ranks minus (n + 1): integer, and summing to zero.
std::vector<std::int64_t> centred_doubled_ranks(std::span<const double> v)
{
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<std::int64_t> out(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        // positions i..j (0-based) share the average rank ((i+1)+(j+1))/2
        const auto doubled = static_cast<std::int64_t>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) {
            out[order[k]] = doubled - static_cast<std::int64_t>(n + 1);
        }
        i = j + 1;
    }
    return out;
}

std::int64_t tied_pairs(std::int64_t run) { return run * (run - 1) / 2; }

/// Counts inversions of `v` while merge-sorting it.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi)
{
    if (hi - lo < 2) {
        return 0;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
    std::size_t a = lo;
    std::size_t b = mid;
    std::size_t out = lo;
    while (a < mid && b < hi) {
        if (v[b] < v[a]) {
            swaps += static_cast<std::int64_t>(mid - a);
            buf[out++] = v[b++];
        } else {
            buf[out++] = v[a++];
        }
    }
    while (a < mid) buf[out++] = v[a++];
    while (b < hi) buf[out++] = v[b++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

std::pair<std::vector<double>, std::vector<double>> paired_scores(const Leaderboard& a, const Leaderboard& b)
{
    if (a.rows.size() != b.rows.size()) {
        throw ValidationError("leaderboards rank different numbers of systems");
    }
    std::map<std::string, double> right;
    for (const auto& r : b.rows) {
        right.emplace(r.system_id, r.score);
    }
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& r : a.rows) {
        auto it = right.find(r.system_id);
        if (it == right.end()) {
            throw ValidationError("system " + r.system_id + " missing from the other leaderboard");
        }
        x.push_back(r.score);
        y.push_back(it->second);
    }
    return {std::move(x), std::move(y)};
}

std::string source_name(const Criterion& c) { return c.code.empty() ? c.key : c.code; }

}  // namespace

Leaderboard Leaderboard::from_scores(MetricSpec metric, std::vector<LeaderboardRow> rows)
{
    if (rows.size() < 2) {
        throw ValidationError("a leaderboard needs at least two systems");
    }
    std::set<std::string> ids;
    for (const auto& r : rows) {
        if (!ids.insert(r.system_id).second) {
            throw ValidationError("duplicate system id " + r.system_id + " in leaderboard");
        }
    }
    std::sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.system_id < b.system_id;
    });
    return {metric, std::move(rows)};
}

Leaderboard build_leaderboard(std::span<const Run> runs, const JudgmentSet& judgments, const MetricSpec& spec)
{
    if (runs.size() < 2) {
        throw ValidationError("a leaderboard needs at least two systems");
    }
    std::vector<LeaderboardRow> rows;
    rows.reserve(runs.size());
    for (const auto& run : runs) {
        rows.push_back({run.system_id(), evaluate_system(run, judgments, spec).mean});
    }
    return Leaderboard::from_scores(spec, std::move(rows));
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y)
{
    require_paired(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });

    const auto total = tied_pairs(static_cast<std::int64_t>(n));
    std::int64_t ties_x = 0;
    std::int64_t ties_xy = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && x[order[j]] == x[order[i]]) {
            ++j;
        }
        ties_x += tied_pairs(static_cast<std::int64_t>(j - i));
        for (std::size_t k = i; k < j;) {
            std::size_t m = k;
            while (m < j && y[order[m]] == y[order[k]]) {
                ++m;
            }
            ties_xy += tied_pairs(static_cast<std::int64_t>(m - k));
            k = m;
        }
        i = j;
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys[i] = y[order[i]];
    }
    std::vector<double> buf(n);
    const std::int64_t discordant = count_inversions(ys, buf, 0, n);

    std::int64_t ties_y = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && ys[j] == ys[i]) {
            ++j;
        }
        ties_y += tied_pairs(static_cast<std::int64_t>(j - i));
        i = j;
    }

    const std::int64_t untied_x = total - ties_x;
    const std::int64_t untied_y = total - ties_y;
    if (untied_x == 0 || untied_y == 0) {
        throw UndefinedStatisticError("Kendall's tau-b is undefined when either ranking is constant");
    }
    const std::int64_t net = total - ties_x - ties_y + ties_xy - 2 * discordant;
    return static_cast<double>(net) / std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

double spearman_rho(std::span<const double> x, std::span<const double> y)
{
    require_paired(x, y);
    const auto rx = centred_doubled_ranks(x);
    const auto ry = centred_doubled_ranks(y);
    std::int64_t sxy = 0;
    std::int64_t sxx = 0;
    std::int64_t syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += rx[i] * ry[i];
        sxx += rx[i] * rx[i];
        syy += ry[i] * ry[i];
    }
    if (sxx == 0 || syy == 0) {
        throw UndefinedStatisticError("Spearman's rho is undefined when either ranking is constant");
    }
    return static_cast<double>(sxy) / std::sqrt(static_cast<double>(sxx) * static_cast<double>(syy));
}

double pearson(std::span<const double> x, std::span<const double> y)
{
    require_paired(x, y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedStatisticError("Pearson correlation is undefined for a constant variable");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kendall_tau(const Leaderboard& a, const Leaderboard& b)
{
    const auto [x, y] = paired_scores(a, b);
    return kendall_tau_b(x, y);
}

double spearman_rho(const Leaderboard& a, const Leaderboard& b)
{
    const auto [x, y] = paired_scores(a, b);
    return spearman_rho(std::span<const double>(x), std::span<const double>(y));
}

long ConfusionMatrix::total() const
{
    long t = 0;
    for (const auto& row : counts) {
        for (long c : row) {
            t += c;
        }
    }
    return t;
}

long ConfusionMatrix::row_total(int predicted) const
{
    const auto& row = counts.at(static_cast<std::size_t>(predicted));
    return std::accumulate(row.begin(), row.end(), 0L);
}

long ConfusionMatrix::column_total(int judged) const
{
    long t = 0;
    for (const auto& row : counts) {
        t += row.at(static_cast<std::size_t>(judged));
    }
    return t;
}

ConfusionMatrix confusion(const JudgmentSet& predicted, const JudgmentSet& gold)
{
    ConfusionMatrix m;
    for (const auto& [qid, labels] : predicted.queries()) {
        const QueryLabels* truth = gold.query(qid);
        if (truth == nullptr) {
            continue;
        }
        for (const auto& [doc, p] : labels) {
            auto it = truth->find(doc);
            if (it != truth->end()) {
                ++m.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(it->second)];
            }
        }
    }
    if (m.total() == 0) {
        throw EvaluationError("predicted and gold judgments share no (query, doc) pair");
    }
    return m;
}

double cohen_kappa(const std::vector<std::vector<long>>& table)
{
    const std::size_t k = table.size();
    long double n = 0;
    long double diag = 0;
    std::vector<long double> rows(k, 0);
    std::vector<long double> cols(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        if (table[i].size() != k) {
            throw ValidationError("kappa needs a square table");
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (table[i][j] < 0) {
                throw ValidationError("negative count in kappa table");
            }
            rows[i] += table[i][j];
            cols[j] += table[i][j];
            n += table[i][j];
        }
        diag += table[i][i];
    }
    if (n == 0) {
        throw UndefinedStatisticError("kappa of an empty table");
    }
    long double chance = 0;
    for (std::size_t i = 0; i < k; ++i) {
        chance += rows[i] * cols[i];
    }
    // kappa = (p_o - p_e) / (1 - p_e), scaled by n^2
    const long double denom = n * n - chance;
    if (denom == 0) {
        throw UndefinedStatisticError("kappa is undefined when expected agreement is 1");
    }
    return static_cast<double>((n * diag - chance) / denom);
}

double cohen_kappa(const ConfusionMatrix& m, const std::function<bool(int)>& binarize)
{
    if (!binarize) {
        std::vector<std::vector<long>> table(4, std::vector<long>(4));
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                table[i][j] = m.counts[i][j];
            }
        }
        return cohen_kappa(table);
    }
    std::vector<std::vector<long>> table(2, std::vector<long>(2, 0));
    for (int p = 0; p < 4; ++p) {
        for (int j = 0; j < 4; ++j) {
            table[binarize(p) ? 1 : 0][binarize(j) ? 1 : 0] +=
                m.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
        }
    }
    return cohen_kappa(table);
}

AgreementStats agreement_stats(const ConfusionMatrix& m)
{
    const long total = m.total();
    if (total <= 0) {
        throw EvaluationError("agreement statistics need a non-empty confusion matrix");
    }
    long exact = 0;
    long off_by_one = 0;
    AgreementStats s;
    for (int p = 0; p < 4; ++p) {
        for (int j = 0; j < 4; ++j) {
            const long c = m.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
            const int gap = std::abs(p - j);
            if (gap == 0) {
                exact += c;
            } else if (gap == 1) {
                off_by_one += c;
            } else {
                s.gross_mismatch_count += c;
                if (p > j) {
                    s.lenient_gross_count += c;
                }
            }
        }
    }
    s.exact_fraction = static_cast<double>(exact) / static_cast<double>(total);
    s.off_by_one_fraction = static_cast<double>(off_by_one) / static_cast<double>(total);
    if (s.gross_mismatch_count > 0) {
        s.lenient_fraction_of_gross =
            static_cast<double>(s.lenient_gross_count) / static_cast<double>(s.gross_mismatch_count);
    }
    return s;
}

IndicatorCorrelation indicator_correlations(const GradeStore& store, const CriteriaSet& criteria,
                                            const std::string& model_id, const JudgmentSet& predicted,
                                            const JudgmentSet& gold)
{
    // rows: one per pair; columns: criteria grades, then predicted label, then judgment
    std::vector<std::vector<int>> rows;
    for (const auto& [qid, doc] : store.pairs(model_id)) {
        auto grades = store.grades(qid, doc, criteria, model_id);
        auto pred = predicted.label(qid, doc);
        auto truth = gold.label(qid, doc);
        if (!grades || !pred || !truth) {
            continue;
        }
        std::vector<int> row;
        for (const auto& c : criteria) {
            row.push_back(grades->at(c.key));
        }
        row.push_back(*pred);
        row.push_back(*truth);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) {
        throw EvaluationError("indicator correlations need at least two fully graded and judged pairs");
    }

    IndicatorCorrelation out;
    out.population = rows.size();
    std::vector<std::string> sources;
    for (const auto& c : criteria) {
        sources.push_back(source_name(c));
    }
    sources.emplace_back("L");
    sources.emplace_back("J");

    std::vector<std::vector<double>> columns;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (int level = kMinLabel; level <= kMaxLabel; ++level) {
            out.variables.push_back({sources[s], level});
            std::vector<double> ind(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                ind[r] = rows[r][s] == level ? 1.0 : 0.0;
            }
            columns.push_back(std::move(ind));
        }
    }

    const std::size_t v = columns.size();
    std::vector<bool> constant(v);
    for (std::size_t i = 0; i < v; ++i) {
        constant[i] = std::all_of(columns[i].begin(), columns[i].end(), [&](double d) { return d == columns[i][0]; });
    }
    out.matrix.assign(v, std::vector<std::optional<double>>(v));
    for (std::size_t i = 0; i < v; ++i) {
        if (constant[i]) {
            continue;
        }
        out.matrix[i][i] = 1.0;
        for (std::size_t j = i + 1; j < v; ++j) {
            if (constant[j]) {
                continue;
            }
            const double r = pearson(columns[i], columns[j]);
            out.matrix[i][j] = r;
            out.matrix[j][i] = r;
        }
    }
    return out;
}

PatternStats pattern_stats(const GradeStore& store, const CriteriaSet& criteria, const std::string& model_id)
{
    std::map<std::vector<int>, std::size_t> counts;
    PatternStats s;
    std::size_t high = 0;
    std::size_t low = 0;
    for (const auto& [qid, doc] : store.pairs(model_id)) {
        auto grades = store.grades(qid, doc, criteria, model_id);
        if (!grades) {
            continue;
        }
        std::vector<int> tuple;
        for (const auto& c : criteria) {
            tuple.push_back(grades->at(c.key));
        }
        if (std::all_of(tuple.begin(), tuple.end(), [](int g) { return g >= 2; })) {
            ++high;
        } else if (std::all_of(tuple.begin(), tuple.end(), [](int g) { return g <= 1; })) {
            ++low;
        }
        ++counts[std::move(tuple)];
        ++s.pairs;
    }
    if (s.pairs == 0) {
        throw EvaluationError("no pair is graded on every criterion");
    }
    const double n = static_cast<double>(s.pairs);
    s.high_only_fraction = static_cast<double>(high) / n;
    s.low_only_fraction = static_cast<double>(low) / n;
    s.mixed_fraction = static_cast<double>(s.pairs - high - low) / n;
    s.top_patterns.assign(counts.begin(), counts.end());
    std::stable_sort(s.top_patterns.begin(), s.top_patterns.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return s;
}

std::vector<ScatterRow> scatter_export(std::span<const Run> runs, const JudgmentSet& predicted,
                                       const JudgmentSet& gold, const MetricSpec& spec)
{
    if (runs.size() < 2) {
        throw ValidationError("scatter export needs at least two systems");
    }
    std::vector<const Run*> ordered;
    for (const auto& r : runs) {
        ordered.push_back(&r);
    }
    std::sort(ordered.begin(), ordered.end(), [](const Run* a, const Run* b) { return a->system_id() < b->system_id(); });
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        if (ordered[i]->system_id() == ordered[i - 1]->system_id()) {
            throw ValidationError("duplicate system id " + ordered[i]->system_id());
        }
    }

    std::vector<ScatterRow> rows;
    for (const Run* run : ordered) {
        const SystemScore automatic = evaluate_system(*run, predicted, spec);
        const SystemScore manual = evaluate_system(*run, gold, spec);
        rows.push_back({run->system_id(), "ALL", automatic.mean, manual.mean});
        for (const auto& [qid, value] : manual.per_query) {
            auto it = automatic.per_query.find(qid);
            if (it != automatic.per_query.end()) {
                rows.push_back({run->system_id(), qid, it->second, value});
            }
        }
    }
    return rows;
}

}  // namespace mcjudge
