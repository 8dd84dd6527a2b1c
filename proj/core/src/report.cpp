#include "mcjudge/report.hpp"

#include "mcjudge/error.hpp"
#include "mcjudge/trec_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace mcjudge {

namespace {

constexpr double kTieMargin = 0.005;
constexpr double kPoorMargin = 0.025;
constexpr double kSlack = 1e-9;

std::string opt_fixed(const std::optional<double>& v, int digits = 4)
{
    return v ? format_fixed(*v, digits) : "n/a";
}

std::string percent(double fraction)
{
    return format_fixed(100.0 * fraction, 1) + "%";
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

void leaderboard_table(std::ostream& out, const Leaderboard& board)
{
    out << "| rank | system | " << board.metric.name() << " |\n|---:|---|---:|\n";
    for (std::size_t i = 0; i < board.rows.size(); ++i) {
        out << "| " << i + 1 << " | " << board.rows[i].system_id << " | " << format_fixed(board.rows[i].score)
            << " |\n";
    }
}

}  // namespace

std::string format_fixed(double value, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') {
        s.erase(0, 1);
    }
    return s;
}

std::string csv_field(std::string_view text)
{
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(text);
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::vector<Significance> significance_marks(const std::vector<std::optional<double>>& values)
{
    std::vector<Significance> marks(values.size(), Significance::none);
    std::optional<double> best;
    for (const auto& v : values) {
        if (v && (!best || *v > *best)) {
            best = v;
        }
    }
    if (!best) {
        return marks;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) {
            continue;
        }
        const double gap = *best - *values[i];
        if (gap <= kTieMargin + kSlack) {
            marks[i] = Significance::best;
        } else if (gap >= kPoorMargin - kSlack) {
            marks[i] = Significance::poor;
        }
    }
    return marks;
}

std::string annotate(const std::string& text, Significance mark)
{
    switch (mark) {
    case Significance::best:
        return "**" + text + "**";
    case Significance::poor:
        return "<span style=\"color:red\">" + text + "</span>";
    case Significance::none:
        break;
    }
    return text;
}

ResultTable parse_result_csv(std::string_view text)
{
    ResultTable table;
    const auto lines = detail::split_lines(text);
    bool header = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) {
            continue;
        }
        auto fields = split_csv(lines[i]);
        if (header) {
            if (fields.size() < 2) {
                throw ParseError(i + 1, "result table needs a name column and at least one value column");
            }
            table.columns.assign(fields.begin() + 1, fields.end());
            header = false;
            continue;
        }
        if (fields.size() != table.columns.size() + 1) {
            throw ParseError(i + 1, "expected " + std::to_string(table.columns.size() + 1) + " fields, got "
                                        + std::to_string(fields.size()));
        }
        table.row_names.push_back(fields[0]);
        std::vector<std::optional<double>> row;
        for (std::size_t c = 1; c < fields.size(); ++c) {
            const std::string& f = fields[c];
            if (f.empty() || f == "n/a") {
                row.emplace_back();
                continue;
            }
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size()) {
                throw ParseError(i + 1, "not a number: " + f);
            }
            row.emplace_back(v);
        }
        table.values.push_back(std::move(row));
    }
    if (header) {
        throw ParseError(0, "result table is empty");
    }
    return table;
}

void write_annotated_table(std::ostream& out, const ResultTable& table, int digits)
{
    std::vector<std::vector<Significance>> marks(table.columns.size());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        std::vector<std::optional<double>> column;
        for (const auto& row : table.values) {
            column.push_back(row[c]);
        }
        marks[c] = significance_marks(column);
    }
    out << "| |";
    for (const auto& c : table.columns) {
        out << ' ' << c << " |";
    }
    out << "\n|---|";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << "---:|";
    }
    out << '\n';
    for (std::size_t r = 0; r < table.row_names.size(); ++r) {
        out << "| " << table.row_names[r] << " |";
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const auto& v = table.values[r][c];
            out << ' ' << (v ? annotate(format_fixed(*v, digits), marks[c][r]) : "n/a") << " |";
        }
        out << '\n';
    }
}

void write_leaderboard_csv(std::ostream& out, const Leaderboard& board)
{
    out << "rank,system_id," << board.metric.name() << '\n';
    for (std::size_t i = 0; i < board.rows.size(); ++i) {
        out << i + 1 << ',' << csv_field(board.rows[i].system_id) << ',' << format_fixed(board.rows[i].score, 6)
            << '\n';
    }
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& m)
{
    out << "predicted,judged_3,judged_2,judged_1,judged_0,total\n";
    for (int p = kMaxLabel; p >= kMinLabel; --p) {
        out << p;
        for (int j = kMaxLabel; j >= kMinLabel; --j) {
            out << ',' << m.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
        }
        out << ',' << m.row_total(p) << '\n';
    }
    out << "total";
    for (int j = kMaxLabel; j >= kMinLabel; --j) {
        out << ',' << m.column_total(j);
    }
    out << ',' << m.total() << '\n';
}

void write_scatter_csv(std::ostream& out, const std::vector<ScatterRow>& rows)
{
    out << "system_id,query_id,auto_score,manual_score\n";
    for (const auto& r : rows) {
        out << csv_field(r.system_id) << ',' << csv_field(r.query_id) << ',' << format_fixed(r.auto_score, 6) << ','
            << format_fixed(r.manual_score, 6) << '\n';
    }
}

void write_indicator_csv(std::ostream& out, const IndicatorCorrelation& corr)
{
    out << "variable";
    for (const auto& v : corr.variables) {
        out << ',' << csv_field(v.name());
    }
    out << '\n';
    for (std::size_t i = 0; i < corr.variables.size(); ++i) {
        out << csv_field(corr.variables[i].name());
        for (std::size_t j = 0; j < corr.variables.size(); ++j) {
            out << ',';
            if (corr.matrix[i][j]) {
                out << format_fixed(*corr.matrix[i][j], 6);
            }
        }
        out << '\n';
    }
}

void write_compare_markdown(std::ostream& out, const CompareReport& report)
{
    out << "# Judgment comparison\n\n";
    out << "## Leaderboard correlation (" << report.gold.metric.name() << ")\n\n";
    out << "| metric | Spearman | Kendall |\n|---|---:|---:|\n";
    out << "| " << report.gold.metric.name() << " | " << opt_fixed(report.spearman) << " | "
        << opt_fixed(report.kendall) << " |\n";
    for (const auto& b : report.binarized) {
        out << "| " << b.name << " | " << opt_fixed(b.spearman) << " | " << opt_fixed(b.kendall) << " |\n";
    }

    out << "\n## Leaderboard under gold judgments\n\n";
    leaderboard_table(out, report.gold);
    out << "\n## Leaderboard under predicted judgments\n\n";
    leaderboard_table(out, report.predicted);

    const auto& m = report.confusion;
    out << "\n## Confusion matrix (rows predicted, columns judged)\n\n";
    out << "| | 3 | 2 | 1 | 0 | total |\n|---|---:|---:|---:|---:|---:|\n";
    for (int p = kMaxLabel; p >= kMinLabel; --p) {
        out << "| " << p;
        for (int j = kMaxLabel; j >= kMinLabel; --j) {
            out << " | " << m.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
        }
        out << " | " << m.row_total(p) << " |\n";
    }
    out << "| total";
    for (int j = kMaxLabel; j >= kMinLabel; --j) {
        out << " | " << m.column_total(j);
    }
    out << " | " << m.total() << " |\n";

    const auto& a = report.agreement;
    out << "\n## Agreement\n\n";
    out << "- exact: " << percent(a.exact_fraction) << '\n';
    out << "- off by one: " << percent(a.off_by_one_fraction) << '\n';
    out << "- off by two or more: " << a.gross_mismatch_count;
    if (a.lenient_fraction_of_gross) {
        out << ", of which predicted higher: " << a.lenient_gross_count << " ("
            << percent(*a.lenient_fraction_of_gross) << ")";
    }
    out << '\n';
    out << "- Cohen's kappa (4 labels): " << opt_fixed(report.kappa) << '\n';
    out << "- Cohen's kappa (0 vs rest): " << opt_fixed(report.kappa_zero_vs_rest) << '\n';

    if (report.patterns) {
        const auto& p = *report.patterns;
        out << "\n## Criterion grade patterns (" << p.pairs << " pairs)\n\n";
        out << "- only grades >= 2: " << percent(p.high_only_fraction) << '\n';
        out << "- only grades <= 1: " << percent(p.low_only_fraction) << '\n';
        out << "- mixed: " << percent(p.mixed_fraction) << "\n\n";
        out << "| pattern | count |\n|---|---:|\n";
        for (const auto& [tuple, count] : p.top_patterns) {
            out << "| (";
            for (std::size_t i = 0; i < tuple.size(); ++i) {
                out << (i ? "," : "") << tuple[i];
            }
            out << ") | " << count << " |\n";
        }
    }
}

}  // namespace mcjudge
