#pragma once

// Markdown and CSV writers for leaderboards, agreement analytics and correlation tables.

#include "mcjudge/meta_eval.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mcjudge {

/// Fixed-point with `digits` decimals.
std::string format_fixed(double value, int digits = 4);

/// RFC 4180 quoting when the field holds a comma, quote or newline.
std::string csv_field(std::string_view text);

enum class Significance { none, best, poor };

/// Marks per column value: best when within 0.005 of the column maximum, poor when at least
/// 0.025 below it. Missing values stay unmarked.
std::vector<Significance> significance_marks(const std::vector<std::optional<double>>& values);

/// "**x**" for best, a red span for poor, plain otherwise.
std::string annotate(const std::string& text, Significance mark);

/// A named-row table of optional numbers, e.g. correlations per method and metric.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::string> row_names;
    std::vector<std::vector<std::optional<double>>> values;  ///< [row][column]
};

/// First column is the row name; other columns are numbers, empty cells missing.
ResultTable parse_result_csv(std::string_view text);

/// Markdown table with significance marks applied per column.
void write_annotated_table(std::ostream& out, const ResultTable& table, int digits = 4);

void write_leaderboard_csv(std::ostream& out, const Leaderboard& board);
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& m);
void write_scatter_csv(std::ostream& out, const std::vector<ScatterRow>& rows);
/// Undefined entries are written as empty cells.
void write_indicator_csv(std::ostream& out, const IndicatorCorrelation& corr);

struct BinarizedScores {
    std::string name;  ///< e.g. "map@2"
    std::optional<double> spearman;
    std::optional<double> kendall;
};

struct CompareReport {
    Leaderboard gold;
    Leaderboard predicted;
    std::optional<double> spearman;
    std::optional<double> kendall;
    ConfusionMatrix confusion;
    std::optional<double> kappa;
    std::optional<double> kappa_zero_vs_rest;
    AgreementStats agreement;
    std::optional<PatternStats> patterns;
    std::vector<BinarizedScores> binarized;  ///< extra metrics reported next to the main one
};

void write_compare_markdown(std::ostream& out, const CompareReport& report);

}  // namespace mcjudge
