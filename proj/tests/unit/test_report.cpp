#include <doctest.h>

#include "fixtures.hpp"
#include "mcjudge/error.hpp"
#include "mcjudge/report.hpp"

#include <sstream>

using namespace mcjudge;

TEST_CASE("fixed formatting")
{
    CHECK(format_fixed(0.98765, 4) == "0.9877");
    CHECK(format_fixed(-0.00001, 3) == "0.000");
    CHECK(format_fixed(2.0, 0) == "2");
    CHECK(format_fixed(-0.5, 2) == "-0.50");
}

TEST_CASE("csv quoting")
{
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("significance marks")
{
    using S = Significance;
    const std::vector<std::optional<double>> values{0.90, 0.896, 0.88, 0.875, std::nullopt, 0.8749};
    const auto marks = significance_marks(values);
    CHECK(marks == std::vector<S>{S::best, S::best, S::none, S::poor, S::none, S::poor});
    CHECK(significance_marks({}).empty());
    const std::vector<std::optional<double>> missing{std::nullopt, std::nullopt};
    CHECK(significance_marks(missing) == std::vector<S>{S::none, S::none});
    const std::vector<std::optional<double>> edge{0.5, 0.495};
    CHECK(significance_marks(edge) == std::vector<S>{S::best, S::best});

    CHECK(annotate("0.9", S::best) == "**0.9**");
    CHECK(annotate("0.8", S::poor) == "<span style=\"color:red\">0.8</span>");
    CHECK(annotate("0.85", S::none) == "0.85");
}

TEST_CASE("result csv parses into an annotated markdown table")
{
    const ResultTable t = parse_result_csv("method,ndcg,map\nsum,0.95,0.80\nprompt,0.951,\ndirect,0.90,n/a\n");
    CHECK(t.columns == std::vector<std::string>{"ndcg", "map"});
    CHECK(t.row_names == std::vector<std::string>{"sum", "prompt", "direct"});
    CHECK_FALSE(t.values[1][1].has_value());
    CHECK_FALSE(t.values[2][1].has_value());

    std::ostringstream out;
    write_annotated_table(out, t, 3);
    CHECK(out.str()
          == "| | ndcg | map |\n"
             "|---|---:|---:|\n"
             "| sum | **0.950** | **0.800** |\n"
             "| prompt | **0.951** | n/a |\n"
             "| direct | <span style=\"color:red\">0.900</span> | n/a |\n");
}

TEST_CASE("result csv errors carry line numbers")
{
    try {
        parse_result_csv("m,a\nx,1\ny,1,2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    try {
        parse_result_csv("m,a\nx,abc\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_result_csv(""), ParseError);
    CHECK_THROWS_AS(parse_result_csv("only\n"), ParseError);
}

TEST_CASE("leaderboard and confusion csv")
{
    const std::vector<LeaderboardRow> rows{{"b", 0.25}, {"a,1", 0.5}};
    const Leaderboard board = Leaderboard::from_scores(MetricSpec{}, rows);
    std::ostringstream lb;
    write_leaderboard_csv(lb, board);
    CHECK(lb.str() == "rank,system_id,ndcg_cut.10\n1,\"a,1\",0.500000\n2,b,0.250000\n");

    std::ostringstream cm;
    write_confusion_csv(cm, fixture::published_confusion());
    CHECK(cm.str()
          == "predicted,judged_3,judged_2,judged_1,judged_0,total\n"
             "3,98,97,116,122,433\n"
             "2,243,596,682,692,2213\n"
             "1,26,72,244,409,751\n"
             "0,10,43,191,771,1015\n"
             "total,377,808,1233,1994,4412\n");
}

TEST_CASE("scatter and indicator csv")
{
    std::ostringstream sc;
    write_scatter_csv(sc, {{"s1", "ALL", 0.5, 0.25}, {"s1", "q1", 1.0, 0.0}});
    CHECK(sc.str() == "system_id,query_id,auto_score,manual_score\ns1,ALL,0.500000,0.250000\ns1,q1,1.000000,0.000000\n");

    IndicatorCorrelation corr;
    corr.variables = {{"E", 0}, {"J", 1}};
    corr.matrix = {{1.0, -0.5}, {-0.5, std::nullopt}};
    std::ostringstream ind;
    write_indicator_csv(ind, corr);
    CHECK(ind.str() == "variable,E=0,J=1\nE=0,1.000000,-0.500000\nJ=1,-0.500000,\n");
}

TEST_CASE("compare markdown lists every section")
{
    const std::vector<LeaderboardRow> rows{{"a", 0.5}, {"b", 0.25}};
    CompareReport r{Leaderboard::from_scores(MetricSpec{}, rows),
                    Leaderboard::from_scores(MetricSpec{}, rows),
                    1.0,
                    1.0,
                    fixture::published_confusion(),
                    std::nullopt,
                    0.3,
                    agreement_stats(fixture::published_confusion()),
                    std::nullopt,
                    {{"map@2", 1.0, std::nullopt}}};
    std::ostringstream out;
    write_compare_markdown(out, r);
    const std::string md = out.str();
    CHECK(md.find("| ndcg_cut.10 | 1.0000 | 1.0000 |") != std::string::npos);
    CHECK(md.find("| map@2 | 1.0000 | n/a |") != std::string::npos);
    CHECK(md.find("| 3 | 98 | 97 | 116 | 122 | 433 |") != std::string::npos);
    CHECK(md.find("38.7%") != std::string::npos);
    CHECK(md.find("Leaderboard under predicted judgments") != std::string::npos);
}
