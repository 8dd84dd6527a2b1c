#include <doctest.h>

#include "mcjudge/error.hpp"
#include "mcjudge/grade_records.hpp"

#include <json.hpp>

using namespace mcjudge;

namespace {

GradeRecord sample()
{
    return {"q1", "d1", "exactness", 2, false, "Score: 2", "m-8b", "abc123", "2025-01-02T03:04:05Z"};
}

}  // namespace

TEST_CASE("grade record JSON uses the fixed field names")
{
    const auto doc = nlohmann::json::parse(to_json_line(sample()));
    CHECK(doc.at("query_id") == "q1");
    CHECK(doc.at("doc_id") == "d1");
    CHECK(doc.at("criterion") == "exactness");
    CHECK(doc.at("grade") == 2);
    CHECK(doc.at("parse_failed") == false);
    CHECK(doc.at("raw_output") == "Score: 2");
    CHECK(doc.at("model_id") == "m-8b");
    CHECK(doc.at("prompt_hash") == "abc123");
    CHECK(doc.at("timestamp") == "2025-01-02T03:04:05Z");
    CHECK(to_json_line(sample()).find('\n') == std::string::npos);
}

TEST_CASE("grade records round-trip, including awkward raw output")
{
    GradeRecord odd = sample();
    odd.raw_output = "line one\nline \"two\"\t{3}\\ \xc3\xa9";
    odd.parse_failed = true;
    odd.grade = 0;
    const std::vector<GradeRecord> records{sample(), odd};
    CHECK(parse_grade_records(write_grade_records(records)) == records);
}

TEST_CASE("grade record parse errors carry the line number")
{
    const std::string good = to_json_line(sample());
    try {
        parse_grade_records(good + "\n" + good + "\n{not json}\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    auto doc = nlohmann::json::parse(good);
    doc["grade"] = 7;
    CHECK_THROWS_AS(grade_record_from_json_line(doc.dump(), 1), ParseError);
    doc = nlohmann::json::parse(good);
    doc.erase("criterion");
    CHECK_THROWS_AS(grade_record_from_json_line(doc.dump(), 1), ParseError);
}

TEST_CASE("validate rejects out-of-range grades and empty ids")
{
    GradeRecord r = sample();
    CHECK_NOTHROW(validate(r));
    r.grade = 4;
    CHECK_THROWS_AS(validate(r), ValidationError);
    r = sample();
    r.model_id.clear();
    CHECK_THROWS_AS(validate(r), ValidationError);
}

TEST_CASE("utc_timestamp has the ISO shape")
{
    const std::string t = utc_timestamp();
    REQUIRE(t.size() == 20);
    CHECK(t[4] == '-');
    CHECK(t[10] == 'T');
    CHECK(t.back() == 'Z');
}
