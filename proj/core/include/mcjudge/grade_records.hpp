#pragma once

// JSON-lines grade-record files. One object per line:
//
//   {"query_id":..., "doc_id":..., "criterion":..., "grade":0..3, "parse_failed":bool,
//    "raw_output":..., "model_id":..., "prompt_hash":..., "timestamp":...}

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mcjudge {

/// One criterion grade for one (query, passage) pair, with the raw model output it came from.
struct GradeRecord {
    std::string query_id;
    std::string doc_id;
    std::string criterion_key;
    int grade = 0;
    bool parse_failed = false;
    std::string raw_output;
    std::string model_id;
    std::string prompt_digest;
    std::string timestamp;

    bool operator==(const GradeRecord&) const = default;
};

/// Throws ValidationError unless grade is in 0..3 and every id is non-empty.
void validate(const GradeRecord& record);

/// Single line, no trailing newline.
std::string to_json_line(const GradeRecord& record);

/// Throws ParseError(line_no, ...) on malformed JSON, missing fields, or invalid values.
GradeRecord grade_record_from_json_line(std::string_view line, std::size_t line_no = 0);

std::vector<GradeRecord> parse_grade_records(std::string_view text);
std::string write_grade_records(const std::vector<GradeRecord>& records);

/// Current UTC time as `YYYY-MM-DDTHH:MM:SSZ`.
std::string utc_timestamp();

}  // namespace mcjudge
