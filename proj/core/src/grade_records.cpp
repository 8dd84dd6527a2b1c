#include "mcjudge/grade_records.hpp"

#include "mcjudge/error.hpp"
#include "mcjudge/trec_io.hpp"

#include <chrono>
#include <ctime>

#include <json.hpp>

namespace mcjudge {

using nlohmann::json;

void validate(const GradeRecord& record)
{
    if (record.grade < kMinLabel || record.grade > kMaxLabel) {
        throw ValidationError("grade " + std::to_string(record.grade) + " outside 0..3");
    }
    if (record.query_id.empty() || record.doc_id.empty() || record.criterion_key.empty()
        || record.model_id.empty()) {
        throw ValidationError("grade record needs query_id, doc_id, criterion and model_id");
    }
}

std::string to_json_line(const GradeRecord& record)
{
    json j = {
        {"query_id", record.query_id},
        {"doc_id", record.doc_id},
        {"criterion", record.criterion_key},
        {"grade", record.grade},
        {"parse_failed", record.parse_failed},
        {"raw_output", record.raw_output},
        {"model_id", record.model_id},
        {"prompt_hash", record.prompt_digest},
        {"timestamp", record.timestamp},
    };
    // Invalid UTF-8 in model output is replaced rather than aborting the run.
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

GradeRecord grade_record_from_json_line(std::string_view line, std::size_t line_no)
{
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError(line_no, "grade record must be a JSON object");
    }
    GradeRecord r;
    try {
        r.query_id = j.at("query_id").get<std::string>();
        r.doc_id = j.at("doc_id").get<std::string>();
        r.criterion_key = j.at("criterion").get<std::string>();
        r.grade = j.at("grade").get<int>();
        r.parse_failed = j.value("parse_failed", false);
        r.raw_output = j.at("raw_output").get<std::string>();
        r.model_id = j.at("model_id").get<std::string>();
        r.prompt_digest = j.at("prompt_hash").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(line_no, std::string("bad grade record: ") + e.what());
    }
    try {
        validate(r);
    } catch (const ValidationError& e) {
        throw ParseError(line_no, e.what());
    }
    return r;
}

std::vector<GradeRecord> parse_grade_records(std::string_view text)
{
    std::vector<GradeRecord> out;
    const auto lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::split_fields(lines[i]).empty()) {
            continue;
        }
        out.push_back(grade_record_from_json_line(lines[i], i + 1));
    }
    return out;
}

std::string write_grade_records(const std::vector<GradeRecord>& records)
{
    std::string out;
    for (const auto& r : records) {
        out += to_json_line(r);
        out += '\n';
    }
    return out;
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace mcjudge
