#include "mcjudge/error.hpp"

#include <utility>

namespace mcjudge {

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line)
{
}

ProtocolError::ProtocolError(int status, std::string body_excerpt)
    : Error("HTTP " + std::to_string(status) + ": " + body_excerpt),
      status_(status),
      body_(std::move(body_excerpt))
{
}

namespace {

std::string describe(const std::vector<IncompleteStoreError::Missing>& missing)
{
    std::string msg = std::to_string(missing.size()) + " criterion grade(s) missing";
    const std::size_t shown = missing.size() < 5 ? missing.size() : 5;
    for (std::size_t i = 0; i < shown; ++i) {
        msg += i == 0 ? ": " : ", ";
        msg += "(" + missing[i].query_id + ", " + missing[i].doc_id + ", " + missing[i].criterion_key + ")";
    }
    if (shown < missing.size()) {
        msg += ", ...";
    }
    return msg;
}

}  // namespace

IncompleteStoreError::IncompleteStoreError(std::vector<Missing> missing)
    : SpecError(describe(missing)), missing_(std::move(missing))
{
}

}  // namespace mcjudge
