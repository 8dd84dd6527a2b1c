#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcjudge {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A line of a TREC or JSON-lines file could not be parsed.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A (query, doc) key occurred twice where it must be unique.
class DuplicateError : public ParseError {
public:
    using ParseError::ParseError;
};

/// A relevance label or grade fell outside its scale.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Caller-supplied input violates a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operation arguments disagree with the active criteria / metric / aggregation spec.
class SpecError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Network failure or timeout that survived every retry.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Non-2xx HTTP answer from a chat endpoint.
class ProtocolError : public Error {
public:
    ProtocolError(int status, std::string body_excerpt);
    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

/// The endpoint answered 2xx but the payload was not a chat completion.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// The mock backend has no scripted answer and no default.
class ScriptedMissError : public Error {
public:
    using Error::Error;
};

/// A grade store or response cache file is corrupt.
class StoreLoadError : public Error {
public:
    using Error::Error;
};

/// Grades required for aggregation are missing from the store.
class IncompleteStoreError : public SpecError {
public:
    struct Missing {
        std::string query_id;
        std::string doc_id;
        std::string criterion_key;
    };

    explicit IncompleteStoreError(std::vector<Missing> missing);
    const std::vector<Missing>& missing() const noexcept { return missing_; }

private:
    std::vector<Missing> missing_;
};

class FitError : public Error {
public:
    using Error::Error;
};

class TuningError : public Error {
public:
    using Error::Error;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Correlation or kappa whose denominator vanishes.
class UndefinedStatisticError : public Error {
public:
    using Error::Error;
};

}  // namespace mcjudge
