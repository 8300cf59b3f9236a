#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qoe {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (JSON lines, CSV). Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

/// One violated invariant, named after the offending field or rule.
struct Violation {
    std::string field;
    std::string message;
};

/// Schema-valid input that breaks a domain invariant.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations)
        : Error(format(violations)), violations_(std::move(violations)) {}

    const std::vector<Violation>& violations() const { return violations_; }

private:
    static std::string format(const std::vector<Violation>& vs) {
        std::string msg = "validation failed:";
        for (const auto& v : vs) msg += " [" + v.field + "] " + v.message + ";";
        return msg;
    }
    std::vector<Violation> violations_;
};

/// Bad configuration (missing mapping entry, out-of-range constant, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid data fed to a numeric routine (sizes, non-finite values, ranges).
class DataError : public Error {
public:
    using Error::Error;
};

/// Shape mismatch between a model/scaler and its input.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Corrupt, truncated or incompatible serialized artifact.
class SerializationError : public Error {
public:
    using Error::Error;
};

/// Filesystem / IO failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace qoe
