#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ecol {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct PermissionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised by a precomputed provider for text that has no stored vector.
struct MissingVectorError : std::runtime_error {
    explicit MissingVectorError(std::string text)
        : std::runtime_error("missing precomputed vector for text: \"" + text + "\""),
          text(std::move(text)) {}
    std::string text;
};

/// Retryable: the advisory lock on the event log could not be taken.
struct LockError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An existing log ends in an incomplete or unparseable record.
struct TornRecordError : std::runtime_error {
    TornRecordError(const std::string& path, std::uint64_t offset)
        : std::runtime_error("torn record in " + path + " at byte offset " + std::to_string(offset)),
          offset(offset) {}
    std::uint64_t offset;
};

struct ParseError : std::runtime_error {
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

struct LifecycleViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ecol
