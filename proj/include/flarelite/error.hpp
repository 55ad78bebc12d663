#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flarelite {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed SQL text. `offset` is the byte position where parsing failed.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Name resolution or typing failure while building a plan.
class PlanError : public Error {
public:
    using Error::Error;
};

/// Failure while evaluating a query (e.g. Int64 overflow).
class ExecutionError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (CSV, FBC).
class DataError : public Error {
public:
    using Error::Error;
};

/// External toolchain or dynamic loading failure.
class ToolchainError : public Error {
public:
    using Error::Error;
};

} // namespace flarelite
