#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sheetmax {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Expression text could not be parsed. `offset` is a byte offset into the input.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& message)
        : Error("syntax error at offset " + std::to_string(offset) + ": " + message),
          offset_(offset), detail_(message) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t offset_;
    std::string detail_;
};

/// Evaluation failed: unbound variable or a domain violation.
class EvalError : public Error {
public:
    using Error::Error;
};

/// A kernel, restriction or scenario failed one of its structural checks.
class ValidationError : public Error {
public:
    ValidationError(std::string check, const std::string& message)
        : Error(check + ": " + message), check_(std::move(check)) {}

    const std::string& check() const noexcept { return check_; }

private:
    std::string check_;
};

/// No closed-form reference exists for the requested problem.
class OracleInapplicable : public Error {
public:
    using Error::Error;
};

}  // namespace sheetmax
