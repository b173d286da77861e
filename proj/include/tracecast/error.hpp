#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tracecast {

// Every failure mode the library reports. The CLI maps these to
// machine-readable error kinds and a nonzero exit code.
enum class ErrorKind {
    ArgumentError,
    ParseError,
    DegenerateFit,
    SearchFailed,
    Divergence,
    ContractViolation,
    IoError,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

// Malformed input text; carries the 1-based line number of the offending row.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& message)
        : Error(ErrorKind::ParseError,
                "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

}  // namespace tracecast
