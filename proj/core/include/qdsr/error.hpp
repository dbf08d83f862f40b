#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qdsr {

/// Malformed input text. `line` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::string const& what);
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// A configured size cap was exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Zero-variance data handed to a variance-normalized metric.
class DegenerateVarianceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace qdsr
