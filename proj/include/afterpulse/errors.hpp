#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace afterpulse {

// Input outside the domain of a model or estimator (probability outside
// [0,1], singular denominator, ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// A numerical inversion has no solution for the given inputs.
class NoRootError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Data is statistically or structurally degenerate (zero denominators,
// empty windows, ...).
class DegenerateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or an input incompatible with the requested method.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

}  // namespace afterpulse
