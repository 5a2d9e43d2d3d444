#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace scytag {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Line and column are 1-based; zero means unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line = 0, std::size_t column = 0);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed input that violates a structural invariant (dangling reference,
/// arity clash, unbound head variable, bad identifier).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Environmental predicates needed by the rules but absent from every source.
class CompletionError : public Error {
public:
    explicit CompletionError(std::vector<std::string> predicates);
    const std::vector<std::string>& predicates() const noexcept { return predicates_; }

private:
    std::vector<std::string> predicates_;
};

/// The attack graph and the topology disagree about which hosts exist.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// No physical route exists for a required host pair, even in the full topology.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Processing cannot continue: missing template, missing ability, unresolved placeholder.
class AbortError : public Error {
public:
    using Error::Error;
};

class SchedulingError : public Error {
public:
    using Error::Error;
};

/// The twin backend itself is unavailable (distinct from a failed validation).
class InfrastructureError : public Error {
public:
    using Error::Error;
};

/// A metric whose denominator is empty or zero.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

} // namespace scytag
