#include "scytag/error.hpp"

namespace scytag {

namespace {

std::string located(const std::string& message, std::size_t line, std::size_t column) {
    if (line == 0) return message;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
}

std::string joined(const std::vector<std::string>& names) {
    std::string out = "unresolved environmental predicates:";
    for (const auto& n : names) out += " " + n;
    return out;
}

} // namespace

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : Error(located(message, line, column)), line_(line), column_(column) {}

CompletionError::CompletionError(std::vector<std::string> predicates)
    : Error(joined(predicates)), predicates_(std::move(predicates)) {}

} // namespace scytag
