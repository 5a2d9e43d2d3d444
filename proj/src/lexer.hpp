#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "scytag/datalog.hpp"

namespace scytag::detail {

enum class TokenKind { identifier, variable, quoted, number, lparen, rparen, comma, dot, implies, comment, end };

struct Token {
    TokenKind kind;
    std::string text;
    std::size_t line;
    std::size_t column;
};

/// Splits Datalog text into tokens. Comments are kept as tokens so the rule
/// parser can read `% RULE k (...)` labels.
std::vector<Token> tokenize(std::string_view text);

/// Recursive-descent reader over a token stream; skips comments unless asked.
class TokenReader {
public:
    explicit TokenReader(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    const Token& peek();
    const Token& next();
    bool at_end();
    /// Pops and returns pending comment tokens before the next real token.
    std::vector<Token> take_comments();

    Token expect(TokenKind kind, std::string_view what);
    Term read_term();
    Atom read_atom();

    [[noreturn]] void fail(const Token& at, const std::string& message) const;

private:
    void skip_comments();

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

} // namespace scytag::detail
