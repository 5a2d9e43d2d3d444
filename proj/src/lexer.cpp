#include "lexer.hpp"

#include <cctype>

#include "scytag/error.hpp"

namespace scytag::detail {

namespace {

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

const char* kind_name(TokenKind kind) {
    switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::variable: return "variable";
    case TokenKind::quoted: return "quoted constant";
    case TokenKind::number: return "number";
    case TokenKind::lparen: return "'('";
    case TokenKind::rparen: return "')'";
    case TokenKind::comma: return "','";
    case TokenKind::dot: return "'.'";
    case TokenKind::implies: return "':-'";
    case TokenKind::comment: return "comment";
    case TokenKind::end: return "end of input";
    }
    return "token";
}

} // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t line = 1;
    std::size_t col = 1;
    std::size_t i = 0;

    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };

    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        const std::size_t tl = line;
        const std::size_t tc = col;
        if (c == '%') {
            std::size_t j = i + 1;
            while (j < text.size() && text[j] != '\n') ++j;
            out.push_back({TokenKind::comment, std::string(text.substr(i + 1, j - i - 1)), tl, tc});
            advance(j - i);
            continue;
        }
        if (c == '(' || c == ')' || c == ',' || c == '.') {
            const TokenKind k = c == '(' ? TokenKind::lparen
                              : c == ')' ? TokenKind::rparen
                              : c == ',' ? TokenKind::comma
                                         : TokenKind::dot;
            out.push_back({k, std::string(1, c), tl, tc});
            advance(1);
            continue;
        }
        if (c == ':' && i + 1 < text.size() && text[i + 1] == '-') {
            out.push_back({TokenKind::implies, ":-", tl, tc});
            advance(2);
            continue;
        }
        if (c == '\'') {
            std::string value;
            std::size_t j = i + 1;
            bool closed = false;
            while (j < text.size()) {
                if (text[j] == '\\' && j + 1 < text.size()) {
                    value.push_back(text[j + 1]);
                    j += 2;
                    continue;
                }
                if (text[j] == '\'') {
                    closed = true;
                    break;
                }
                if (text[j] == '\n') break;
                value.push_back(text[j]);
                ++j;
            }
            if (!closed) throw ParseError("unterminated quoted constant", tl, tc);
            out.push_back({TokenKind::quoted, std::move(value), tl, tc});
            advance(j + 1 - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            out.push_back({TokenKind::number, std::string(text.substr(i, j - i)), tl, tc});
            advance(j - i);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() && ident_char(text[j])) ++j;
            const bool var = std::isupper(static_cast<unsigned char>(c)) || c == '_';
            out.push_back({var ? TokenKind::variable : TokenKind::identifier, std::string(text.substr(i, j - i)), tl, tc});
            advance(j - i);
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", tl, tc);
    }
    out.push_back({TokenKind::end, "", line, col});
    return out;
}

void TokenReader::skip_comments() {
    while (tokens_[pos_].kind == TokenKind::comment) ++pos_;
}

const Token& TokenReader::peek() {
    skip_comments();
    return tokens_[pos_];
}

const Token& TokenReader::next() {
    skip_comments();
    const Token& t = tokens_[pos_];
    if (t.kind != TokenKind::end) ++pos_;
    return t;
}

bool TokenReader::at_end() { return peek().kind == TokenKind::end; }

std::vector<Token> TokenReader::take_comments() {
    std::vector<Token> out;
    while (tokens_[pos_].kind == TokenKind::comment) out.push_back(tokens_[pos_++]);
    return out;
}

void TokenReader::fail(const Token& at, const std::string& message) const {
    throw ParseError(message, at.line, at.column);
}

Token TokenReader::expect(TokenKind kind, std::string_view what) {
    const Token t = next();
    if (t.kind != kind) {
        fail(t, "expected " + std::string(what) + ", found " + kind_name(t.kind) +
                    (t.text.empty() ? "" : " '" + t.text + "'"));
    }
    return t;
}

Term TokenReader::read_term() {
    const Token t = next();
    switch (t.kind) {
    case TokenKind::identifier:
    case TokenKind::quoted:
    case TokenKind::number:
        if (t.text.empty()) fail(t, "empty constant");
        return Term::constant(t.text);
    case TokenKind::variable:
        return Term::variable(t.text);
    default:
        fail(t, std::string("expected a term, found ") + kind_name(t.kind));
    }
}

Atom TokenReader::read_atom() {
    const Token name = next();
    if (name.kind != TokenKind::identifier) {
        fail(name, std::string("expected a predicate name, found ") + kind_name(name.kind));
    }
    Atom atom{name.text, {}};
    if (peek().kind == TokenKind::lparen) {
        next();
        if (peek().kind == TokenKind::rparen) fail(peek(), "empty argument list");
        while (true) {
            atom.args.push_back(read_term());
            const Token sep = next();
            if (sep.kind == TokenKind::rparen) break;
            if (sep.kind != TokenKind::comma) fail(sep, "expected ',' or ')' in argument list");
        }
    }
    return atom;
}

} // namespace scytag::detail
