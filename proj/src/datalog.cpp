#include "scytag/datalog.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "lexer.hpp"
#include "scytag/error.hpp"

namespace scytag {

bool Atom::is_ground() const noexcept {
    return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

bool is_plain_constant(std::string_view text) noexcept {
    if (text.empty() || !std::islower(static_cast<unsigned char>(text.front()))) return false;
    return std::all_of(text.begin(), text.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

std::string format_constant(std::string_view text) {
    if (is_plain_constant(text)) return std::string(text);
    std::string out = "'";
    for (char c : text) {
        if (c == '\'' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

std::string to_string(const Fact& fact) {
    std::string out = fact.predicate;
    if (fact.args.empty()) return out;
    out.push_back('(');
    for (std::size_t i = 0; i < fact.args.size(); ++i) {
        if (i) out.push_back(',');
        out += format_constant(fact.args[i]);
    }
    out.push_back(')');
    return out;
}

std::string to_string(const Atom& atom) {
    std::string out = atom.predicate;
    if (atom.args.empty()) return out;
    out.push_back('(');
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
        if (i) out.push_back(',');
        const Term& t = atom.args[i];
        out += t.is_variable() ? t.text : format_constant(t.text);
    }
    out.push_back(')');
    return out;
}

Atom to_atom(const Fact& fact) {
    Atom atom{fact.predicate, {}};
    atom.args.reserve(fact.args.size());
    for (const auto& a : fact.args) atom.args.push_back(Term::constant(a));
    return atom;
}

bool matches(const Atom& pattern, const Fact& fact) {
    if (pattern.predicate != fact.predicate || pattern.args.size() != fact.args.size()) return false;
    std::map<std::string_view, std::string_view> bound;
    for (std::size_t i = 0; i < fact.args.size(); ++i) {
        const Term& t = pattern.args[i];
        if (!t.is_variable()) {
            if (t.text != fact.args[i]) return false;
        } else if (!t.is_anonymous()) {
            auto [it, fresh] = bound.emplace(t.text, fact.args[i]);
            if (!fresh && it->second != fact.args[i]) return false;
        }
    }
    return true;
}

bool FactBase::insert(Fact fact) {
    auto it = arity_.find(fact.predicate);
    if (it == arity_.end()) {
        arity_.emplace(fact.predicate, fact.args.size());
    } else if (it->second != fact.args.size()) {
        throw ValidationError("arity clash for predicate " + fact.predicate + ": " +
                              std::to_string(it->second) + " vs " + std::to_string(fact.args.size()));
    }
    return facts_.insert(std::move(fact)).second;
}

void FactBase::merge(const FactBase& other) {
    for (const auto& f : other) insert(f);
}

std::vector<Fact> FactBase::with_predicate(std::string_view predicate) const {
    std::vector<Fact> out;
    auto it = facts_.lower_bound(Fact{std::string(predicate), {}});
    for (; it != facts_.end() && it->predicate == predicate; ++it) out.push_back(*it);
    return out;
}

std::set<std::string> FactBase::predicates() const {
    std::set<std::string> out;
    for (const auto& [name, arity] : arity_) out.insert(name);
    return out;
}

std::size_t FactBase::count(std::string_view predicate) const {
    std::size_t n = 0;
    auto it = facts_.lower_bound(Fact{std::string(predicate), {}});
    for (; it != facts_.end() && it->predicate == predicate; ++it) ++n;
    return n;
}

FactBase parse_fact_text(std::string_view text) {
    detail::TokenReader reader(detail::tokenize(text));
    FactBase out;
    while (!reader.at_end()) {
        const detail::Token start = reader.peek();
        Atom atom = reader.read_atom();
        if (!atom.is_ground()) reader.fail(start, "fact is not ground: " + to_string(atom));
        reader.expect(detail::TokenKind::dot, "'.'");
        Fact fact{std::move(atom.predicate), {}};
        for (auto& t : atom.args) fact.args.push_back(std::move(t.text));
        try {
            out.insert(std::move(fact));
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), start.line, start.column);
        }
    }
    return out;
}

std::string serialize_facts(const FactBase& facts) {
    std::string out;
    for (const auto& f : facts) {
        out += to_string(f);
        out += ".\n";
    }
    return out;
}

Atom parse_atom(std::string_view text) {
    detail::TokenReader reader(detail::tokenize(text));
    Atom atom = reader.read_atom();
    if (reader.peek().kind == detail::TokenKind::dot) reader.next();
    if (!reader.at_end()) reader.fail(reader.peek(), "trailing input after atom");
    return atom;
}

} // namespace scytag
