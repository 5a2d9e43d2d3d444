#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace scytag {

/// A Datalog term. Variables start with an uppercase letter or underscore.
struct Term {
    enum class Kind { constant, variable };

    Kind kind = Kind::constant;
    std::string text;

    static Term constant(std::string text) { return {Kind::constant, std::move(text)}; }
    static Term variable(std::string text) { return {Kind::variable, std::move(text)}; }

    bool is_variable() const noexcept { return kind == Kind::variable; }
    /// `_` and `_Name` never bind.
    bool is_anonymous() const noexcept { return is_variable() && !text.empty() && text.front() == '_'; }

    auto operator<=>(const Term&) const = default;
};

/// Predicate applied to terms; may contain variables (rule bodies, goal patterns).
struct Atom {
    std::string predicate;
    std::vector<Term> args;

    bool is_ground() const noexcept;
    auto operator<=>(const Atom&) const = default;
};

/// Ground atom. Ordering is predicate name, then arguments lexicographically.
struct Fact {
    std::string predicate;
    std::vector<std::string> args;

    auto operator<=>(const Fact&) const = default;
};

/// True when `text` can be written without quotes: lowercase letter first, then
/// letters, digits or underscores.
bool is_plain_constant(std::string_view text) noexcept;

/// Canonical spelling of a constant; anything that is not a plain identifier
/// is single-quoted.
std::string format_constant(std::string_view text);

std::string to_string(const Fact& fact);
std::string to_string(const Atom& atom);

Atom to_atom(const Fact& fact);

/// True when `pattern` unifies with `fact`. Variables are wildcards, repeated
/// named variables must agree.
bool matches(const Atom& pattern, const Fact& fact);

/// Ordered set of ground facts with a fixed arity per predicate.
class FactBase {
public:
    using const_iterator = std::set<Fact>::const_iterator;

    FactBase() = default;

    /// Returns true if the fact was not present. Throws ValidationError when
    /// the arity differs from earlier facts of the same predicate.
    bool insert(Fact fact);
    void merge(const FactBase& other);

    bool contains(const Fact& fact) const { return facts_.contains(fact); }
    std::size_t size() const noexcept { return facts_.size(); }
    bool empty() const noexcept { return facts_.empty(); }

    const_iterator begin() const noexcept { return facts_.begin(); }
    const_iterator end() const noexcept { return facts_.end(); }

    std::vector<Fact> with_predicate(std::string_view predicate) const;
    std::set<std::string> predicates() const;
    std::size_t count(std::string_view predicate) const;

    bool operator==(const FactBase& other) const { return facts_ == other.facts_; }

private:
    std::set<Fact> facts_;
    std::map<std::string, std::size_t, std::less<>> arity_;
};

/// Parses fact text: one `pred(a,...).` clause per statement, `%` comments.
/// Throws ParseError with line/column on syntax errors or non-ground clauses.
FactBase parse_fact_text(std::string_view text);

/// One fact per line in canonical order; parse_fact_text inverts it.
std::string serialize_facts(const FactBase& facts);

/// Parses a single atom such as `hacl(a,b,tcp,'22')`. Variables are allowed.
Atom parse_atom(std::string_view text);

} // namespace scytag
