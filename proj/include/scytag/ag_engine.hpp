#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "scytag/datalog.hpp"
#include "scytag/derivation_graph.hpp"

namespace scytag {

struct Clause {
    Atom head;
    std::vector<Atom> body;
    int rule_number = 0;
    std::string description;
};

struct RuleSet {
    /// Clauses with a nonempty body.
    std::vector<Clause> rules;
    /// attackGoal directives; patterns may contain variables.
    std::vector<Atom> goals;
    /// Zero-body clauses found in the rules text.
    FactBase facts;
};

/// Reads `head :- b1, ..., bn.` clauses. A `% RULE k (text)` comment on the
/// line before a clause labels it; unlabeled clauses are numbered after the
/// highest explicit label. Throws ParseError on syntax errors and
/// ValidationError on duplicate labels or head variables missing from the body.
RuleSet parse_rules(std::string_view text);

/// Rules text that parse_rules reads back to the same RuleSet.
std::string serialize_rules(const RuleSet& rules);

/// Body predicates that no source is expected to provide: not a wiring
/// predicate, not vulExists, and not the head of any rule.
std::vector<std::string> environmental_predicates(const RuleSet& rules);

/// Adds every assumption atom of an environmental predicate. Throws
/// CompletionError listing the predicates that still have no atom.
FactBase complete_missing_facts(const RuleSet& rules, const FactBase& facts, const FactBase& assumptions);

struct Evaluation {
    /// Least fixpoint: base facts, rule-file facts and every derived atom.
    FactBase model;
    /// Goal-supporting derivations; empty when no goal is derivable.
    DerivationGraph graph;
};

/// Semi-naive bottom-up evaluation. Every rule application whose conclusion
/// is first derived in that round is recorded, so each derived atom keeps all
/// of its shallowest derivations and the graph is acyclic.
Evaluation evaluate_program(const FactBase& facts, const RuleSet& rules);

inline DerivationGraph evaluate(const FactBase& facts, const RuleSet& rules) {
    return evaluate_program(facts, rules).graph;
}

struct AttackPath {
    int goal = 0;
    /// Rule application chosen for each derived atom, as (atom, rule node).
    std::vector<std::pair<int, int>> choices;
    /// Derived atoms in derivation order (premises before conclusions).
    std::vector<int> steps;
    /// Longest chain of derived atoms from a primitive to the goal.
    int hops = 0;
};

/// Minimal AND-subtrees, one rule application per derived atom, sorted by hop
/// count and then by the rule nodes chosen. At most `limit` paths are returned.
std::vector<AttackPath> enumerate_attack_paths(const DerivationGraph& graph, std::size_t limit = 4096);

} // namespace scytag
