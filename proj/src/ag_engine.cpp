#include "scytag/ag_engine.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <unordered_map>

#include "lexer.hpp"
#include "scytag/error.hpp"
#include "scytag/topology.hpp"

namespace scytag {

namespace {

using detail::Token;
using detail::TokenKind;
using detail::TokenReader;

struct Label {
    int number = 0;
    std::string description;
    std::size_t line = 0;
};

std::optional<Label> read_label(const std::vector<Token>& comments) {
    static const std::regex pattern(R"(^\s*RULE\s+(\d+)\s*(?:\((.*)\))?\s*$)");
    for (auto it = comments.rbegin(); it != comments.rend(); ++it) {
        std::smatch m;
        if (std::regex_match(it->text, m, pattern)) return Label{std::stoi(m[1].str()), m[2].str(), it->line};
    }
    return std::nullopt;
}

std::set<std::string> variables_of(const Atom& atom) {
    std::set<std::string> out;
    for (const auto& t : atom.args) {
        if (t.is_variable()) out.insert(t.text);
    }
    return out;
}

} // namespace

RuleSet parse_rules(std::string_view text) {
    TokenReader reader(detail::tokenize(text));
    RuleSet out;
    std::vector<std::pair<Clause, std::size_t>> unlabeled;
    std::set<int> numbers;

    while (true) {
        const auto comments = reader.take_comments();
        if (reader.at_end()) break;
        const Token start = reader.peek();

        if (start.kind == TokenKind::identifier && start.text == "attackGoal") {
            reader.next();
            reader.expect(TokenKind::lparen, "'(' after attackGoal");
            out.goals.push_back(reader.read_atom());
            reader.expect(TokenKind::rparen, "')' closing attackGoal");
            reader.expect(TokenKind::dot, "'.'");
            continue;
        }

        Atom head = reader.read_atom();
        const Token sep = reader.next();
        if (sep.kind == TokenKind::dot) {
            if (!head.is_ground()) reader.fail(start, "fact is not ground: " + to_string(head));
            Fact fact{head.predicate, {}};
            for (auto& t : head.args) fact.args.push_back(std::move(t.text));
            out.facts.insert(std::move(fact));
            continue;
        }
        if (sep.kind != TokenKind::implies) reader.fail(sep, "expected ':-' or '.' after clause head");

        Clause clause;
        clause.head = std::move(head);
        while (true) {
            clause.body.push_back(reader.read_atom());
            const Token t = reader.next();
            if (t.kind == TokenKind::dot) break;
            if (t.kind != TokenKind::comma) reader.fail(t, "expected ',' or '.' in rule body");
        }

        std::set<std::string> bound;
        for (const auto& b : clause.body) bound.merge(variables_of(b));
        for (const auto& t : clause.head.args) {
            if (!t.is_variable()) continue;
            if (t.is_anonymous() || !bound.contains(t.text)) {
                throw ValidationError("line " + std::to_string(start.line) + ": head variable " + t.text + " of " +
                                      clause.head.predicate + " does not appear in the body");
            }
        }

        const auto label = read_label(comments);
        if (label && label->line + 1 == start.line) {
            if (!numbers.insert(label->number).second) {
                throw ValidationError("duplicate rule label RULE " + std::to_string(label->number));
            }
            clause.rule_number = label->number;
            clause.description = label->description;
            out.rules.push_back(std::move(clause));
        } else {
            unlabeled.emplace_back(std::move(clause), out.rules.size());
            out.rules.push_back({});
        }
    }

    int next = numbers.empty() ? 1 : *numbers.rbegin() + 1;
    for (auto& [clause, slot] : unlabeled) {
        clause.rule_number = next++;
        out.rules[slot] = std::move(clause);
    }
    return out;
}

std::string serialize_rules(const RuleSet& rules) {
    std::string out;
    for (const auto& c : rules.rules) {
        out += "% RULE " + std::to_string(c.rule_number);
        if (!c.description.empty()) out += " (" + c.description + ")";
        out += "\n" + to_string(c.head) + " :-\n";
        for (std::size_t i = 0; i < c.body.size(); ++i) {
            out += "    " + to_string(c.body[i]) + (i + 1 == c.body.size() ? ".\n" : ",\n");
        }
        out += "\n";
    }
    out += serialize_facts(rules.facts);
    for (const auto& g : rules.goals) out += "attackGoal(" + to_string(g) + ").\n";
    return out;
}

std::vector<std::string> environmental_predicates(const RuleSet& rules) {
    std::set<std::string> provided(topology_predicates().begin(), topology_predicates().end());
    provided.insert("vulExists");
    for (const auto& c : rules.rules) provided.insert(c.head.predicate);
    std::set<std::string> out;
    for (const auto& c : rules.rules) {
        for (const auto& b : c.body) {
            if (!provided.contains(b.predicate)) out.insert(b.predicate);
        }
    }
    return {out.begin(), out.end()};
}

FactBase complete_missing_facts(const RuleSet& rules, const FactBase& facts, const FactBase& assumptions) {
    FactBase out = facts;
    std::vector<std::string> missing;
    for (const auto& pred : environmental_predicates(rules)) {
        for (const auto& f : assumptions.with_predicate(pred)) out.insert(f);
        if (out.count(pred) == 0 && rules.facts.count(pred) == 0) missing.push_back(pred);
    }
    if (!missing.empty()) throw CompletionError(std::move(missing));
    return out;
}

namespace {

struct VecHash {
    std::size_t operator()(const std::vector<int>& v) const noexcept {
        std::size_t h = v.size();
        for (int x : v) h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }
};

/// A term in a compiled rule: a symbol id, or a variable slot when var >= 0.
struct Slot {
    int var = -1;
    int symbol = -1;
};

struct CompiledAtom {
    int predicate = 0;
    std::vector<Slot> args;
};

struct CompiledRule {
    CompiledAtom head;
    std::vector<CompiledAtom> body;
    int variables = 0;
    std::size_t source = 0;
};

struct Relation {
    std::size_t arity = 0;
    /// Global fact ids, appended round by round so ranks are nondecreasing.
    std::vector<int> rows;
    std::vector<std::unordered_map<int, std::vector<int>>> by_column;
};

struct Application {
    std::size_t rule = 0;
    int conclusion = 0;
    std::vector<int> premises;
};

class Engine {
public:
    Engine(const FactBase& facts, const RuleSet& rules) : rules_(rules) {
        for (const auto& f : facts) add_base(f);
        for (const auto& f : rules.facts) add_base(f);
        for (std::size_t i = 0; i < rules.rules.size(); ++i) compile(rules.rules[i], i);
    }

    void run() {
        for (int round = 1;; ++round) {
            const int delta = round - 1;
            for (const auto& rule : compiled_) {
                for (std::size_t d = 0; d < rule.body.size(); ++d) {
                    if (!has_rank(rule.body[d].predicate, delta)) continue;
                    std::vector<int> binding(rule.variables, -1);
                    std::vector<int> premises(rule.body.size(), -1);
                    join(rule, d, delta, round, 0, binding, premises);
                }
            }
            if (pending_.empty()) break;
            for (int id : pending_) {
                Relation& rel = relation(predicate_of_[id], tuples_[id].size());
                const int row = static_cast<int>(rel.rows.size());
                rel.rows.push_back(id);
                for (std::size_t c = 0; c < tuples_[id].size(); ++c) rel.by_column[c][tuples_[id][c]].push_back(row);
            }
            pending_.clear();
        }
    }

    Evaluation result() const {
        Evaluation out;
        for (std::size_t id = 0; id < tuples_.size(); ++id) out.model.insert(to_fact(static_cast<int>(id)));

        std::vector<int> goals;
        for (const auto& pattern : rules_.goals) {
            std::vector<int> hits;
            for (std::size_t id = 0; id < tuples_.size(); ++id) {
                if (rank_[id] > 0 && matches(pattern, to_fact(static_cast<int>(id)))) hits.push_back(static_cast<int>(id));
            }
            std::sort(hits.begin(), hits.end(), [&](int a, int b) { return to_fact(a) < to_fact(b); });
            for (int h : hits) {
                if (std::find(goals.begin(), goals.end(), h) == goals.end()) goals.push_back(h);
            }
        }
        if (goals.empty()) return out;

        std::map<int, std::vector<std::size_t>> apps_of;
        for (std::size_t i = 0; i < apps_.size(); ++i) apps_of[apps_[i].conclusion].push_back(i);
        for (auto& [atom, list] : apps_of) {
            std::vector<std::pair<std::pair<int, std::vector<std::string>>, std::size_t>> keyed;
            for (std::size_t a : list) {
                std::vector<std::string> texts;
                for (int p : apps_[a].premises) texts.push_back(to_string(to_fact(p)));
                keyed.push_back({{rules_.rules[apps_[a].rule].rule_number, std::move(texts)}, a});
            }
            std::sort(keyed.begin(), keyed.end());
            list.clear();
            for (auto& k : keyed) list.push_back(k.second);
        }

        std::vector<GraphNode> nodes;
        std::vector<std::pair<int, int>> edges;
        std::map<int, int> atom_node;
        int next = 1;
        std::function<int(int)> visit = [&](int atom) -> int {
            if (auto it = atom_node.find(atom); it != atom_node.end()) return it->second;
            const int id = next++;
            atom_node[atom] = id;
            auto found = apps_of.find(atom);
            GraphNode n;
            n.id = id;
            n.kind = found == apps_of.end() ? NodeKind::primitive : NodeKind::derived;
            n.fact = to_fact(atom);
            nodes.push_back(std::move(n));
            if (found == apps_of.end()) return id;
            for (std::size_t a : found->second) {
                const Application& app = apps_[a];
                const Clause& clause = rules_.rules[app.rule];
                GraphNode r;
                r.id = next++;
                r.kind = NodeKind::rule;
                r.rule_number = clause.rule_number;
                r.description = clause.description;
                const int rid = r.id;
                nodes.push_back(std::move(r));
                edges.emplace_back(rid, id);
                for (int p : app.premises) edges.emplace_back(visit(p), rid);
            }
            return id;
        };
        std::vector<int> goal_ids;
        for (int g : goals) goal_ids.push_back(visit(g));

        out.graph = DerivationGraph(std::move(nodes), std::move(edges), std::move(goal_ids));
        return out;
    }

private:
    int intern(const std::string& s) {
        auto [it, fresh] = symbol_ids_.emplace(s, static_cast<int>(symbols_.size()));
        if (fresh) symbols_.push_back(s);
        return it->second;
    }

    int predicate_id(const std::string& name) {
        auto [it, fresh] = predicate_ids_.emplace(name, static_cast<int>(predicates_.size()));
        if (fresh) {
            predicates_.push_back(name);
            relations_.emplace_back();
        }
        return it->second;
    }

    Relation& relation(int predicate, std::size_t arity) {
        Relation& rel = relations_[static_cast<std::size_t>(predicate)];
        if (rel.by_column.empty() && rel.rows.empty()) {
            rel.arity = arity;
            rel.by_column.resize(arity);
        }
        return rel;
    }

    Fact to_fact(int id) const {
        Fact f{predicates_[static_cast<std::size_t>(predicate_of_[id])], {}};
        for (int s : tuples_[id]) f.args.push_back(symbols_[static_cast<std::size_t>(s)]);
        return f;
    }

    void add_base(const Fact& f) {
        const int pred = predicate_id(f.predicate);
        std::vector<int> tuple;
        for (const auto& a : f.args) tuple.push_back(intern(a));
        std::vector<int> key = tuple;
        key.insert(key.begin(), pred);
        if (lookup_.contains(key)) return;
        const int id = static_cast<int>(tuples_.size());
        lookup_.emplace(std::move(key), id);
        tuples_.push_back(tuple);
        predicate_of_.push_back(pred);
        rank_.push_back(0);
        Relation& rel = relation(pred, tuple.size());
        if (rel.arity != tuple.size()) throw ValidationError("arity clash for predicate " + f.predicate);
        const int row = static_cast<int>(rel.rows.size());
        rel.rows.push_back(id);
        for (std::size_t c = 0; c < tuple.size(); ++c) rel.by_column[c][tuple[c]].push_back(row);
    }

    void compile(const Clause& clause, std::size_t source) {
        std::map<std::string, int> vars;
        CompiledRule out;
        out.source = source;
        auto compile_atom = [&](const Atom& a) {
            CompiledAtom c;
            c.predicate = predicate_id(a.predicate);
            for (const auto& t : a.args) {
                Slot s;
                if (t.is_anonymous()) {
                    // wildcard: neither var nor symbol
                } else if (t.is_variable()) {
                    s.var = vars.emplace(t.text, static_cast<int>(vars.size())).first->second;
                } else {
                    s.symbol = intern(t.text);
                }
                c.args.push_back(s);
            }
            return c;
        };
        for (const auto& b : clause.body) out.body.push_back(compile_atom(b));
        out.head = compile_atom(clause.head);
        out.variables = static_cast<int>(vars.size());
        compiled_.push_back(std::move(out));
    }

    bool has_rank(int predicate, int rank) const {
        const Relation& rel = relations_[static_cast<std::size_t>(predicate)];
        return !rel.rows.empty() && rank_[static_cast<std::size_t>(rel.rows.back())] == rank;
    }

    void join(const CompiledRule& rule, std::size_t delta_pos, int delta, int round, std::size_t i,
              std::vector<int>& binding, std::vector<int>& premises) {
        if (i == rule.body.size()) {
            derive(rule, round, binding, premises);
            return;
        }
        const CompiledAtom& atom = rule.body[i];
        const Relation& rel = relations_[static_cast<std::size_t>(atom.predicate)];
        if (rel.rows.empty() || rel.arity != atom.args.size()) return;

        const std::vector<int>* candidates = nullptr;
        for (std::size_t c = 0; c < atom.args.size(); ++c) {
            const Slot& s = atom.args[c];
            const int value = s.var >= 0 ? binding[static_cast<std::size_t>(s.var)] : s.symbol;
            if (value < 0) continue;
            auto it = rel.by_column[c].find(value);
            if (it == rel.by_column[c].end()) return;
            if (!candidates || it->second.size() < candidates->size()) candidates = &it->second;
        }

        auto visit_row = [&](int row) {
            const int id = rel.rows[static_cast<std::size_t>(row)];
            const int r = rank_[static_cast<std::size_t>(id)];
            if (i < delta_pos ? r >= delta : i == delta_pos ? r != delta : r > delta) return;
            const auto& tuple = tuples_[static_cast<std::size_t>(id)];
            std::vector<int> assigned;
            bool ok = true;
            for (std::size_t c = 0; c < atom.args.size() && ok; ++c) {
                const Slot& s = atom.args[c];
                if (s.var >= 0) {
                    int& b = binding[static_cast<std::size_t>(s.var)];
                    if (b < 0) {
                        b = tuple[c];
                        assigned.push_back(s.var);
                    } else if (b != tuple[c]) {
                        ok = false;
                    }
                } else if (s.symbol >= 0 && s.symbol != tuple[c]) {
                    ok = false;
                }
            }
            if (ok) {
                premises[i] = id;
                join(rule, delta_pos, delta, round, i + 1, binding, premises);
            }
            for (int v : assigned) binding[static_cast<std::size_t>(v)] = -1;
        };

        if (candidates) {
            for (int row : *candidates) visit_row(row);
        } else {
            for (std::size_t row = 0; row < rel.rows.size(); ++row) visit_row(static_cast<int>(row));
        }
    }

    void derive(const CompiledRule& rule, int round, const std::vector<int>& binding, const std::vector<int>& premises) {
        std::vector<int> key;
        key.reserve(rule.head.args.size() + 1);
        key.push_back(rule.head.predicate);
        for (const Slot& s : rule.head.args) key.push_back(s.var >= 0 ? binding[static_cast<std::size_t>(s.var)] : s.symbol);

        int id;
        if (auto it = lookup_.find(key); it != lookup_.end()) {
            id = it->second;
            if (rank_[static_cast<std::size_t>(id)] < round) return;
        } else {
            Relation& rel = relation(rule.head.predicate, rule.head.args.size());
            if (rel.arity != rule.head.args.size()) {
                throw ValidationError("arity clash for predicate " + predicates_[static_cast<std::size_t>(rule.head.predicate)]);
            }
            id = static_cast<int>(tuples_.size());
            tuples_.emplace_back(key.begin() + 1, key.end());
            predicate_of_.push_back(rule.head.predicate);
            rank_.push_back(round);
            lookup_.emplace(std::move(key), id);
            pending_.push_back(id);
        }
        apps_.push_back({rule.source, id, premises});
    }

    const RuleSet& rules_;
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, int> symbol_ids_;
    std::vector<std::string> predicates_;
    std::unordered_map<std::string, int> predicate_ids_;
    std::vector<Relation> relations_;
    std::vector<CompiledRule> compiled_;

    std::vector<std::vector<int>> tuples_;
    std::vector<int> predicate_of_;
    std::vector<int> rank_;
    std::unordered_map<std::vector<int>, int, VecHash> lookup_;
    std::vector<int> pending_;
    std::vector<Application> apps_;
};

} // namespace

Evaluation evaluate_program(const FactBase& facts, const RuleSet& rules) {
    Engine engine(facts, rules);
    engine.run();
    return engine.result();
}

namespace {

struct Partial {
    std::map<int, int> choices;
    int depth = 0;
};

class PathEnumerator {
public:
    PathEnumerator(const DerivationGraph& graph, std::size_t limit) : graph_(graph), limit_(limit) {}

    const std::vector<Partial>& partials(int atom) {
        if (auto it = memo_.find(atom); it != memo_.end()) return it->second;
        std::vector<Partial> out;
        if (graph_.node(atom).kind == NodeKind::primitive) {
            out.push_back({});
            return memo_.emplace(atom, std::move(out)).first->second;
        }
        if (!on_stack_.insert(atom).second) return empty_;
        for (int rule : graph_.derivations(atom)) {
            std::vector<Partial> combos(1);
            bool cyclic = false;
            for (int p : graph_.premises(rule)) {
                if (on_stack_.contains(p)) {
                    cyclic = true;
                    break;
                }
                const auto& sub = partials(p);
                std::vector<Partial> merged;
                for (const auto& c : combos) {
                    for (const auto& s : sub) {
                        if (merged.size() >= limit_) break;
                        Partial m = c;
                        bool clash = false;
                        for (const auto& [a, r] : s.choices) {
                            auto [it, fresh] = m.choices.emplace(a, r);
                            if (!fresh && it->second != r) {
                                clash = true;
                                break;
                            }
                        }
                        if (clash) continue;
                        m.depth = std::max(m.depth, s.depth);
                        merged.push_back(std::move(m));
                    }
                }
                combos = std::move(merged);
                if (combos.empty()) break;
            }
            if (cyclic) continue;
            for (auto& c : combos) {
                if (out.size() >= limit_) break;
                auto [it, fresh] = c.choices.emplace(atom, rule);
                if (!fresh && it->second != rule) continue;
                c.depth += 1;
                out.push_back(std::move(c));
            }
        }
        on_stack_.erase(atom);
        return memo_.emplace(atom, std::move(out)).first->second;
    }

    std::vector<int> steps(int goal, const std::map<int, int>& choices) const {
        std::vector<int> out;
        std::set<int> seen;
        std::function<void(int)> walk = [&](int atom) {
            if (!seen.insert(atom).second) return;
            auto it = choices.find(atom);
            if (it == choices.end()) return;
            for (int p : graph_.premises(it->second)) walk(p);
            out.push_back(atom);
        };
        walk(goal);
        return out;
    }

private:
    const DerivationGraph& graph_;
    std::size_t limit_;
    std::map<int, std::vector<Partial>> memo_;
    std::set<int> on_stack_;
    const std::vector<Partial> empty_;
};

} // namespace

std::vector<AttackPath> enumerate_attack_paths(const DerivationGraph& graph, std::size_t limit) {
    std::vector<AttackPath> out;
    if (graph.empty() || limit == 0) return out;
    PathEnumerator enumerator(graph, limit);
    for (int goal : graph.goals()) {
        for (const auto& partial : enumerator.partials(goal)) {
            AttackPath path;
            path.goal = goal;
            path.steps = enumerator.steps(goal, partial.choices);
            for (int atom : path.steps) path.choices.emplace_back(atom, partial.choices.at(atom));
            path.hops = partial.depth;
            out.push_back(std::move(path));
        }
    }
    auto key = [](const AttackPath& p) {
        std::vector<int> rules;
        for (const auto& c : p.choices) rules.push_back(c.second);
        return std::tuple(p.hops, rules, p.goal);
    };
    std::stable_sort(out.begin(), out.end(), [&](const AttackPath& a, const AttackPath& b) { return key(a) < key(b); });
    if (out.size() > limit) out.resize(limit);
    return out;
}

} // namespace scytag
