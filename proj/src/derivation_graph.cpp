#include "scytag/derivation_graph.hpp"

#include <algorithm>
#include <climits>
#include <set>

#include "json.hpp"
#include "scytag/error.hpp"

namespace scytag {

using nlohmann::json;

namespace {

const std::vector<int> no_ids;

Fact renamed(const Fact& fact, const std::map<std::string, std::string>& rename) {
    if (rename.empty()) return fact;
    Fact out = fact;
    for (auto& a : out.args) {
        if (auto it = rename.find(a); it != rename.end()) a = it->second;
    }
    return out;
}

} // namespace

std::string_view to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::primitive: return "primitive";
    case NodeKind::rule: return "rule";
    case NodeKind::derived: return "derived";
    }
    return "primitive";
}

std::string GraphNode::label() const {
    if (kind != NodeKind::rule) return scytag::to_string(fact);
    std::string out = "RULE " + std::to_string(rule_number);
    if (!description.empty()) out += " (" + description + ")";
    return out;
}

DerivationGraph::DerivationGraph(std::vector<GraphNode> nodes, std::vector<std::pair<int, int>> edges,
                                 std::vector<int> goals)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), goals_(std::move(goals)) {
    std::sort(nodes_.begin(), nodes_.end(), [](const GraphNode& a, const GraphNode& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const GraphNode& n = nodes_[i];
        if (n.id <= 0) throw ValidationError("graph node ids must be positive, got " + std::to_string(n.id));
        if (!index_.emplace(n.id, i).second) throw ValidationError("duplicate graph node id " + std::to_string(n.id));
        if (n.is_atom()) {
            if (n.fact.predicate.empty()) throw ValidationError("graph node " + std::to_string(n.id) + " has no atom");
            if (!atom_ids_.emplace(n.fact, n.id).second) {
                throw ValidationError("atom " + scytag::to_string(n.fact) + " appears twice in the graph");
            }
        }
    }

    std::set<std::pair<int, int>> seen_edges;
    for (const auto& [from, to] : edges_) {
        if (!seen_edges.insert({from, to}).second) continue;
        if (!contains(from) || !contains(to)) {
            throw ValidationError("edge " + std::to_string(from) + "->" + std::to_string(to) + " references an unknown node");
        }
        const GraphNode& a = node(from);
        const GraphNode& b = node(to);
        if (a.is_atom() == b.is_atom()) {
            throw ValidationError("edge " + std::to_string(from) + "->" + std::to_string(to) +
                                  " must join an atom and a rule application");
        }
        if (a.is_atom()) {
            premises_[to].push_back(from);
            consumers_[from].push_back(to);
        } else {
            if (b.kind != NodeKind::derived) {
                throw ValidationError("rule node " + std::to_string(from) + " concludes non-derived node " + std::to_string(to));
            }
            if (!conclusion_.emplace(from, to).second) {
                throw ValidationError("rule node " + std::to_string(from) + " has more than one conclusion");
            }
            derivations_[to].push_back(from);
        }
    }
    for (const auto& n : nodes_) {
        if (n.kind == NodeKind::rule && !conclusion_.contains(n.id)) {
            throw ValidationError("rule node " + std::to_string(n.id) + " has no conclusion");
        }
        if (n.kind == NodeKind::derived && !derivations_.contains(n.id)) {
            throw ValidationError("derived node " + std::to_string(n.id) + " has no rule application");
        }
    }
    edges_.assign(seen_edges.begin(), seen_edges.end());
    std::vector<int> unique_goals;
    for (int g : goals_) {
        if (!contains(g) || !node(g).is_atom()) throw ValidationError("goal " + std::to_string(g) + " is not an atom node");
        if (std::find(unique_goals.begin(), unique_goals.end(), g) == unique_goals.end()) unique_goals.push_back(g);
    }
    goals_ = std::move(unique_goals);
}

const GraphNode& DerivationGraph::node(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("no graph node " + std::to_string(id));
    return nodes_[it->second];
}

int DerivationGraph::find_atom(const Fact& fact) const {
    auto it = atom_ids_.find(fact);
    return it == atom_ids_.end() ? 0 : it->second;
}

const std::vector<int>& DerivationGraph::derivations(int atom_id) const {
    auto it = derivations_.find(atom_id);
    return it == derivations_.end() ? no_ids : it->second;
}

const std::vector<int>& DerivationGraph::premises(int rule_id) const {
    auto it = premises_.find(rule_id);
    return it == premises_.end() ? no_ids : it->second;
}

int DerivationGraph::conclusion(int rule_id) const {
    auto it = conclusion_.find(rule_id);
    return it == conclusion_.end() ? 0 : it->second;
}

const std::vector<int>& DerivationGraph::consumers(int atom_id) const {
    auto it = consumers_.find(atom_id);
    return it == consumers_.end() ? no_ids : it->second;
}

std::size_t DerivationGraph::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [kind](const GraphNode& n) { return n.kind == kind; }));
}

std::map<int, int> DerivationGraph::depths() const {
    std::map<int, int> depth;
    for (const auto& n : nodes_) {
        if (n.kind == NodeKind::primitive) depth[n.id] = 0;
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& n : nodes_) {
            if (n.kind != NodeKind::derived) continue;
            int best = INT_MAX;
            for (int r : derivations(n.id)) {
                int deepest = 0;
                bool ready = true;
                for (int p : premises(r)) {
                    auto it = depth.find(p);
                    if (it == depth.end()) {
                        ready = false;
                        break;
                    }
                    deepest = std::max(deepest, it->second);
                }
                if (ready) best = std::min(best, deepest + 1);
            }
            if (best == INT_MAX) continue;
            auto it = depth.find(n.id);
            if (it == depth.end() || best < it->second) {
                depth[n.id] = best;
                changed = true;
            }
        }
    }
    return depth;
}

int DerivationGraph::critical_hops() const {
    const auto depth = depths();
    int best = 0;
    for (int g : goals_) {
        auto it = depth.find(g);
        if (it != depth.end() && (best == 0 || it->second < best)) best = it->second;
    }
    return best;
}

bool DerivationGraph::operator==(const DerivationGraph& other) const {
    if (nodes_.size() != other.nodes_.size() || edges_ != other.edges_ || goals_ != other.goals_ ||
        premises_ != other.premises_) {
        return false;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const GraphNode& a = nodes_[i];
        const GraphNode& b = other.nodes_[i];
        if (a.id != b.id || a.kind != b.kind || a.fact != b.fact || a.rule_number != b.rule_number ||
            a.description != b.description) {
            return false;
        }
    }
    return true;
}

std::string to_listing(const DerivationGraph& graph) {
    std::string out;
    for (const auto& n : graph.nodes()) {
        const std::string id = std::to_string(n.id);
        switch (n.kind) {
        case NodeKind::derived: out += "<" + id + ">:"; break;
        case NodeKind::rule: out += "(" + id + "):"; break;
        case NodeKind::primitive: out += "[" + id + "]:"; break;
        }
        out += n.label();
        out += '\n';
    }
    return out;
}

std::string to_json(const DerivationGraph& graph) {
    json nodes = json::array();
    for (const auto& n : graph.nodes()) {
        json o;
        o["id"] = n.id;
        o["kind"] = std::string(to_string(n.kind));
        if (n.kind == NodeKind::rule) {
            o["rule"] = n.rule_number;
            o["description"] = n.description;
        } else {
            o["atom"] = to_string(n.fact);
        }
        nodes.push_back(std::move(o));
    }
    // Premise edges in body order, then conclusion edges, so premise order survives a round trip.
    json edges = json::array();
    for (const auto& n : graph.nodes()) {
        if (n.kind != NodeKind::rule) continue;
        for (int p : graph.premises(n.id)) edges.push_back(json::array({p, n.id}));
        edges.push_back(json::array({n.id, graph.conclusion(n.id)}));
    }
    json doc;
    doc["nodes"] = std::move(nodes);
    doc["edges"] = std::move(edges);
    doc["goals"] = graph.goals();
    return doc.dump(1) + "\n";
}

DerivationGraph parse_graph_json(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("graph: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
        throw ParseError("graph: expected object with a nodes array");
    }
    std::vector<GraphNode> nodes;
    for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
        const json& o = doc["nodes"][i];
        const std::string where = "nodes[" + std::to_string(i) + "]";
        if (!o.is_object() || !o.contains("id") || !o["id"].is_number_integer() || !o.contains("kind") ||
            !o["kind"].is_string()) {
            throw ParseError(where + ": expected {id, kind, ...}");
        }
        GraphNode n;
        n.id = o["id"].get<int>();
        const std::string kind = o["kind"].get<std::string>();
        if (kind == "rule") {
            n.kind = NodeKind::rule;
            if (!o.contains("rule") || !o["rule"].is_number_integer()) throw ParseError(where + ".rule: expected integer");
            n.rule_number = o["rule"].get<int>();
            n.description = o.value("description", "");
        } else if (kind == "derived" || kind == "primitive") {
            n.kind = kind == "derived" ? NodeKind::derived : NodeKind::primitive;
            if (!o.contains("atom") || !o["atom"].is_string()) throw ParseError(where + ".atom: expected string");
            Atom atom = parse_atom(o["atom"].get<std::string>());
            if (!atom.is_ground()) throw ParseError(where + ".atom: not ground");
            n.fact.predicate = atom.predicate;
            for (auto& t : atom.args) n.fact.args.push_back(t.text);
        } else {
            throw ParseError(where + ".kind: unknown kind '" + kind + "'");
        }
        nodes.push_back(std::move(n));
    }
    std::vector<std::pair<int, int>> edges;
    if (doc.contains("edges")) {
        for (std::size_t i = 0; i < doc["edges"].size(); ++i) {
            const json& e = doc["edges"][i];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
                throw ParseError("edges[" + std::to_string(i) + "]: expected [from, to]");
            }
            edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
    }
    std::vector<int> goals;
    if (doc.contains("goals")) {
        for (const auto& g : doc["goals"]) {
            if (!g.is_number_integer()) throw ParseError("goals: expected integers");
            goals.push_back(g.get<int>());
        }
    }
    return DerivationGraph(std::move(nodes), std::move(edges), std::move(goals));
}

std::string canonical_label(const DerivationGraph& graph, int id, const std::map<std::string, std::string>& rename) {
    const GraphNode& n = graph.node(id);
    if (n.is_atom()) return to_string(renamed(n.fact, rename));
    std::vector<std::string> premises;
    for (int p : graph.premises(id)) premises.push_back(to_string(renamed(graph.node(p).fact, rename)));
    std::sort(premises.begin(), premises.end());
    std::string out = "RULE " + std::to_string(n.rule_number) + "|" +
                      to_string(renamed(graph.node(graph.conclusion(id)).fact, rename)) + "|";
    for (std::size_t i = 0; i < premises.size(); ++i) {
        if (i) out += ";";
        out += premises[i];
    }
    return out;
}

std::vector<std::string> canonical_edge_labels(const DerivationGraph& graph, const std::map<std::string, std::string>& rename) {
    std::set<std::string> out;
    for (const auto& [from, to] : graph.edges()) {
        out.insert(canonical_label(graph, from, rename) + " -> " + canonical_label(graph, to, rename));
    }
    return {out.begin(), out.end()};
}

std::vector<int> goal_support(const DerivationGraph& graph) {
    std::set<int> seen;
    std::vector<int> stack(graph.goals().begin(), graph.goals().end());
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (!seen.insert(id).second) continue;
        const GraphNode& n = graph.node(id);
        if (n.kind == NodeKind::rule) {
            for (int p : graph.premises(id)) stack.push_back(p);
        } else {
            for (int r : graph.derivations(id)) stack.push_back(r);
        }
    }
    return {seen.begin(), seen.end()};
}

DerivationGraph induced_subgraph(const DerivationGraph& graph, const std::vector<int>& keep) {
    const std::set<int> kept(keep.begin(), keep.end());
    std::vector<GraphNode> nodes;
    for (const auto& n : graph.nodes()) {
        if (kept.contains(n.id)) nodes.push_back(n);
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& n : graph.nodes()) {
        if (n.kind != NodeKind::rule || !kept.contains(n.id)) continue;
        for (int p : graph.premises(n.id)) {
            if (kept.contains(p)) edges.emplace_back(p, n.id);
        }
        if (kept.contains(graph.conclusion(n.id))) edges.emplace_back(n.id, graph.conclusion(n.id));
    }
    std::vector<int> goals;
    for (int g : graph.goals()) {
        if (kept.contains(g)) goals.push_back(g);
    }
    return DerivationGraph(std::move(nodes), std::move(edges), std::move(goals));
}

} // namespace scytag
