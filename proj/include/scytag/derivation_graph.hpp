#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scytag/datalog.hpp"

namespace scytag {

enum class NodeKind { primitive, rule, derived };

std::string_view to_string(NodeKind kind);

struct GraphNode {
    int id = 0;
    NodeKind kind = NodeKind::primitive;
    /// Atom of a primitive or derived node.
    Fact fact;
    /// Rule application nodes only.
    int rule_number = 0;
    std::string description;

    bool is_atom() const noexcept { return kind != NodeKind::rule; }
    /// `RULE 5 (Net direct access.)` for rule nodes, the atom text otherwise.
    std::string label() const;
};

/// MulVAL-style AND/OR graph. Edges run premise -> rule application ->
/// conclusion. Node ids are positive and need not be contiguous.
class DerivationGraph {
public:
    DerivationGraph() = default;

    /// Builds and checks the structure: every rule node has one derived
    /// conclusion, every derived node has at least one rule node, no edge
    /// joins two atoms. Throws ValidationError otherwise.
    DerivationGraph(std::vector<GraphNode> nodes, std::vector<std::pair<int, int>> edges, std::vector<int> goals);

    bool empty() const noexcept { return nodes_.empty(); }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
    const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }
    const std::vector<int>& goals() const noexcept { return goals_; }

    bool contains(int id) const { return index_.contains(id); }
    const GraphNode& node(int id) const;
    /// Node id of an atom, or 0.
    int find_atom(const Fact& fact) const;

    /// Rule applications concluding `atom_id`, in id order.
    const std::vector<int>& derivations(int atom_id) const;
    /// Premises of a rule node, in body order.
    const std::vector<int>& premises(int rule_id) const;
    int conclusion(int rule_id) const;
    /// Rule applications that use `atom_id` as a premise.
    const std::vector<int>& consumers(int atom_id) const;

    std::size_t count(NodeKind kind) const;

    /// Derived-atom depth of the shallowest derivation per atom: primitives
    /// are 0, a derived atom is 1 + the least over its rule nodes of the
    /// deepest premise. Atoms with no finite derivation are absent.
    std::map<int, int> depths() const;

    /// Depth of the shallowest goal, 0 when no goal is derivable.
    int critical_hops() const;

    bool operator==(const DerivationGraph& other) const;

private:
    std::vector<GraphNode> nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<int> goals_;
    std::map<int, std::size_t> index_;
    std::map<Fact, int> atom_ids_;
    std::map<int, std::vector<int>> premises_;
    std::map<int, int> conclusion_;
    std::map<int, std::vector<int>> derivations_;
    std::map<int, std::vector<int>> consumers_;
};

/// One node per line: `<n>:atom`, `(n):RULE k (text)`, `[n]:atom`.
std::string to_listing(const DerivationGraph& graph);

/// JSON with `nodes`, `edges` and `goals`; parse_graph_json inverts it.
std::string to_json(const DerivationGraph& graph);
DerivationGraph parse_graph_json(std::string_view document);

/// Labels that identify a node independently of its numbering. A rule node
/// is named by its rule, conclusion and sorted premises. `rename` maps host
/// constants before labelling.
std::string canonical_label(const DerivationGraph& graph, int id,
                            const std::map<std::string, std::string>& rename = {});
std::vector<std::string> canonical_edge_labels(const DerivationGraph& graph,
                                               const std::map<std::string, std::string>& rename = {});

/// Nodes that lie on some derivation of a goal, found by walking backwards
/// from the goals.
std::vector<int> goal_support(const DerivationGraph& graph);

/// Restricts the graph to `keep` (and the edges among them), dropping goals
/// outside it. Ids are preserved.
DerivationGraph induced_subgraph(const DerivationGraph& graph, const std::vector<int>& keep);

} // namespace scytag
