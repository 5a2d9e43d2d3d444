#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "scytag/datalog.hpp"
#include "scytag/derivation_graph.hpp"

namespace scytag {

/// Argument positions that name hosts and CVEs, per predicate. Derivations
/// of one atom that differ only in these positions are equivalent.
struct ReductionPolicy {
    struct Positions {
        std::vector<std::size_t> host;
        std::vector<std::size_t> cve;
    };

    std::uint64_t seed = 0;
    std::map<std::string, Positions, std::less<>> predicates;

    /// Host constants of a fact under this policy, in argument order.
    std::vector<std::string> hosts_of(const Fact& fact) const;
    std::vector<std::string> cves_of(const Fact& fact) const;
};

/// Positions for the wiring predicates, vulExists and the rule vocabulary
/// used by the shipped scenarios.
ReductionPolicy default_policy();

/// JSON `{"seed": n, "predicates": {"netAccess": {"host": [1, 2]}, ...}}`.
ReductionPolicy parse_policy(std::string_view document);
std::string policy_to_json(const ReductionPolicy& policy);

/// Keeps one shallowest rule application per derived atom and drops
/// everything no goal needs. Candidates are ordered by their host/CVE
/// signature, then premise text, then node id; a nonzero seed shuffles the
/// signature order deterministically. Node ids are preserved.
DerivationGraph reduce_graph(const DerivationGraph& graph, const ReductionPolicy& policy);

} // namespace scytag
