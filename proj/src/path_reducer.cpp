#include "scytag/path_reducer.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "scytag/error.hpp"

namespace scytag {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t h, std::string_view text) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

std::vector<std::string> pick(const Fact& fact, const std::vector<std::size_t>& positions) {
    std::vector<std::string> out;
    for (std::size_t p : positions) {
        if (p < fact.args.size()) out.push_back(fact.args[p]);
    }
    return out;
}

} // namespace

std::vector<std::string> ReductionPolicy::hosts_of(const Fact& fact) const {
    auto it = predicates.find(fact.predicate);
    return it == predicates.end() ? std::vector<std::string>{} : pick(fact, it->second.host);
}

std::vector<std::string> ReductionPolicy::cves_of(const Fact& fact) const {
    auto it = predicates.find(fact.predicate);
    return it == predicates.end() ? std::vector<std::string>{} : pick(fact, it->second.cve);
}

ReductionPolicy default_policy() {
    ReductionPolicy p;
    auto host = [&](const char* pred, std::vector<std::size_t> positions) { p.predicates[pred].host = std::move(positions); };
    host("dataBind", {1});
    host("dataFlow", {0, 1});
    host("isInSubnet", {1});
    host("hasIP", {1});
    host("networkService", {0});
    host("hacl", {0, 1});
    host("residesOn", {0});
    p.predicates["vulExists"].cve = {0};

    host("hasAccess", {1, 2});
    host("netAccess", {1, 2});
    host("hasAccount", {1});
    host("inSubnet", {0});
    host("certificateAuthority", {0});
    host("attackerLocated", {0});
    host("softwareCompromisedRemotely", {0, 1});
    host("softwareCompromisedLocally", {0});
    host("compromisedVPNClient", {0, 1});
    host("canCreateValidVPNCertificate", {0, 1});
    host("canAccessVPN", {0, 1});
    host("lateralMovementVPN", {0, 1, 2});

    host("localAccess", {1});
    host("execCode", {1});
    host("setuidProgram", {0});
    host("ownerAccessible", {0});
    host("fileOwner", {0});
    host("localFileProtection", {0});
    host("accessFile", {1});
    host("dataInject", {1});
    host("credentialsAccessInFiles", {1});
    host("ingressToolTransfer", {2});
    host("maliciousInteraction", {0});
    host("deviceOnline", {0});
    host("compromised", {0});
    host("mitmE2E", {1, 2, 3});
    host("execDelegatedCode", {1, 2});
    host("fullCampaign", {1, 2, 3});
    return p;
}

ReductionPolicy parse_policy(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("policy: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("policy: expected a JSON object");
    ReductionPolicy out;
    if (auto it = doc.find("seed"); it != doc.end()) {
        if (!it->is_number_unsigned() && !it->is_number_integer()) throw ParseError("policy.seed: expected integer");
        out.seed = it->get<std::uint64_t>();
    }
    if (auto it = doc.find("predicates"); it != doc.end()) {
        if (!it->is_object()) throw ParseError("policy.predicates: expected object");
        for (const auto& [name, entry] : it->items()) {
            const std::string where = "policy.predicates." + name;
            if (!entry.is_object()) throw ParseError(where + ": expected object");
            auto& positions = out.predicates[name];
            for (const char* key : {"host", "cve"}) {
                auto f = entry.find(key);
                if (f == entry.end()) continue;
                if (!f->is_array()) throw ParseError(where + "." + key + ": expected array");
                auto& target = std::string_view(key) == "host" ? positions.host : positions.cve;
                for (const auto& v : *f) {
                    if (!v.is_number_unsigned()) throw ParseError(where + "." + key + ": expected nonnegative integers");
                    target.push_back(v.get<std::size_t>());
                }
            }
        }
    }
    return out;
}

std::string policy_to_json(const ReductionPolicy& policy) {
    json preds = json::object();
    for (const auto& [name, pos] : policy.predicates) {
        json o = json::object();
        if (!pos.host.empty()) o["host"] = pos.host;
        if (!pos.cve.empty()) o["cve"] = pos.cve;
        preds[name] = std::move(o);
    }
    json doc;
    doc["seed"] = policy.seed;
    doc["predicates"] = std::move(preds);
    return doc.dump(2) + "\n";
}

DerivationGraph reduce_graph(const DerivationGraph& graph, const ReductionPolicy& policy) {
    if (graph.empty()) return graph;
    const auto depth = graph.depths();

    struct Candidate {
        std::uint64_t shuffle = 0;
        std::vector<std::string> signature;
        std::vector<std::string> premises;
        int id = 0;

        bool operator<(const Candidate& o) const {
            return std::tie(shuffle, signature, premises, id) < std::tie(o.shuffle, o.signature, o.premises, o.id);
        }
    };

    std::map<int, int> chosen;
    for (const auto& n : graph.nodes()) {
        if (n.kind != NodeKind::derived) continue;
        auto d = depth.find(n.id);
        if (d == depth.end()) continue;
        std::vector<Candidate> candidates;
        for (int r : graph.derivations(n.id)) {
            int deepest = 0;
            bool finite = true;
            Candidate c;
            c.id = r;
            for (int p : graph.premises(r)) {
                auto pd = depth.find(p);
                if (pd == depth.end()) {
                    finite = false;
                    break;
                }
                deepest = std::max(deepest, pd->second);
                const Fact& f = graph.node(p).fact;
                for (auto& h : policy.hosts_of(f)) c.signature.push_back(std::move(h));
                for (auto& v : policy.cves_of(f)) c.signature.push_back(std::move(v));
                c.premises.push_back(to_string(f));
            }
            if (!finite || deepest + 1 != d->second) continue;
            if (policy.seed != 0) {
                std::uint64_t h = policy.seed * 0x9e3779b97f4a7c15ULL;
                for (const auto& s : c.signature) h = mix(h, s);
                for (const auto& s : c.premises) h = mix(h, s);
                c.shuffle = h;
            }
            candidates.push_back(std::move(c));
        }
        chosen[n.id] = std::min_element(candidates.begin(), candidates.end())->id;
    }

    std::set<int> keep;
    std::vector<int> goals;
    std::vector<int> stack;
    for (int g : graph.goals()) {
        if (depth.contains(g)) {
            goals.push_back(g);
            stack.push_back(g);
        }
    }
    while (!stack.empty()) {
        const int atom = stack.back();
        stack.pop_back();
        if (!keep.insert(atom).second) continue;
        auto it = chosen.find(atom);
        if (it == chosen.end()) continue;
        keep.insert(it->second);
        for (int p : graph.premises(it->second)) stack.push_back(p);
    }

    std::vector<GraphNode> nodes;
    for (const auto& n : graph.nodes()) {
        if (keep.contains(n.id)) nodes.push_back(n);
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& n : graph.nodes()) {
        if (n.kind != NodeKind::rule || !keep.contains(n.id)) continue;
        edges.emplace_back(n.id, graph.conclusion(n.id));
        for (int p : graph.premises(n.id)) edges.emplace_back(p, n.id);
    }
    return DerivationGraph(std::move(nodes), std::move(edges), std::move(goals));
}

} // namespace scytag
