#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "scytag/ag_engine.hpp"
#include "scytag/cli.hpp"
#include "scytag/error.hpp"
#include "scytag/path_reducer.hpp"
#include "scytag/twin_builder.hpp"
#include "support.hpp"

using namespace scytag;

namespace {

struct Built {
    LoadedFacts loaded;
    DerivationGraph full;
    DerivationGraph reduced;
    AssetSet assets;
    TwinPlan plan;
};

Built build_case(const std::string& name) {
    const PipelineConfig config = testing_support::case_config(name, std::filesystem::temp_directory_path());
    Built b;
    b.loaded = load_facts(config);
    b.full = evaluate(b.loaded.facts, b.loaded.rules);
    b.reduced = reduce_graph(b.full, default_policy());
    b.assets = complete_connectivity(select_assets(b.reduced, b.loaded.topology, default_policy()), b.loaded.topology);
    b.plan = build_twin_plan(b.assets, b.loaded.topology,
                             parse_template_catalog(testing_support::read_file(config.templates)));
    return b;
}

std::set<std::string> node_ids(const TwinPlan& plan) {
    std::set<std::string> out;
    for (const auto& n : plan.nodes) out.insert(n.id);
    return out;
}

using Graph = std::map<std::string, std::set<std::string>>;

Graph graph_of(const std::vector<LinkKey>& links) {
    Graph g;
    for (const auto& [a, b] : links) {
        g[a].insert(b);
        g[b].insert(a);
    }
    return g;
}

Graph graph_of(const Topology& t) {
    Graph g;
    for (const auto& l : t.links) {
        g[l.a].insert(l.b);
        g[l.b].insert(l.a);
    }
    return g;
}

std::map<std::string, int> distances(const Graph& g, const std::string& from) {
    std::map<std::string, int> d{{from, 0}};
    std::deque<std::string> queue{from};
    while (!queue.empty()) {
        const std::string at = queue.front();
        queue.pop_front();
        auto it = g.find(at);
        if (it == g.end()) continue;
        for (const auto& next : it->second) {
            if (d.emplace(next, d[at] + 1).second) queue.push_back(next);
        }
    }
    return d;
}

bool connected(const Graph& g, const std::string& a, const std::string& b) { return distances(g, a).contains(b); }

struct RandomCase {
    Topology topology;
    RuleSet rules;
    TemplateCatalog catalog;
    ReductionPolicy policy;
};

RandomCase random_case(std::mt19937& rng) {
    RandomCase c;
    Topology& t = c.topology;
    t.nodes.push_back({"r0", "router", "ios", "router", "", ""});
    t.nodes.push_back({"fw0", "firewall", "openwrt", "firewall", "r0", ""});
    t.nodes.push_back({"dns0", "server", "linux", "dns", "r0", ""});
    t.links.push_back({"r0", "fw0"});
    const int nswitches = 1 + static_cast<int>(rng() % 4);
    std::vector<std::string> switches;
    for (int i = 0; i < nswitches; ++i) {
        const std::string id = "s" + std::to_string(i);
        t.nodes.push_back({id, "switch", "none", "switch", "", ""});
        t.links.push_back({id, i == 0 ? std::string("fw0") : switches[rng() % switches.size()]});
        switches.push_back(id);
    }
    t.links.push_back({"dns0", switches[rng() % switches.size()]});
    const int nhosts = 2 + static_cast<int>(rng() % 7);
    std::vector<std::string> hosts;
    for (int i = 0; i < nhosts; ++i) {
        const std::string id = "h" + std::to_string(i);
        t.nodes.push_back({id, "pc", "linux", "host", rng() % 5 ? "r0" : "", rng() % 2 ? "dns0" : ""});
        t.links.push_back({id, switches[rng() % switches.size()]});
        hosts.push_back(id);
    }
    // a few redundant links so shortest routes are not unique
    for (int k = static_cast<int>(rng() % 3); k > 0; --k) {
        const std::string a = hosts[rng() % hosts.size()];
        const std::string b = switches[rng() % switches.size()];
        if (std::none_of(t.links.begin(), t.links.end(), [&](const Link& l) {
                return (l.a == a && l.b == b) || (l.a == b && l.b == a);
            })) {
            t.links.push_back({a, b});
        }
    }
    std::set<std::pair<std::string, std::string>> acl_pairs;
    for (int k = 0; k < nhosts + 2; ++k) {
        const std::string a = hosts[rng() % hosts.size()];
        const std::string b = hosts[rng() % hosts.size()];
        if (a != b) acl_pairs.emplace(a, b);
    }
    for (const auto& [a, b] : acl_pairs) t.acls.push_back({a, b, "tcp", "22"});
    if (rng() % 2 && !acl_pairs.empty()) {
        const auto& [a, b] = *acl_pairs.begin();
        t.flows.push_back({"f0", a, b, "outbound"});
    }
    validate_topology(t);

    const std::string start = hosts[0];
    const std::string target = hosts[1 + rng() % (hosts.size() - 1)];
    c.rules = parse_rules("% RULE 1 (first hop)\nreach(A,B) :- start(A), hacl(A,B,P,Q).\n"
                          "% RULE 2 (next hop)\nreach(A,C) :- reach(A,B), hacl(B,C,P,Q).\n"
                          "start(" + start + ").\nattackGoal(reach(_," + target + ")).\n");
    c.catalog = parse_template_catalog(
        R"({"router": "r", "firewall": "f", "server": "s", "switch": "sw", "pc": {"template": "p", "platform": "linux"}})");
    c.policy = default_policy();
    c.policy.predicates["reach"].host = {0, 1};
    c.policy.predicates["start"].host = {0};
    return c;
}

/// Recomputes why each plan node is there and checks the recorded reasons.
void check_minimal_and_viable(const DerivationGraph& graph, const TwinPlan& plan, const Topology& t,
                              const ReductionPolicy& policy) {
    std::set<std::string> ag_hosts;
    for (const auto& n : graph.nodes()) {
        if (n.is_atom()) {
            for (const auto& h : policy.hosts_of(n.fact)) ag_hosts.insert(h);
        }
    }
    std::set<std::string> gateways, dns;
    for (const auto& h : ag_hosts) {
        for (const Node* n = t.find(h); n && !n->gateway.empty() && !gateways.contains(n->gateway); n = t.find(n->gateway)) {
            gateways.insert(n->gateway);
        }
        if (!t.find(h)->dns.empty()) dns.insert(t.find(h)->dns);
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& path : plan.paths) {
        for (std::size_t i = 0; i + 1 < path.size(); ++i) pairs.emplace_back(path[i], path[i + 1]);
    }
    for (const auto& f : plan.flows) pairs.emplace_back(f.src, f.dst);
    for (const auto& n : plan.nodes) {
        const Node* node = t.find(n.id);
        if (!node->gateway.empty()) pairs.emplace_back(n.id, node->gateway);
        if (!node->dns.empty()) pairs.emplace_back(n.id, node->dns);
    }
    const Graph full = graph_of(t);
    auto on_some_shortest_route = [&](const std::string& x) {
        for (const auto& [a, b] : pairs) {
            const auto from_a = distances(full, a);
            const auto from_x = distances(full, x);
            if (from_a.contains(x) && from_x.contains(b) && from_a.contains(b) &&
                from_a.at(x) + from_x.at(b) == from_a.at(b)) {
                return true;
            }
        }
        return false;
    };

    for (const auto& n : plan.nodes) {
        CAPTURE(n.id);
        REQUIRE_FALSE(n.reasons.empty());
        for (Reason r : n.reasons) {
            switch (r) {
            case Reason::ag_path: CHECK(ag_hosts.contains(n.id)); break;
            case Reason::gateway: CHECK(gateways.contains(n.id)); break;
            case Reason::dns_ad: CHECK(dns.contains(n.id)); break;
            case Reason::firewall: CHECK(t.find(n.id)->role == "firewall"); break;
            case Reason::connectivity: CHECK(on_some_shortest_route(n.id)); break;
            }
        }
    }

    // viability
    const auto ids = node_ids(plan);
    for (const auto& h : ag_hosts) CHECK(ids.contains(h));
    std::set<LinkKey> topo_links;
    for (const auto& l : t.links) topo_links.insert(link_key(l.a, l.b));
    for (const auto& l : plan.links) {
        CHECK(topo_links.contains(l));
        CHECK(ids.contains(l.first));
        CHECK(ids.contains(l.second));
    }
    const Graph twin = graph_of(plan.links);
    for (const auto& [a, b] : pairs) {
        if (a != b) CHECK(connected(twin, a, b));
    }
}

} // namespace

TEST_CASE("UK Office twin plan") {
    const Built b = build_case("uk_office");
    CHECK(b.plan.nodes.size() == 10);
    CHECK(b.plan.links.size() == 9);
    CHECK(b.plan.vlans.size() == 2);
    check_minimal_and_viable(b.reduced, b.plan, b.loaded.topology, default_policy());
    const DerivationGraph twin = evaluate(restrict_facts(b.loaded.facts, b.loaded.topology, node_ids(b.plan)), b.loaded.rules);
    CHECK(twin.critical_hops() == 5);
}

TEST_CASE("Bank twin plan") {
    const Built b = build_case("bank");
    CHECK(b.plan.nodes.size() == 12);
    CHECK(b.plan.links.size() == 11);
    CHECK(b.plan.vlans == std::vector<int>{100, 110, 120});
    check_minimal_and_viable(b.reduced, b.plan, b.loaded.topology, default_policy());
    const DerivationGraph twin = evaluate(restrict_facts(b.loaded.facts, b.loaded.topology, node_ids(b.plan)), b.loaded.rules);
    CHECK(twin.critical_hops() == 7);
}

TEST_CASE("Bank-XL selects the same twin as Bank") {
    const Built xl = build_case("bank_xl");
    const Built bank = build_case("bank");
    CHECK(xl.loaded.topology.nodes.size() == 1471);
    CHECK(xl.plan.nodes.size() == 12);
    CHECK(plan_to_json(xl.plan) == plan_to_json(bank.plan));
}

TEST_CASE("plan JSON round trip") {
    const Built b = build_case("bank");
    const std::string text = plan_to_json(b.plan);
    CHECK(plan_to_json(parse_plan_json(text)) == text);
    CHECK(twin_topology(b.plan, b.loaded.topology).nodes.size() == 12);
}

TEST_CASE("empty graph selects nothing") {
    const Built b = build_case("uk_office");
    const AssetSet none = select_assets(DerivationGraph{}, b.loaded.topology, default_policy());
    CHECK(none.empty());
    CHECK(complete_connectivity(none, b.loaded.topology).empty());
}

TEST_CASE("connectivity completion") {
    Topology t;
    t.nodes = {{"camA", "ip_camera", "linux", "host", "", ""},
               {"SW1", "l2_switch", "none", "switch", "", ""},
               {"DVR", "dvr", "linux", "host", "", ""},
               {"island", "pc", "linux", "host", "", ""}};
    t.links = {{"camA", "SW1"}, {"SW1", "DVR"}};
    validate_topology(t);

    SUBCASE("a missing switch is copied in") {
        AssetSet a;
        a.hosts["camA"].insert(Reason::ag_path);
        a.hosts["DVR"].insert(Reason::ag_path);
        a.paths = {{"camA", "DVR"}};
        const AssetSet done = complete_connectivity(a, t);
        // shortest-path oracle: camA, SW1, DVR
        const auto d = distances(graph_of(t), "camA");
        CHECK(d.at("DVR") == 2);
        CHECK(done.hosts.size() == 3);
        CHECK(done.hosts.at("SW1") == std::set<Reason>{Reason::connectivity});
        CHECK(done.links == std::set<LinkKey>{link_key("camA", "SW1"), link_key("SW1", "DVR")});
    }
    SUBCASE("adjacent pairs need nothing") {
        AssetSet a;
        for (const char* h : {"camA", "SW1", "DVR"}) a.hosts[h].insert(Reason::ag_path);
        a.links = {link_key("camA", "SW1"), link_key("SW1", "DVR")};
        a.paths = {{"camA", "SW1", "DVR"}};
        const AssetSet done = complete_connectivity(a, t);
        CHECK(done.hosts == a.hosts);
        CHECK(done.links == a.links);
    }
    SUBCASE("a disconnected pair is infeasible") {
        AssetSet a;
        a.hosts["camA"].insert(Reason::ag_path);
        a.hosts["island"].insert(Reason::ag_path);
        a.paths = {{"camA", "island"}};
        try {
            complete_connectivity(a, t);
            FAIL("expected infeasibility");
        } catch (const InfeasibleError& e) {
            CHECK(std::string(e.what()).find("island") != std::string::npos);
            CHECK(std::string(e.what()).find("camA") != std::string::npos);
        }
    }
}

TEST_CASE("a graph host missing from the topology is a consistency error") {
    const Built b = build_case("bank");
    const RuleSet rules = parse_rules("execCode(P,H,root) :- hacl(P,H,tcp,'22').\nattackGoal(execCode(_,_,_)).\n");
    const DerivationGraph g = evaluate(parse_fact_text("hacl(adminPC1,ghost9,tcp,'22')."), rules);
    try {
        select_assets(g, b.loaded.topology, default_policy());
        FAIL("expected a consistency error");
    } catch (const ConsistencyError& e) {
        CHECK(std::string(e.what()).find("ghost9") != std::string::npos);
    }
}

TEST_CASE("a device class without a template aborts") {
    Topology t;
    t.nodes = {{"plc1", "plc", "none", "host", "", ""}};
    AssetSet a;
    a.hosts["plc1"].insert(Reason::ag_path);
    try {
        build_twin_plan(a, t, parse_template_catalog(R"({"pc": "docker:x"})"));
        FAIL("expected an abort");
    } catch (const AbortError& e) {
        CHECK(std::string(e.what()).find("plc") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_template_catalog("[]"), ParseError);
    CHECK_THROWS_AS(parse_template_catalog(R"({"pc": 3})"), ParseError);
}

TEST_CASE("sanity validation") {
    const Built b = build_case("bank");
    REQUIRE_FALSE(b.plan.flows.empty());

    SUBCASE("the built plan passes") {
        MockBackend backend;
        const ValidationReport r = sanity_validate(b.plan, backend);
        CHECK(r.passed);
        CHECK_FALSE(r.empty);
        CHECK(r.goal_achievable);
        CHECK(r.edges.size() == b.plan.flows.size());
        CHECK(report_to_json(r).find("\"pass\"") != std::string::npos);
    }
    SUBCASE("deleting a link is detected on exactly the flows it cuts") {
        bool some_failure = false;
        for (std::size_t k = 0; k < b.plan.links.size(); ++k) {
            TwinPlan cut = b.plan;
            cut.links.erase(cut.links.begin() + static_cast<long>(k));
            const Graph g = graph_of(cut.links);
            MockBackend backend;
            const ValidationReport r = sanity_validate(cut, backend);
            for (const auto& f : cut.flows) {
                const bool broken = !connected(g, f.src, f.dst);
                const bool reported = std::any_of(r.failures.begin(), r.failures.end(), [&](const std::string& s) {
                    return s.find("dataFlow " + f.name) != std::string::npos;
                });
                CHECK(broken == reported);
                some_failure = some_failure || broken;
            }
            if (!r.failures.empty()) CHECK_FALSE(r.passed);
        }
        CHECK(some_failure);
    }
    SUBCASE("an empty plan passes vacuously") {
        MockBackend backend;
        const ValidationReport r = sanity_validate(TwinPlan{}, backend);
        CHECK(r.passed);
        CHECK(r.empty);
        CHECK(r.edges.empty());
        CHECK(report_to_json(r).find("\"empty\"") != std::string::npos);
    }
    SUBCASE("an unreachable backend is an infrastructure error") {
        MockBackend backend(false);
        CHECK_THROWS_AS(sanity_validate(b.plan, backend), InfrastructureError);
    }
}

TEST_CASE("twin minimality and viability on 50 random topologies") {
    std::mt19937 rng(424242);
    int built = 0;
    for (int trial = 0; trial < 50; ++trial) {
        CAPTURE(trial);
        const RandomCase c = random_case(rng);
        const FactBase facts = emit_topology_facts(c.topology);
        const DerivationGraph full = evaluate(facts, c.rules);
        const DerivationGraph reduced = reduce_graph(full, c.policy);
        const AssetSet assets = select_assets(reduced, c.topology, c.policy);
        if (reduced.empty()) {
            CHECK(assets.empty());
            continue;
        }
        ++built;
        const TwinPlan plan = build_twin_plan(complete_connectivity(assets, c.topology), c.topology, c.catalog);
        check_minimal_and_viable(reduced, plan, c.topology, c.policy);
        MockBackend backend;
        CHECK(sanity_validate(plan, backend).passed);
        const DerivationGraph twin = evaluate(restrict_facts(facts, c.topology, node_ids(plan)), c.rules);
        CHECK(twin.critical_hops() == full.critical_hops());
        CHECK(plan_to_json(plan) ==
              plan_to_json(build_twin_plan(complete_connectivity(select_assets(reduced, c.topology, c.policy), c.topology),
                                           c.topology, c.catalog)));
    }
    CHECK(built >= 20);
}
