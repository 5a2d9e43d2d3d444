#include "scytag/twin_builder.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "json.hpp"
#include "scytag/ag_engine.hpp"
#include "scytag/error.hpp"

namespace scytag {

using nlohmann::json;

namespace {

constexpr Reason all_reasons[] = {Reason::ag_path, Reason::connectivity, Reason::gateway, Reason::dns_ad,
                                  Reason::firewall};

using Adjacency = std::map<std::string, std::vector<std::string>>;

Adjacency adjacency(const std::vector<Link>& links) {
    Adjacency adj;
    for (const auto& l : links) {
        adj[l.a].push_back(l.b);
        adj[l.b].push_back(l.a);
    }
    for (auto& [_, v] : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return adj;
}

/// Shortest route with lexicographically smallest neighbours first; empty when
/// disconnected.
std::vector<std::string> shortest_route(const Adjacency& adj, const std::string& src, const std::string& dst) {
    if (src == dst) return {src};
    std::map<std::string, std::string> parent{{src, src}};
    std::deque<std::string> queue{src};
    while (!queue.empty()) {
        const std::string at = queue.front();
        queue.pop_front();
        auto it = adj.find(at);
        if (it == adj.end()) continue;
        for (const auto& next : it->second) {
            if (!parent.emplace(next, at).second) continue;
            if (next == dst) {
                std::vector<std::string> route{dst};
                for (std::string cur = at; cur != src; cur = parent.at(cur)) route.push_back(cur);
                route.push_back(src);
                std::reverse(route.begin(), route.end());
                return route;
            }
            queue.push_back(next);
        }
    }
    return {};
}

/// End of the default-gateway chain starting at `id`, with the chain itself.
std::vector<std::string> gateway_chain(const Topology& t, const std::string& id) {
    std::vector<std::string> chain;
    std::set<std::string> seen{id};
    const Node* n = t.find(id);
    while (n && !n->gateway.empty() && seen.insert(n->gateway).second) {
        chain.push_back(n->gateway);
        n = t.find(n->gateway);
    }
    return chain;
}

void require_host(const Topology& t, const std::string& host, const Fact& where) {
    if (!t.has_node(host)) {
        throw ConsistencyError("attack graph references host \"" + host + "\" absent from the topology (in " +
                               to_string(where) + ")");
    }
}

std::vector<std::string> path_hosts(const DerivationGraph& graph, const AttackPath& path,
                                    const ReductionPolicy& policy) {
    std::vector<std::string> out;
    auto push = [&](const Fact& f) {
        for (auto& h : policy.hosts_of(f)) {
            if (out.empty() || out.back() != h) out.push_back(std::move(h));
        }
    };
    for (int atom : path.steps) {
        auto choice = std::find_if(path.choices.begin(), path.choices.end(), [&](const auto& c) { return c.first == atom; });
        if (choice != path.choices.end()) {
            for (int p : graph.premises(choice->second)) {
                if (graph.node(p).kind == NodeKind::primitive) push(graph.node(p).fact);
            }
        }
        push(graph.node(atom).fact);
    }
    return out;
}

json row_json(const ServiceRow& s) {
    return {{"node", s.node}, {"software", s.software}, {"protocol", s.protocol}, {"port", s.port}, {"account", s.account}};
}

json row_json(const SoftwareRow& s) { return {{"node", s.node}, {"software", s.software}, {"version", s.version}}; }

json row_json(const AclRow& a) { return {{"src", a.src}, {"dst", a.dst}, {"protocol", a.protocol}, {"port", a.port}}; }

json row_json(const Flow& f) { return {{"name", f.name}, {"src", f.src}, {"dst", f.dst}, {"direction", f.direction}}; }

std::string field(const json& o, const char* key, const std::string& where) {
    auto it = o.find(key);
    if (it == o.end() || !it->is_string()) throw ParseError(where + "." + key + ": expected string");
    return it->get<std::string>();
}

std::string optional_field(const json& o, const char* key, const std::string& where) {
    auto it = o.find(key);
    if (it == o.end() || it->is_null()) return {};
    if (!it->is_string()) throw ParseError(where + "." + key + ": expected string");
    return it->get<std::string>();
}

const json& array_at(const json& o, const char* key, const std::string& where) {
    static const json empty = json::array();
    auto it = o.find(key);
    if (it == o.end()) return empty;
    if (!it->is_array()) throw ParseError(where + "." + key + ": expected array");
    return *it;
}

} // namespace

std::string_view to_string(Reason reason) {
    switch (reason) {
    case Reason::ag_path: return "ag_path";
    case Reason::connectivity: return "connectivity";
    case Reason::gateway: return "gateway";
    case Reason::dns_ad: return "dns_ad";
    case Reason::firewall: return "firewall";
    }
    return "?";
}

Reason parse_reason(std::string_view text) {
    for (Reason r : all_reasons) {
        if (to_string(r) == text) return r;
    }
    throw ParseError("unknown justification \"" + std::string(text) + "\"");
}

LinkKey link_key(std::string a, std::string b) {
    if (b < a) std::swap(a, b);
    return {std::move(a), std::move(b)};
}

AssetSet select_assets(const DerivationGraph& graph, const Topology& topology, const ReductionPolicy& policy) {
    AssetSet out;
    if (graph.empty()) return out;

    std::set<Fact> services, software, acls, flows;
    for (const auto& n : graph.nodes()) {
        if (!n.is_atom()) continue;
        for (const auto& h : policy.hosts_of(n.fact)) {
            require_host(topology, h, n.fact);
            out.hosts[h].insert(Reason::ag_path);
        }
        const auto& p = n.fact.predicate;
        if (p == "vulExists") out.vulnerabilities.insert(n.fact);
        else if (p == "networkService") services.insert(n.fact);
        else if (p == "residesOn") software.insert(n.fact);
        else if (p == "hacl") acls.insert(n.fact);
        else if (p == "dataFlow") flows.insert(n.fact);
    }
    for (int g : graph.goals()) out.goals.push_back(to_string(graph.node(g).fact));

    const auto adj = adjacency(topology.links);
    const std::vector<std::string> marked = [&] {
        std::vector<std::string> v;
        for (const auto& [h, _] : out.hosts) v.push_back(h);
        return v;
    }();
    for (const auto& h : marked) {
        const Node& node = *topology.find(h);
        const auto chain = gateway_chain(topology, h);
        for (const auto& g : chain) out.hosts[g].insert(Reason::gateway);
        if (!node.dns.empty()) out.hosts[node.dns].insert(Reason::dns_ad);
        if (!chain.empty()) {
            for (const auto& hop : shortest_route(adj, h, chain.back())) {
                const Node* on_route = topology.find(hop);
                if (on_route && on_route->role == "firewall" && hop != h) out.hosts[hop].insert(Reason::firewall);
            }
        }
    }

    std::set<std::pair<std::string, std::string>> vulnerable;
    for (const auto& v : out.vulnerabilities) vulnerable.emplace(v.args[1], v.args[2]);

    for (const auto& s : topology.services) {
        if (services.contains(Fact{"networkService", {s.node, s.software, s.protocol, s.port, s.account}})) {
            out.services.push_back(s);
        }
    }
    for (const auto& s : topology.software) {
        if (!out.hosts.contains(s.node)) continue;
        if (software.contains(Fact{"residesOn", {s.node, s.software, s.version}}) ||
            vulnerable.contains({s.software, s.version})) {
            out.software.push_back(s);
        }
    }
    for (const auto& a : topology.acls) {
        if (acls.contains(Fact{"hacl", {a.src, a.dst, a.protocol, a.port}})) out.acls.push_back(a);
    }
    for (const auto& f : topology.flows) {
        const bool on_graph = flows.contains(Fact{"dataFlow", {f.src, f.dst, f.name, f.direction}});
        const bool between_marked = std::binary_search(marked.begin(), marked.end(), f.src) &&
                                    std::binary_search(marked.begin(), marked.end(), f.dst);
        if (on_graph || between_marked) out.flows.push_back(f);
    }

    for (const auto& path : enumerate_attack_paths(graph)) {
        auto hosts = path_hosts(graph, path, policy);
        if (!hosts.empty()) out.paths.push_back(std::move(hosts));
    }
    std::sort(out.paths.begin(), out.paths.end());
    out.paths.erase(std::unique(out.paths.begin(), out.paths.end()), out.paths.end());
    return out;
}

AssetSet complete_connectivity(AssetSet assets, const Topology& topology) {
    if (assets.empty()) return assets;
    const auto adj = adjacency(topology.links);

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& path : assets.paths) {
        for (std::size_t i = 0; i + 1 < path.size(); ++i) pairs.emplace_back(path[i], path[i + 1]);
    }
    for (const auto& f : assets.flows) pairs.emplace_back(f.src, f.dst);
    for (const auto& [h, _] : assets.hosts) {
        const Node* n = topology.find(h);
        if (!n) throw ConsistencyError("asset \"" + h + "\" absent from the topology");
        if (!n->gateway.empty()) pairs.emplace_back(h, n->gateway);
        if (!n->dns.empty()) pairs.emplace_back(h, n->dns);
    }

    for (const auto& [src, dst] : pairs) {
        if (src == dst) continue;
        const auto route = shortest_route(adj, src, dst);
        if (route.empty()) {
            throw InfeasibleError("no route between \"" + src + "\" and \"" + dst + "\" in the full topology");
        }
        for (std::size_t i = 0; i < route.size(); ++i) {
            auto [it, added] = assets.hosts.try_emplace(route[i]);
            if (added) it->second.insert(Reason::connectivity);
            if (i + 1 < route.size()) assets.links.insert(link_key(route[i], route[i + 1]));
        }
    }
    return assets;
}

TemplateCatalog parse_template_catalog(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("template catalog: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("template catalog: expected a JSON object");
    TemplateCatalog out;
    for (const auto& [cls, entry] : doc.items()) {
        const std::string where = "templates." + cls;
        if (entry.is_string()) {
            out[cls] = {entry.get<std::string>(), ""};
        } else if (entry.is_object()) {
            out[cls] = {field(entry, "template", where), optional_field(entry, "platform", where)};
        } else {
            throw ParseError(where + ": expected a template id or {template, platform}");
        }
    }
    return out;
}

const PlanNode* TwinPlan::find(std::string_view id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const PlanNode& n) { return n.id == id; });
    return it == nodes.end() ? nullptr : &*it;
}

TwinPlan build_twin_plan(const AssetSet& assets, const Topology& topology, const TemplateCatalog& catalog) {
    TwinPlan plan;
    for (const auto& [id, reasons] : assets.hosts) {
        const Node* n = topology.find(id);
        if (!n) throw ConsistencyError("asset \"" + id + "\" absent from the topology");
        auto entry = catalog.find(n->device_class);
        if (entry == catalog.end()) {
            throw AbortError("no template for device class \"" + n->device_class + "\" (node " + id + ")");
        }
        PlanNode p;
        p.id = id;
        p.device_class = n->device_class;
        p.template_id = entry->second.template_id;
        p.os = n->os;
        if (!entry->second.platform.empty()) {
            p.platform = entry->second.platform;
        } else {
            std::string os = n->os;
            std::transform(os.begin(), os.end(), os.begin(), [](unsigned char c) { return std::tolower(c); });
            p.platform = os.find("windows") != std::string::npos ? "windows" : "linux";
        }
        for (const auto& i : topology.interfaces) {
            if (i.node == id && !i.address.empty()) p.addresses.push_back(i.address);
        }
        p.reasons.assign(reasons.begin(), reasons.end());
        for (const auto& s : assets.services) {
            if (s.node == id) p.services.push_back(s);
        }
        for (const auto& s : assets.software) {
            if (s.node == id) p.software.push_back(s);
        }
        plan.host_map[id] = id;
        plan.nodes.push_back(std::move(p));
    }
    plan.links.assign(assets.links.begin(), assets.links.end());
    plan.acls = assets.acls;
    plan.flows = assets.flows;
    plan.goals = assets.goals;
    plan.paths = assets.paths;

    std::set<int> vlans;
    for (const auto& s : topology.subnets) {
        if (!s.vlan) continue;
        for (const auto& m : s.members) {
            if (assets.hosts.contains(m)) {
                vlans.insert(*s.vlan);
                break;
            }
        }
    }
    plan.vlans.assign(vlans.begin(), vlans.end());
    return plan;
}

std::string plan_to_json(const TwinPlan& plan) {
    json nodes = json::array();
    for (const auto& n : plan.nodes) {
        json reasons = json::array();
        for (Reason r : n.reasons) reasons.push_back(to_string(r));
        json services = json::array(), software = json::array();
        for (const auto& s : n.services) services.push_back(row_json(s));
        for (const auto& s : n.software) software.push_back(row_json(s));
        nodes.push_back({{"id", n.id},
                         {"device_class", n.device_class},
                         {"template", n.template_id},
                         {"platform", n.platform},
                         {"os", n.os},
                         {"addresses", n.addresses},
                         {"justification", reasons},
                         {"services", services},
                         {"software", software}});
    }
    json links = json::array();
    for (const auto& [a, b] : plan.links) links.push_back({{"a", a}, {"b", b}});
    json acls = json::array(), flows = json::array();
    for (const auto& a : plan.acls) acls.push_back(row_json(a));
    for (const auto& f : plan.flows) flows.push_back(row_json(f));
    json doc = {{"nodes", nodes}, {"links", links}, {"acls", acls}, {"vlans", plan.vlans}, {"flows", flows},
                {"host_map", plan.host_map}, {"goals", plan.goals}, {"paths", plan.paths}};
    return doc.dump(2) + "\n";
}

TwinPlan parse_plan_json(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("twin plan: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("twin plan: expected a JSON object");
    TwinPlan plan;
    try {
        const auto& nodes = array_at(doc, "nodes", "plan");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const std::string where = "plan.nodes[" + std::to_string(i) + "]";
            const json& o = nodes[i];
            if (!o.is_object()) throw ParseError(where + ": expected object");
            PlanNode n;
            n.id = field(o, "id", where);
            n.device_class = optional_field(o, "device_class", where);
            n.template_id = field(o, "template", where);
            n.platform = optional_field(o, "platform", where);
            n.os = optional_field(o, "os", where);
            for (const auto& a : array_at(o, "addresses", where)) n.addresses.push_back(a.get<std::string>());
            for (const auto& r : array_at(o, "justification", where)) n.reasons.push_back(parse_reason(r.get<std::string>()));
            for (const auto& s : array_at(o, "services", where)) {
                n.services.push_back({field(s, "node", where), field(s, "software", where), field(s, "protocol", where),
                                      field(s, "port", where), field(s, "account", where)});
            }
            for (const auto& s : array_at(o, "software", where)) {
                n.software.push_back({field(s, "node", where), field(s, "software", where), field(s, "version", where)});
            }
            plan.nodes.push_back(std::move(n));
        }
        for (const auto& l : array_at(doc, "links", "plan")) {
            plan.links.push_back(link_key(field(l, "a", "plan.links"), field(l, "b", "plan.links")));
        }
        for (const auto& a : array_at(doc, "acls", "plan")) {
            plan.acls.push_back({field(a, "src", "plan.acls"), field(a, "dst", "plan.acls"), field(a, "protocol", "plan.acls"),
                                 field(a, "port", "plan.acls")});
        }
        for (const auto& v : array_at(doc, "vlans", "plan")) plan.vlans.push_back(v.get<int>());
        for (const auto& f : array_at(doc, "flows", "plan")) {
            plan.flows.push_back({field(f, "name", "plan.flows"), field(f, "src", "plan.flows"), field(f, "dst", "plan.flows"),
                                  field(f, "direction", "plan.flows")});
        }
        if (auto it = doc.find("host_map"); it != doc.end()) plan.host_map = it->get<std::map<std::string, std::string>>();
        for (const auto& g : array_at(doc, "goals", "plan")) plan.goals.push_back(g.get<std::string>());
        for (const auto& p : array_at(doc, "paths", "plan")) plan.paths.push_back(p.get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw ParseError(std::string("twin plan: ") + e.what());
    }
    return plan;
}

Topology twin_topology(const TwinPlan& plan, const Topology& full) {
    std::set<std::string> ids;
    for (const auto& n : plan.nodes) ids.insert(n.id);
    const std::set<LinkKey> links(plan.links.begin(), plan.links.end());
    auto in = [&](const std::string& id) { return ids.contains(id); };

    Topology t;
    for (auto n : full.nodes) {
        if (!in(n.id)) continue;
        if (!in(n.gateway)) n.gateway.clear();
        if (!in(n.dns)) n.dns.clear();
        t.nodes.push_back(std::move(n));
    }
    for (const auto& i : full.interfaces) {
        if (in(i.node)) t.interfaces.push_back(i);
    }
    for (const auto& l : full.links) {
        if (links.contains(link_key(l.a, l.b))) t.links.push_back(l);
    }
    for (const auto& s : full.software) {
        if (in(s.node)) t.software.push_back(s);
    }
    for (const auto& s : full.services) {
        if (in(s.node)) t.services.push_back(s);
    }
    for (const auto& a : full.acls) {
        if (in(a.src) && in(a.dst)) t.acls.push_back(a);
    }
    for (const auto& s : full.subnets) {
        Subnet copy = s;
        copy.members.clear();
        for (const auto& m : s.members) {
            if (in(m)) copy.members.push_back(m);
        }
        if (!copy.members.empty()) t.subnets.push_back(std::move(copy));
    }
    std::set<std::string> flows;
    for (const auto& f : full.flows) {
        if (in(f.src) && in(f.dst)) {
            t.flows.push_back(f);
            flows.insert(f.name);
        }
    }
    for (const auto& b : full.data_bindings) {
        if (in(b.host) && flows.contains(b.flow)) t.data_bindings.push_back(b);
    }
    return t;
}

FactBase restrict_facts(const FactBase& facts, const Topology& full, const std::set<std::string>& twin_nodes) {
    FactBase out;
    for (const auto& f : facts) {
        const bool keep = std::all_of(f.args.begin(), f.args.end(), [&](const std::string& a) {
            return !full.has_node(a) || twin_nodes.contains(a);
        });
        if (keep) out.insert(f);
    }
    return out;
}

void MockBackend::require_online(const char* operation) const {
    if (!online_) throw InfrastructureError(std::string("twin backend unreachable during ") + operation);
}

void MockBackend::create_node(const PlanNode& node) {
    require_online("create_node");
    if (!nodes_.emplace(node.id, node.template_id).second) {
        throw ValidationError("backend already hosts node \"" + node.id + "\"");
    }
    log_.push_back("create_node " + node.id);
}

void MockBackend::create_link(const std::string& a, const std::string& b) {
    require_online("create_link");
    if (!nodes_.contains(a) || !nodes_.contains(b)) {
        throw ValidationError("link " + a + " -- " + b + " references a node the backend does not host");
    }
    links_.insert(link_key(a, b));
    log_.push_back("create_link " + a + " " + b);
}

void MockBackend::upload_startup_config(const std::string& node, const std::string& config) {
    require_online("upload_startup_config");
    if (!nodes_.contains(node)) throw ValidationError("config for unknown node \"" + node + "\"");
    configs_[node] = config;
    log_.push_back("upload_startup_config " + node);
}

bool MockBackend::reachable(const std::string& src, const std::string& dst) const {
    if (!nodes_.contains(src) || !nodes_.contains(dst)) return false;
    std::vector<Link> links;
    for (const auto& [a, b] : links_) links.push_back({a, b});
    return !shortest_route(adjacency(links), src, dst).empty();
}

bool MockBackend::probe_edge(const std::string& src, const std::string& dst) {
    require_online("probe_edge");
    const bool ok = reachable(src, dst);
    log_.push_back("probe_edge " + src + " " + dst + (ok ? " ok" : " fail"));
    return ok;
}

bool MockBackend::run_goal_probe(const std::string& goal, const std::vector<std::string>& hosts) {
    require_online("run_goal_probe");
    bool ok = !hosts.empty();
    for (std::size_t i = 0; ok && i < hosts.size(); ++i) {
        ok = i + 1 < hosts.size() ? reachable(hosts[i], hosts[i + 1]) : nodes_.contains(hosts[i]);
    }
    log_.push_back("run_goal_probe " + goal + (ok ? " ok" : " fail"));
    return ok;
}

std::string MockBackend::session_json() const {
    json links = json::array();
    for (const auto& [a, b] : links_) links.push_back({a, b});
    json doc = {{"online", online_}, {"nodes", nodes_}, {"links", links}, {"configs", configs_}, {"log", log_}};
    return doc.dump(2) + "\n";
}

void MockBackend::save_session(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InfrastructureError("cannot write backend session file " + path);
    out << session_json();
}

ValidationReport sanity_validate(const TwinPlan& plan, TwinBackend& backend) {
    ValidationReport report;
    if (plan.empty()) {
        report.passed = true;
        report.empty = true;
        return report;
    }
    for (const auto& n : plan.nodes) backend.create_node(n);
    for (const auto& [a, b] : plan.links) backend.create_link(a, b);
    for (const auto& n : plan.nodes) {
        json config = {{"services", json::array()}, {"software", json::array()}};
        for (const auto& s : n.services) config["services"].push_back(row_json(s));
        for (const auto& s : n.software) config["software"].push_back(row_json(s));
        for (const auto& a : plan.acls) {
            if (a.src == n.id || a.dst == n.id) config["acls"].push_back(row_json(a));
        }
        backend.upload_startup_config(n.id, config.dump());
    }

    for (const auto& f : plan.flows) {
        EdgeProbe probe{f.name, f.src, f.dst, backend.probe_edge(f.src, f.dst)};
        if (!probe.reachable) {
            report.failures.push_back("dataFlow " + f.name + " (" + f.src + " -> " + f.dst + ") unreachable");
        }
        report.edges.push_back(std::move(probe));
    }
    report.goal = plan.goals.empty() ? std::string() : plan.goals.front();
    const std::vector<std::string> hosts = plan.paths.empty() ? std::vector<std::string>{} : plan.paths.front();
    report.goal_achievable = backend.run_goal_probe(report.goal, hosts);
    if (!report.goal_achievable) report.failures.push_back("goal " + report.goal + " not achievable on the twin");
    report.passed = report.failures.empty();
    return report;
}

std::string report_to_json(const ValidationReport& report) {
    json edges = json::array();
    for (const auto& e : report.edges) {
        edges.push_back({{"flow", e.flow}, {"src", e.src}, {"dst", e.dst}, {"reachable", e.reachable}});
    }
    json doc = {{"status", report.empty ? "empty" : (report.passed ? "pass" : "fail")},
                {"passed", report.passed},
                {"probes", report.edges.size() + (report.empty ? 0 : 1)},
                {"edges", edges},
                {"goal", {{"atom", report.goal}, {"achievable", report.goal_achievable}}},
                {"failures", report.failures}};
    return doc.dump(2) + "\n";
}

} // namespace scytag
