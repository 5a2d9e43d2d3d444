#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scytag/datalog.hpp"
#include "scytag/derivation_graph.hpp"
#include "scytag/path_reducer.hpp"
#include "scytag/topology.hpp"

namespace scytag {

/// Why a node is in the twin. Order is display priority.
enum class Reason { ag_path, connectivity, gateway, dns_ad, firewall };

std::string_view to_string(Reason reason);
Reason parse_reason(std::string_view text);

using LinkKey = std::pair<std::string, std::string>;

/// Endpoints in sorted order.
LinkKey link_key(std::string a, std::string b);

struct AssetSet {
    std::map<std::string, std::set<Reason>> hosts;
    std::set<LinkKey> links;
    std::vector<ServiceRow> services;
    std::vector<SoftwareRow> software;
    std::vector<AclRow> acls;
    std::vector<Flow> flows;
    /// vulExists atoms referenced by the graph.
    FactBase vulnerabilities;
    /// Host sequence of every enumerated attack path.
    std::vector<std::vector<std::string>> paths;
    /// Goal atoms, as text.
    std::vector<std::string> goals;

    bool empty() const noexcept { return hosts.empty(); }
};

/// Hosts named by the graph plus, for each, its default gateway chain, its
/// DNS/AD server and the firewalls on its route to egress. Throws
/// ConsistencyError when the graph names a host the topology lacks.
AssetSet select_assets(const DerivationGraph& graph, const Topology& topology, const ReductionPolicy& policy);

/// Adds the shortest physical route for every consecutive host pair on every
/// path, every retained flow, and every host to its gateway and DNS server.
/// Throws InfeasibleError naming the pair when no route exists.
AssetSet complete_connectivity(AssetSet assets, const Topology& topology);

struct TemplateEntry {
    std::string template_id;
    /// linux or windows; empty means "take it from the node OS".
    std::string platform;
};

using TemplateCatalog = std::map<std::string, TemplateEntry, std::less<>>;

/// JSON map device class -> template id, or -> {template, platform}.
TemplateCatalog parse_template_catalog(std::string_view document);

struct PlanNode {
    std::string id;
    std::string device_class;
    std::string template_id;
    std::string platform;
    std::string os;
    std::vector<std::string> addresses;
    std::vector<Reason> reasons;
    std::vector<ServiceRow> services;
    std::vector<SoftwareRow> software;
};

struct TwinPlan {
    std::vector<PlanNode> nodes;
    std::vector<LinkKey> links;
    std::vector<AclRow> acls;
    std::vector<int> vlans;
    std::vector<Flow> flows;
    std::map<std::string, std::string> host_map;
    std::vector<std::string> goals;
    std::vector<std::vector<std::string>> paths;

    const PlanNode* find(std::string_view id) const;
    bool empty() const noexcept { return nodes.empty(); }
};

/// Throws AbortError naming the device class when no template exists.
TwinPlan build_twin_plan(const AssetSet& assets, const Topology& topology, const TemplateCatalog& catalog);

std::string plan_to_json(const TwinPlan& plan);
TwinPlan parse_plan_json(std::string_view document);

/// Sub-topology induced by the plan nodes and links; used to re-derive the
/// graph on the twin.
Topology twin_topology(const TwinPlan& plan, const Topology& full);

/// Facts whose node-valued arguments all name twin nodes.
FactBase restrict_facts(const FactBase& facts, const Topology& full, const std::set<std::string>& twin_nodes);

/// Operations a virtualization backend must offer to host a twin.
class TwinBackend {
public:
    virtual ~TwinBackend() = default;
    virtual void create_node(const PlanNode& node) = 0;
    virtual void create_link(const std::string& a, const std::string& b) = 0;
    virtual void upload_startup_config(const std::string& node, const std::string& config) = 0;
    /// True when `dst` answers from `src`.
    virtual bool probe_edge(const std::string& src, const std::string& dst) = 0;
    /// True when every host of the attack path can reach the next one.
    virtual bool run_goal_probe(const std::string& goal, const std::vector<std::string>& hosts) = 0;
};

/// In-memory backend. Reachability is graph connectivity over created links.
class MockBackend : public TwinBackend {
public:
    explicit MockBackend(bool online = true) : online_(online) {}

    void create_node(const PlanNode& node) override;
    void create_link(const std::string& a, const std::string& b) override;
    void upload_startup_config(const std::string& node, const std::string& config) override;
    bool probe_edge(const std::string& src, const std::string& dst) override;
    bool run_goal_probe(const std::string& goal, const std::vector<std::string>& hosts) override;

    void set_online(bool online) { online_ = online; }
    /// Session state (nodes, links, configs, probe log) as JSON.
    std::string session_json() const;
    void save_session(const std::string& path) const;

private:
    void require_online(const char* operation) const;
    bool reachable(const std::string& src, const std::string& dst) const;

    bool online_;
    std::map<std::string, std::string> nodes_;
    std::set<LinkKey> links_;
    std::map<std::string, std::string> configs_;
    std::vector<std::string> log_;
};

struct EdgeProbe {
    std::string flow;
    std::string src;
    std::string dst;
    bool reachable = false;
};

struct ValidationReport {
    bool passed = false;
    bool empty = false;
    std::vector<EdgeProbe> edges;
    std::string goal;
    bool goal_achievable = false;
    std::vector<std::string> failures;
};

/// Instantiates the plan on the backend, probes every flow and runs one goal
/// probe. Backend outages surface as InfrastructureError.
ValidationReport sanity_validate(const TwinPlan& plan, TwinBackend& backend);

std::string report_to_json(const ValidationReport& report);

} // namespace scytag
