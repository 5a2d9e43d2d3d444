#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scytag/datalog.hpp"

namespace scytag {

struct Node {
    std::string id;
    std::string device_class;
    std::string os;
    /// host, switch, router, firewall, dns, cloud, ...
    std::string role = "host";
    /// Default gateway and first-hop DNS/AD server; empty when absent.
    std::string gateway;
    std::string dns;
};

struct Interface {
    std::string node;
    std::string name;
    std::string address;
};

struct Link {
    std::string a;
    std::string b;
};

struct SoftwareRow {
    std::string node;
    std::string software;
    std::string version;
};

struct ServiceRow {
    std::string node;
    std::string software;
    std::string protocol;
    std::string port;
    std::string account;
};

struct AclRow {
    std::string src;
    std::string dst;
    std::string protocol;
    std::string port;
};

struct Subnet {
    std::string name;
    std::optional<int> vlan;
    std::vector<std::string> members;
    std::vector<std::string> virtual_ports;
};

struct Flow {
    std::string name;
    std::string src;
    std::string dst;
    /// inbound, outbound or bidirectional
    std::string direction;
};

struct DataBinding {
    std::string flow;
    std::string host;
    std::string path;
};

struct Topology {
    std::vector<Node> nodes;
    std::vector<Interface> interfaces;
    std::vector<Link> links;
    std::vector<SoftwareRow> software;
    std::vector<ServiceRow> services;
    std::vector<AclRow> acls;
    std::vector<Subnet> subnets;
    std::vector<Flow> flows;
    std::vector<DataBinding> data_bindings;

    const Node* find(std::string_view id) const;
    bool has_node(std::string_view id) const { return find(id) != nullptr; }
};

/// Checks every referential invariant; throws ValidationError naming the
/// offending reference.
void validate_topology(const Topology& topology);

/// Parses and validates a topology JSON document. Malformed structure throws
/// ParseError with a JSON path in the message.
Topology parse_topology(std::string_view document);

std::string topology_to_json(const Topology& topology);

/// The eight wiring predicates a topology may emit.
const std::vector<std::string>& topology_predicates();

/// One fact per schema row. Links emit nothing.
FactBase emit_topology_facts(const Topology& topology);

struct VulnRecord {
    std::string cve_id;
    std::string software;
    std::string version;
    std::string access_vector;
    std::string lose_types;
    std::string severity;
};

/// CSV with header `cve_id,software,version,access_vector,lose_types,severity`.
std::vector<VulnRecord> parse_vuln_catalog(std::string_view csv);

struct VulnMapping {
    FactBase facts;
    /// Inventory rows whose (software, version) has no catalog entry.
    std::vector<SoftwareRow> unmatched;
};

VulnMapping map_vulnerabilities(const std::vector<SoftwareRow>& inventory,
                                const std::vector<VulnRecord>& catalog);

} // namespace scytag
