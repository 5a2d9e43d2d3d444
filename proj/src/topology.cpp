#include "scytag/topology.hpp"

#include <map>
#include <set>

#include "json.hpp"

#include "csv.hpp"
#include "scytag/error.hpp"

namespace scytag {

using nlohmann::json;

namespace {

std::string path_of(std::string_view array, std::size_t index, std::string_view field = {}) {
    std::string p = std::string(array) + "[" + std::to_string(index) + "]";
    if (!field.empty()) p += "." + std::string(field);
    return p;
}

std::string required_string(const json& obj, std::string_view array, std::size_t index, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end()) throw ParseError(path_of(array, index, field) + ": missing field");
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    if (!it->is_string()) throw ParseError(path_of(array, index, field) + ": expected string");
    return it->get<std::string>();
}

std::string optional_string(const json& obj, std::string_view array, std::size_t index, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw ParseError(path_of(array, index, field) + ": expected string");
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, std::string_view array, std::size_t index, const char* field) {
    std::vector<std::string> out;
    auto it = obj.find(field);
    if (it == obj.end()) return out;
    if (!it->is_array()) throw ParseError(path_of(array, index, field) + ": expected array");
    for (std::size_t k = 0; k < it->size(); ++k) {
        const json& v = (*it)[k];
        if (!v.is_string()) {
            throw ParseError(path_of(array, index, field) + "[" + std::to_string(k) + "]: expected string");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

template <class Fn>
void for_each_row(const json& doc, const char* array, Fn&& fn) {
    auto it = doc.find(array);
    if (it == doc.end()) return;
    if (!it->is_array()) throw ParseError(std::string(array) + ": expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& row = (*it)[i];
        if (!row.is_object()) throw ParseError(path_of(array, i) + ": expected object");
        fn(row, i);
    }
}

void require_node(const std::set<std::string, std::less<>>& ids, const std::string& ref, const std::string& where) {
    if (!ids.contains(ref)) throw ValidationError(where + " references unknown node \"" + ref + "\"");
}

void require_constant(const std::string& value, const std::string& where) {
    if (value.empty()) throw ValidationError(where + " is empty");
}

template <class Row, class Key>
void require_unique(const std::vector<Row>& rows, const char* array, Key&& key) {
    std::set<decltype(key(rows.front()))> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!seen.insert(key(rows[i])).second) throw ValidationError(path_of(array, i) + " duplicates an earlier row");
    }
}

} // namespace

const Node* Topology::find(std::string_view id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

void validate_topology(const Topology& t) {
    std::set<std::string, std::less<>> ids;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const Node& n = t.nodes[i];
        require_constant(n.id, path_of("nodes", i, "id"));
        if (!ids.insert(n.id).second) throw ValidationError("duplicate node id \"" + n.id + "\"");
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const Node& n = t.nodes[i];
        if (!n.gateway.empty()) require_node(ids, n.gateway, path_of("nodes", i, "gateway"));
        if (!n.dns.empty()) require_node(ids, n.dns, path_of("nodes", i, "dns"));
    }
    for (std::size_t i = 0; i < t.interfaces.size(); ++i) {
        require_node(ids, t.interfaces[i].node, path_of("interfaces", i, "node"));
    }
    for (std::size_t i = 0; i < t.links.size(); ++i) {
        require_node(ids, t.links[i].a, path_of("links", i, "a"));
        require_node(ids, t.links[i].b, path_of("links", i, "b"));
        if (t.links[i].a == t.links[i].b) throw ValidationError(path_of("links", i) + " is a self-loop on \"" + t.links[i].a + "\"");
    }
    for (std::size_t i = 0; i < t.software.size(); ++i) {
        const auto& s = t.software[i];
        require_node(ids, s.node, path_of("software", i, "node"));
        require_constant(s.software, path_of("software", i, "software"));
        require_constant(s.version, path_of("software", i, "version"));
    }
    for (std::size_t i = 0; i < t.services.size(); ++i) {
        const auto& s = t.services[i];
        require_node(ids, s.node, path_of("services", i, "node"));
        require_constant(s.software, path_of("services", i, "software"));
        require_constant(s.protocol, path_of("services", i, "protocol"));
        require_constant(s.port, path_of("services", i, "port"));
        require_constant(s.account, path_of("services", i, "account"));
    }
    for (std::size_t i = 0; i < t.acls.size(); ++i) {
        const auto& a = t.acls[i];
        require_node(ids, a.src, path_of("acls", i, "src"));
        require_node(ids, a.dst, path_of("acls", i, "dst"));
        require_constant(a.protocol, path_of("acls", i, "protocol"));
        require_constant(a.port, path_of("acls", i, "port"));
    }
    std::set<std::string> subnet_names;
    for (std::size_t i = 0; i < t.subnets.size(); ++i) {
        const auto& s = t.subnets[i];
        require_constant(s.name, path_of("subnets", i, "name"));
        if (!subnet_names.insert(s.name).second) throw ValidationError("duplicate subnet \"" + s.name + "\"");
        std::set<std::string> seen;
        for (const auto& m : s.members) {
            require_node(ids, m, path_of("subnets", i, "members"));
            if (!seen.insert(m).second) throw ValidationError(path_of("subnets", i, "members") + " repeats \"" + m + "\"");
        }
        std::set<std::string> ports;
        for (const auto& p : s.virtual_ports) {
            require_constant(p, path_of("subnets", i, "virtual_ports"));
            if (!ports.insert(p).second) throw ValidationError(path_of("subnets", i, "virtual_ports") + " repeats \"" + p + "\"");
        }
    }
    std::set<std::string> flow_names;
    for (std::size_t i = 0; i < t.flows.size(); ++i) {
        const auto& f = t.flows[i];
        require_constant(f.name, path_of("flows", i, "name"));
        if (!flow_names.insert(f.name).second) throw ValidationError("duplicate flow \"" + f.name + "\"");
        require_node(ids, f.src, path_of("flows", i, "src"));
        require_node(ids, f.dst, path_of("flows", i, "dst"));
        if (f.direction != "inbound" && f.direction != "outbound" && f.direction != "bidirectional") {
            throw ValidationError(path_of("flows", i, "direction") + " must be inbound, outbound or bidirectional, got \"" +
                                  f.direction + "\"");
        }
    }
    for (std::size_t i = 0; i < t.data_bindings.size(); ++i) {
        const auto& b = t.data_bindings[i];
        if (!flow_names.contains(b.flow)) {
            throw ValidationError(path_of("data_bindings", i, "flow") + " references unknown flow \"" + b.flow + "\"");
        }
        require_node(ids, b.host, path_of("data_bindings", i, "host"));
        require_constant(b.path, path_of("data_bindings", i, "path"));
    }

    require_unique(t.interfaces, "interfaces", [](const Interface& r) { return std::tuple(r.node, r.name); });
    require_unique(t.software, "software", [](const SoftwareRow& r) { return std::tuple(r.node, r.software, r.version); });
    require_unique(t.services, "services", [](const ServiceRow& r) {
        return std::tuple(r.node, r.software, r.protocol, r.port, r.account);
    });
    require_unique(t.acls, "acls", [](const AclRow& r) { return std::tuple(r.src, r.dst, r.protocol, r.port); });
    require_unique(t.data_bindings, "data_bindings", [](const DataBinding& r) { return std::tuple(r.flow, r.host, r.path); });
    {
        std::set<std::pair<std::string, std::string>> seen;
        for (std::size_t i = 0; i < t.interfaces.size(); ++i) {
            const auto& r = t.interfaces[i];
            if (!r.address.empty() && !seen.insert({r.address, r.node}).second) {
                throw ValidationError(path_of("interfaces", i, "address") + " duplicates an earlier address");
            }
        }
    }
}

Topology parse_topology(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("topology: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("$: expected a JSON object");

    Topology t;
    for_each_row(doc, "nodes", [&](const json& r, std::size_t i) {
        Node n;
        n.id = required_string(r, "nodes", i, "id");
        n.device_class = required_string(r, "nodes", i, "device_class");
        n.os = optional_string(r, "nodes", i, "os");
        if (auto role = optional_string(r, "nodes", i, "role"); !role.empty()) n.role = role;
        n.gateway = optional_string(r, "nodes", i, "gateway");
        n.dns = optional_string(r, "nodes", i, "dns");
        t.nodes.push_back(std::move(n));
    });
    for_each_row(doc, "interfaces", [&](const json& r, std::size_t i) {
        t.interfaces.push_back({required_string(r, "interfaces", i, "node"), optional_string(r, "interfaces", i, "name"),
                                optional_string(r, "interfaces", i, "address")});
    });
    for_each_row(doc, "links", [&](const json& r, std::size_t i) {
        t.links.push_back({required_string(r, "links", i, "a"), required_string(r, "links", i, "b")});
    });
    for_each_row(doc, "software", [&](const json& r, std::size_t i) {
        t.software.push_back({required_string(r, "software", i, "node"), required_string(r, "software", i, "software"),
                              required_string(r, "software", i, "version")});
    });
    for_each_row(doc, "services", [&](const json& r, std::size_t i) {
        t.services.push_back({required_string(r, "services", i, "node"), required_string(r, "services", i, "software"),
                              required_string(r, "services", i, "protocol"), required_string(r, "services", i, "port"),
                              required_string(r, "services", i, "account")});
    });
    for_each_row(doc, "acls", [&](const json& r, std::size_t i) {
        t.acls.push_back({required_string(r, "acls", i, "src"), required_string(r, "acls", i, "dst"),
                          required_string(r, "acls", i, "protocol"), required_string(r, "acls", i, "port")});
    });
    for_each_row(doc, "subnets", [&](const json& r, std::size_t i) {
        Subnet s;
        s.name = required_string(r, "subnets", i, "name");
        if (auto it = r.find("vlan"); it != r.end() && !it->is_null()) {
            if (!it->is_number_integer()) throw ParseError(path_of("subnets", i, "vlan") + ": expected integer");
            s.vlan = it->get<int>();
        }
        s.members = string_list(r, "subnets", i, "members");
        s.virtual_ports = string_list(r, "subnets", i, "virtual_ports");
        t.subnets.push_back(std::move(s));
    });
    for_each_row(doc, "flows", [&](const json& r, std::size_t i) {
        t.flows.push_back({required_string(r, "flows", i, "name"), required_string(r, "flows", i, "src"),
                           required_string(r, "flows", i, "dst"), required_string(r, "flows", i, "direction")});
    });
    for_each_row(doc, "data_bindings", [&](const json& r, std::size_t i) {
        t.data_bindings.push_back({required_string(r, "data_bindings", i, "flow"),
                                   required_string(r, "data_bindings", i, "host"),
                                   required_string(r, "data_bindings", i, "path")});
    });
    validate_topology(t);
    return t;
}

std::string topology_to_json(const Topology& t) {
    json doc = json::object();
    json nodes = json::array();
    for (const auto& n : t.nodes) {
        json o = {{"id", n.id}, {"device_class", n.device_class}, {"os", n.os}, {"role", n.role}};
        if (!n.gateway.empty()) o["gateway"] = n.gateway;
        if (!n.dns.empty()) o["dns"] = n.dns;
        nodes.push_back(std::move(o));
    }
    doc["nodes"] = std::move(nodes);
    doc["interfaces"] = json::array();
    for (const auto& r : t.interfaces) doc["interfaces"].push_back({{"node", r.node}, {"name", r.name}, {"address", r.address}});
    doc["links"] = json::array();
    for (const auto& r : t.links) doc["links"].push_back({{"a", r.a}, {"b", r.b}});
    doc["software"] = json::array();
    for (const auto& r : t.software) doc["software"].push_back({{"node", r.node}, {"software", r.software}, {"version", r.version}});
    doc["services"] = json::array();
    for (const auto& r : t.services) {
        doc["services"].push_back({{"node", r.node}, {"software", r.software}, {"protocol", r.protocol},
                                   {"port", r.port}, {"account", r.account}});
    }
    doc["acls"] = json::array();
    for (const auto& r : t.acls) doc["acls"].push_back({{"src", r.src}, {"dst", r.dst}, {"protocol", r.protocol}, {"port", r.port}});
    doc["subnets"] = json::array();
    for (const auto& s : t.subnets) {
        json o = {{"name", s.name}, {"members", s.members}, {"virtual_ports", s.virtual_ports}};
        if (s.vlan) o["vlan"] = *s.vlan;
        doc["subnets"].push_back(std::move(o));
    }
    doc["flows"] = json::array();
    for (const auto& f : t.flows) doc["flows"].push_back({{"name", f.name}, {"src", f.src}, {"dst", f.dst}, {"direction", f.direction}});
    doc["data_bindings"] = json::array();
    for (const auto& b : t.data_bindings) doc["data_bindings"].push_back({{"flow", b.flow}, {"host", b.host}, {"path", b.path}});
    return doc.dump(2) + "\n";
}

const std::vector<std::string>& topology_predicates() {
    static const std::vector<std::string> names = {"dataBind", "dataFlow", "isInSubnet", "belongsTo",
                                                   "hasIP",    "networkService", "hacl", "residesOn"};
    return names;
}

FactBase emit_topology_facts(const Topology& t) {
    FactBase out;
    for (const auto& s : t.subnets) {
        for (const auto& m : s.members) out.insert({"isInSubnet", {s.name, m}});
        for (const auto& p : s.virtual_ports) out.insert({"belongsTo", {s.name, p}});
    }
    for (const auto& i : t.interfaces) {
        if (!i.address.empty()) out.insert({"hasIP", {i.address, i.node}});
    }
    for (const auto& s : t.services) out.insert({"networkService", {s.node, s.software, s.protocol, s.port, s.account}});
    for (const auto& a : t.acls) out.insert({"hacl", {a.src, a.dst, a.protocol, a.port}});
    for (const auto& s : t.software) out.insert({"residesOn", {s.node, s.software, s.version}});
    for (const auto& f : t.flows) out.insert({"dataFlow", {f.src, f.dst, f.name, f.direction}});
    for (const auto& b : t.data_bindings) out.insert({"dataBind", {b.flow, b.host, b.path}});
    return out;
}

std::vector<VulnRecord> parse_vuln_catalog(std::string_view csv) {
    static const std::vector<std::string> header = {"cve_id", "software", "version", "access_vector", "lose_types", "severity"};
    std::vector<VulnRecord> out;
    const auto rows = detail::parse_csv_table(csv, header);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (r[k].empty()) throw ParseError("vulnerability catalog: empty " + header[k], i + 2, k + 1);
        }
        out.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
    }
    return out;
}

VulnMapping map_vulnerabilities(const std::vector<SoftwareRow>& inventory, const std::vector<VulnRecord>& catalog) {
    std::multimap<std::pair<std::string, std::string>, const VulnRecord*> by_key;
    for (const auto& v : catalog) by_key.emplace(std::pair(v.software, v.version), &v);

    VulnMapping out;
    for (const auto& row : inventory) {
        auto [lo, hi] = by_key.equal_range({row.software, row.version});
        if (lo == hi) {
            out.unmatched.push_back(row);
            continue;
        }
        for (auto it = lo; it != hi; ++it) {
            const VulnRecord& v = *it->second;
            out.facts.insert({"vulExists", {v.cve_id, v.software, v.version, v.access_vector, v.lose_types, v.severity}});
        }
    }
    return out;
}

} // namespace scytag
