#include "scytag/scenario_mapper.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <set>

#include <yaml-cpp/yaml.h>

#include "csv.hpp"
#include "scytag/error.hpp"

namespace scytag {

namespace {

std::vector<YAML::Node> load_documents(std::string_view yaml, const char* what) {
    try {
        return YAML::LoadAll(std::string(yaml));
    } catch (const YAML::Exception& e) {
        throw ParseError(std::string(what) + ": " + e.what(), e.mark.line + 1, e.mark.column + 1);
    }
}

YAML::Node load_document(std::string_view yaml, const char* what) {
    try {
        return YAML::Load(std::string(yaml));
    } catch (const YAML::Exception& e) {
        throw ParseError(std::string(what) + ": " + e.what(), e.mark.line + 1, e.mark.column + 1);
    }
}

std::string scalar(const YAML::Node& node, const char* key, const std::string& where, bool required) {
    const YAML::Node v = node[key];
    if (!v || v.IsNull()) {
        if (required) throw ParseError(where + "." + key + ": missing field");
        return {};
    }
    if (!v.IsScalar()) throw ParseError(where + "." + key + ": expected a scalar");
    return v.as<std::string>();
}

AbilityDef read_ability(const YAML::Node& node, const std::string& where) {
    if (!node.IsMap()) throw ParseError(where + ": expected a mapping");
    AbilityDef a;
    a.name = scalar(node, "name", where, true);
    a.ability_number = scalar(node, "ability_number", where, true);
    a.technique = scalar(node, "technique", where, true);
    a.technique_name = scalar(node, "technique_name", where, false);
    a.description = scalar(node, "description", where, false);
    a.type = scalar(node, "type", where, false);
    if (const YAML::Node tags = node["tags"]; tags && !tags.IsNull()) {
        if (!tags.IsSequence()) throw ParseError(where + ".tags: expected a sequence");
        for (const auto& t : tags) a.tags.push_back(t.as<std::string>());
    }
    a.platform = scalar(node, "platform", where, false);
    a.executor = scalar(node, "executor", where, false);
    a.command = scalar(node, "command", where, false);
    return a;
}

std::string stub_number(const std::string& technique, std::size_t ordinal) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : technique + "#" + std::to_string(ordinal)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "00000000-0000-4000-8000-%012llx",
                  static_cast<unsigned long long>(h & 0xffffffffffffULL));
    return buf;
}

} // namespace

bool is_technique_id(std::string_view id) {
    static const std::regex pattern(R"(T\d{4}(\.\d{3})?)");
    return std::regex_match(id.begin(), id.end(), pattern);
}

std::vector<std::string> placeholders(std::string_view command) {
    static const std::regex valid(R"(#\{[a-z]+\.[a-z_]+\})");
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = command.find("#{", pos)) != std::string_view::npos) {
        const std::size_t close = command.find('}', pos);
        if (close == std::string_view::npos) {
            throw ValidationError("unterminated placeholder in command: " + std::string(command.substr(pos)));
        }
        const std::string token(command.substr(pos, close - pos + 1));
        if (!std::regex_match(token, valid)) throw ValidationError("malformed placeholder " + token);
        out.push_back(token.substr(2, token.size() - 3));
        pos = close + 1;
    }
    return out;
}

std::vector<AbilityDef> parse_ability_catalog(std::string_view yaml) {
    std::vector<AbilityDef> out;
    const auto docs = load_documents(yaml, "ability catalog");
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const YAML::Node& doc = docs[d];
        const std::string where = "document " + std::to_string(d + 1);
        if (doc.IsNull()) continue;
        if (doc.IsSequence()) {
            for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(read_ability(doc[i], where + "[" + std::to_string(i) + "]"));
        } else {
            out.push_back(read_ability(doc, where));
        }
    }
    std::set<std::string> numbers;
    for (const auto& a : out) {
        if (!numbers.insert(a.ability_number).second) throw ValidationError("duplicate ability_number " + a.ability_number);
        if (!is_technique_id(a.technique)) {
            throw ValidationError("ability " + a.ability_number + ": bad technique id '" + a.technique + "'");
        }
        placeholders(a.command);
    }
    return out;
}

std::string abilities_to_yaml(const std::vector<AbilityDef>& abilities) {
    YAML::Emitter e;
    e << YAML::BeginSeq;
    for (const auto& a : abilities) {
        e << YAML::BeginMap;
        e << YAML::Key << "name" << YAML::Value << a.name;
        e << YAML::Key << "ability_number" << YAML::Value << a.ability_number;
        e << YAML::Key << "technique" << YAML::Value << a.technique;
        e << YAML::Key << "technique_name" << YAML::Value << a.technique_name;
        e << YAML::Key << "description" << YAML::Value << a.description;
        e << YAML::Key << "type" << YAML::Value << a.type;
        e << YAML::Key << "tags" << YAML::Value << YAML::BeginSeq;
        for (const auto& t : a.tags) e << t;
        e << YAML::EndSeq;
        e << YAML::Key << "platform" << YAML::Value << a.platform;
        e << YAML::Key << "executor" << YAML::Value << a.executor;
        e << YAML::Key << "command" << YAML::Value << a.command;
        e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    return std::string(e.c_str()) + "\n";
}

MappingTables parse_mapping_tables(std::string_view ability_csv, std::string_view ir_csv) {
    MappingTables out;
    for (const auto& row : detail::parse_csv_table(ability_csv, {"technique_id", "ability_number"})) {
        if (!is_technique_id(row[0])) throw ValidationError("ability map: bad technique id '" + row[0] + "'");
        out.abilities.emplace(row[0], row[1]);
    }
    for (const auto& row : detail::parse_csv_table(ir_csv, {"technique_id", "ir_file"})) {
        if (!is_technique_id(row[0])) throw ValidationError("IR map: bad technique id '" + row[0] + "'");
        out.irs.emplace(row[0], row[1]);
    }
    return out;
}

AbilityMapping map_techniques_to_abilities(const std::vector<std::string>& techniques,
                                           const std::vector<AbilityDef>& catalog, const MappingTables& tables) {
    std::map<std::string, const AbilityDef*> by_number;
    for (const auto& a : catalog) by_number.emplace(a.ability_number, &a);

    AbilityMapping out;
    for (std::size_t i = 0; i < techniques.size(); ++i) {
        const std::string& t = techniques[i];
        if (!is_technique_id(t)) throw ValidationError("bad technique id '" + t + "'");
        const AbilityDef* best = nullptr;
        auto [lo, hi] = tables.abilities.equal_range(t);
        for (auto it = lo; it != hi; ++it) {
            auto found = by_number.find(it->second);
            if (found != by_number.end() && (!best || found->second->ability_number < best->ability_number)) {
                best = found->second;
            }
        }
        if (best) {
            out.abilities.push_back(*best);
            continue;
        }
        AbilityDef stub;
        stub.name = "Stub for " + t;
        stub.ability_number = stub_number(t, i);
        stub.technique = t;
        stub.description = "No ability mapped; needs analyst review.";
        stub.type = "manual";
        stub.tags = {"stub"};
        out.abilities.push_back(std::move(stub));
        out.unmatched.emplace_back(i, t);
    }
    return out;
}

IrMapping map_techniques_to_irs(const std::vector<std::string>& techniques, const MappingTables& tables) {
    IrMapping out;
    std::set<std::string> seen_files;
    std::set<std::string> seen_missing;
    for (const auto& t : techniques) {
        if (!is_technique_id(t)) throw ValidationError("bad technique id '" + t + "'");
        auto [lo, hi] = tables.irs.equal_range(t);
        if (lo == hi) {
            if (seen_missing.insert(t).second) out.unmodeled.push_back(t);
            continue;
        }
        for (auto it = lo; it != hi; ++it) {
            if (seen_files.insert(it->second).second) out.files.push_back(it->second);
        }
    }
    return out;
}

std::vector<std::string> Scenario::techniques() const {
    std::vector<std::string> out;
    for (const auto& s : steps) out.push_back(s.technique);
    return out;
}

Scenario parse_scenario(std::string_view yaml) {
    const YAML::Node doc = load_document(yaml, "scenario");
    if (!doc.IsMap()) throw ParseError("scenario: expected a mapping");
    Scenario out;
    out.name = scalar(doc, "name", "scenario", false);
    const YAML::Node steps = doc["steps"];
    if (!steps || !steps.IsSequence()) throw ParseError("scenario.steps: expected a sequence");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const std::string where = "scenario.steps[" + std::to_string(i) + "]";
        if (!steps[i].IsMap()) throw ParseError(where + ": expected a mapping");
        ScenarioStep s;
        s.technique = scalar(steps[i], "technique", where, true);
        if (!is_technique_id(s.technique)) throw ValidationError(where + ": bad technique id '" + s.technique + "'");
        s.ag_step = scalar(steps[i], "ag_step", where, true);
        s.host = scalar(steps[i], "host", where, true);
        s.resource = scalar(steps[i], "resource", where, false);
        out.steps.push_back(std::move(s));
    }
    return out;
}

Profile build_profile(const Scenario& scenario, const AbilityMapping& mapping) {
    if (mapping.abilities.size() != scenario.steps.size()) {
        throw ValidationError("ability mapping does not cover the scenario steps");
    }
    Profile out;
    out.name = scenario.name;
    for (std::size_t i = 0; i < scenario.steps.size(); ++i) {
        const auto& s = scenario.steps[i];
        out.steps.push_back({mapping.abilities[i].ability_number, s.ag_step, s.host, s.resource});
    }
    return out;
}

Profile parse_profile(std::string_view yaml) {
    const YAML::Node doc = load_document(yaml, "profile");
    if (!doc.IsMap()) throw ParseError("profile: expected a mapping");
    Profile out;
    out.name = scalar(doc, "name", "profile", false);
    const YAML::Node steps = doc["atomic_ordering"];
    if (!steps || !steps.IsSequence()) throw ParseError("profile.atomic_ordering: expected a sequence");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const std::string where = "profile.atomic_ordering[" + std::to_string(i) + "]";
        const YAML::Node& s = steps[i];
        if (s.IsScalar()) {
            out.steps.push_back({s.as<std::string>(), "", "", ""});
            continue;
        }
        if (!s.IsMap()) throw ParseError(where + ": expected a mapping or an ability number");
        out.steps.push_back({scalar(s, "ability_number", where, true), scalar(s, "ag_step", where, false),
                             scalar(s, "host", where, false), scalar(s, "resource", where, false)});
    }
    return out;
}

std::string profile_to_yaml(const Profile& profile) {
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << profile.name;
    e << YAML::Key << "atomic_ordering" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : profile.steps) {
        e << YAML::BeginMap;
        e << YAML::Key << "ability_number" << YAML::Value << s.ability_number;
        e << YAML::Key << "ag_step" << YAML::Value << YAML::DoubleQuoted << s.ag_step;
        e << YAML::Key << "host" << YAML::Value << s.host;
        if (!s.resource.empty()) e << YAML::Key << "resource" << YAML::Value << s.resource;
        e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

} // namespace scytag
