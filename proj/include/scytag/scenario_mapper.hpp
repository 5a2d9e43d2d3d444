#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scytag {

bool is_technique_id(std::string_view id);

struct AbilityDef {
    std::string name;
    std::string ability_number;
    std::string technique;
    std::string technique_name;
    std::string description;
    std::string type;
    std::vector<std::string> tags;
    std::string platform;
    std::string executor;
    std::string command;
};

/// `#{namespace.key}` occurrences in a command, in order.
std::vector<std::string> placeholders(std::string_view command);

/// YAML: one ability per document, or a sequence of abilities. Throws
/// ValidationError on duplicate ability numbers, bad technique ids or
/// malformed placeholders.
std::vector<AbilityDef> parse_ability_catalog(std::string_view yaml);
std::string abilities_to_yaml(const std::vector<AbilityDef>& abilities);

struct MappingTables {
    std::multimap<std::string, std::string> abilities;
    std::multimap<std::string, std::string> irs;
};

/// CSVs `technique_id,ability_number` and `technique_id,ir_file`.
MappingTables parse_mapping_tables(std::string_view ability_csv, std::string_view ir_csv);

struct AbilityMapping {
    /// One entry per input technique, stubs included.
    std::vector<AbilityDef> abilities;
    /// Techniques that received a stub, with their 0-based ordinal.
    std::vector<std::pair<std::size_t, std::string>> unmatched;
};

/// Smallest ability number wins when several candidates exist. Techniques
/// without a candidate get a manual stub tagged `stub`.
AbilityMapping map_techniques_to_abilities(const std::vector<std::string>& techniques,
                                           const std::vector<AbilityDef>& catalog, const MappingTables& tables);

struct IrMapping {
    /// Deduplicated, in order of first use.
    std::vector<std::string> files;
    std::vector<std::string> unmodeled;
};

IrMapping map_techniques_to_irs(const std::vector<std::string>& techniques, const MappingTables& tables);

/// Ordered scenario steps, each tied to the attack-graph atom it realizes.
struct ScenarioStep {
    std::string technique;
    /// Atom pattern; `_` matches anything.
    std::string ag_step;
    std::string host;
    /// Optional shared resource that forces sequential execution.
    std::string resource;
};

struct Scenario {
    std::string name;
    std::vector<ScenarioStep> steps;

    std::vector<std::string> techniques() const;
};

/// YAML `{name, steps: [{technique, ag_step, host, resource?}]}`.
Scenario parse_scenario(std::string_view yaml);

struct ProfileStep {
    std::string ability_number;
    std::string ag_step;
    std::string host;
    std::string resource;
};

/// Adversary profile in the `atomic_ordering` shape.
struct Profile {
    std::string name;
    std::vector<ProfileStep> steps;
};

Profile build_profile(const Scenario& scenario, const AbilityMapping& mapping);
Profile parse_profile(std::string_view yaml);
std::string profile_to_yaml(const Profile& profile);

} // namespace scytag
