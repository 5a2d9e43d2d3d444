#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "scytag/error.hpp"
#include "scytag/scenario_mapper.hpp"
#include "support.hpp"

using namespace scytag;
using testing_support::fixture_text;

namespace {

struct Case {
    std::vector<AbilityDef> catalog;
    MappingTables tables;
    Scenario scenario;
};

Case load_case(const std::string& name) {
    return {parse_ability_catalog(fixture_text(name, "abilities.yml")),
            parse_mapping_tables(fixture_text(name, "map_abilities.csv"), fixture_text(name, "map_irs.csv")),
            parse_scenario(fixture_text(name, "scenario.yml"))};
}

std::vector<std::string> numbers(const std::vector<AbilityDef>& abilities) {
    std::vector<std::string> out;
    for (const auto& a : abilities) out.push_back(a.ability_number);
    return out;
}

} // namespace

TEST_CASE("T1548.002 maps to the bypass UAC ability") {
    const Case c = load_case("bank");
    const AbilityMapping m = map_techniques_to_abilities({"T1548.002"}, c.catalog, c.tables);
    REQUIRE(m.abilities.size() == 1);
    CHECK(m.abilities[0].ability_number == "e3db134c-4aed-4c5a-9607-c50183c9ef9e");
    CHECK(m.abilities[0].technique_name == "Abuse Elevation of Privilege");
    CHECK(m.unmatched.empty());
}

TEST_CASE("an empty technique list maps to nothing") {
    const Case c = load_case("bank");
    const AbilityMapping m = map_techniques_to_abilities({}, c.catalog, c.tables);
    CHECK(m.abilities.empty());
    CHECK(m.unmatched.empty());
    const IrMapping irs = map_techniques_to_irs({}, c.tables);
    CHECK(irs.files.empty());
    CHECK(irs.unmodeled.empty());
}

TEST_CASE("UK Office eight-step profile") {
    const Case c = load_case("uk_office");
    const std::vector<std::string> techniques = {"T1016", "T1505.003", "T1555",     "T1110.002",
                                                 "T1133", "T1423",     "T1021.004", "T1021.004"};
    CHECK(c.scenario.techniques() == techniques);
    const AbilityMapping m = map_techniques_to_abilities(techniques, c.catalog, c.tables);
    REQUIRE(m.abilities.size() == 8);
    CHECK(m.unmatched.empty());
    for (std::size_t i = 0; i < 8; ++i) CHECK(m.abilities[i].technique == techniques[i]);
    // two catalog entries for T1016: the smaller number wins
    CHECK(m.abilities[0].ability_number == "1a0f3c52-6a1e-4d0b-9b61-0f16a0000001");
    CHECK(m.abilities[6].ability_number == m.abilities[7].ability_number);

    const Profile p = build_profile(c.scenario, m);
    CHECK(p.name == "ukoffice_op");
    REQUIRE(p.steps.size() == 8);
    CHECK(p.steps[7].host == "core-l3-switch");
    CHECK(parse_profile(profile_to_yaml(p)).steps.size() == 8);
    CHECK(profile_to_yaml(parse_profile(profile_to_yaml(p))) == profile_to_yaml(p));
}

TEST_CASE("IR references per scenario") {
    SUBCASE("UK Office uses 21 IR files") {
        const Case c = load_case("uk_office");
        const IrMapping m = map_techniques_to_irs(c.scenario.techniques(), c.tables);
        CHECK(m.files.size() == 21);
        CHECK(std::set<std::string>(m.files.begin(), m.files.end()).size() == 21);
        CHECK(m.unmodeled.empty());
    }
    SUBCASE("Bank uses 11 IR files") {
        const Case c = load_case("bank");
        const IrMapping m = map_techniques_to_irs(c.scenario.techniques(), c.tables);
        CHECK(m.files.size() == 11);
        CHECK(m.unmodeled.empty());
    }
    SUBCASE("a technique absent from the tables is unmodeled") {
        const Case c = load_case("bank");
        const IrMapping m = map_techniques_to_irs({"T1105", "T9999", "T9999"}, c.tables);
        CHECK(m.unmodeled == std::vector<std::string>{"T9999"});
        CHECK(m.files.size() == 4);
    }
}

TEST_CASE("unmatched techniques get review stubs") {
    const Case c = load_case("bank");
    const AbilityMapping m = map_techniques_to_abilities({"T1105", "T1200", "T1105"}, c.catalog, c.tables);
    REQUIRE(m.abilities.size() == 3);
    REQUIRE(m.unmatched.size() == 1);
    CHECK(m.unmatched[0] == std::pair<std::size_t, std::string>{1, "T1200"});
    const AbilityDef& stub = m.abilities[1];
    CHECK(stub.technique == "T1200");
    CHECK(stub.type == "manual");
    CHECK(stub.command.empty());
    CHECK(stub.tags == std::vector<std::string>{"stub"});
    CHECK(stub.ability_number.size() == 36);
    CHECK(m.abilities[0].ability_number == m.abilities[2].ability_number);
}

TEST_CASE("technique ids and placeholders") {
    CHECK(is_technique_id("T1021"));
    CHECK(is_technique_id("T1021.004"));
    CHECK_FALSE(is_technique_id("T102"));
    CHECK_FALSE(is_technique_id("T1021.04"));
    CHECK_FALSE(is_technique_id("t1021"));
    CHECK_THROWS_AS(placeholders("ssh #{remote.host.ip}"), ValidationError);
    CHECK_THROWS_AS(placeholders("ssh #{Remote.Host}"), ValidationError);
    CHECK_THROWS_AS(placeholders("ssh #{remote.host"), ValidationError);
    CHECK(placeholders("echo #{server.port} #{agent.paw}") == std::vector<std::string>{"server.port", "agent.paw"});
    CHECK_THROWS_AS(map_techniques_to_abilities({"X1"}, {}, {}), ValidationError);
}

TEST_CASE("catalog validation") {
    const std::string one = R"(
name: a
ability_number: "n1"
technique: "T1105"
technique_name: t
description: d
type: manual
tags: [x]
platform: linux
executor: sh
command: "true"
)";
    CHECK(parse_ability_catalog(one).size() == 1);
    CHECK_THROWS_AS(parse_ability_catalog(one + "---" + one), ValidationError);
    std::string bad = one;
    bad.replace(bad.find("T1105"), 5, "T11");
    CHECK_THROWS_AS(parse_ability_catalog(bad), ValidationError);
    CHECK_THROWS_AS(parse_mapping_tables("technique_id,ability_number\nbogus,x\n", "technique_id,ir_file\n"),
                    ValidationError);
}

TEST_CASE("catalog YAML round trip") {
    for (const char* name : {"uk_office", "bank"}) {
        const auto catalog = parse_ability_catalog(fixture_text(name, "abilities.yml"));
        const std::string text = abilities_to_yaml(catalog);
        CHECK(abilities_to_yaml(parse_ability_catalog(text)) == text);
    }
}

TEST_CASE("mapping properties over random technique lists") {
    const Case c = load_case("uk_office");
    std::vector<std::string> pool;
    for (const auto& [t, n] : c.tables.abilities) pool.push_back(t);
    for (const char* extra : {"T1200", "T1078.003", "T1566"}) pool.push_back(extra);
    std::mt19937 rng(313);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> input;
        const std::size_t n = rng() % 12;
        for (std::size_t i = 0; i < n; ++i) input.push_back(pool[rng() % pool.size()]);
        const AbilityMapping m = map_techniques_to_abilities(input, c.catalog, c.tables);
        REQUIRE(m.abilities.size() == input.size());

        std::set<std::size_t> stubbed;
        for (const auto& [i, t] : m.unmatched) {
            CHECK(input[i] == t);
            stubbed.insert(i);
        }
        for (std::size_t i = 0; i < input.size(); ++i) {
            CHECK(m.abilities[i].technique == input[i]);
            // independent choice: the smallest tabled number present in the catalog
            std::vector<std::string> candidates;
            auto [lo, hi] = c.tables.abilities.equal_range(input[i]);
            for (auto it = lo; it != hi; ++it) {
                for (const auto& a : c.catalog) {
                    if (a.ability_number == it->second) candidates.push_back(a.ability_number);
                }
            }
            if (candidates.empty()) {
                CHECK(stubbed.contains(i));
            } else {
                CHECK_FALSE(stubbed.contains(i));
                CHECK(m.abilities[i].ability_number == *std::min_element(candidates.begin(), candidates.end()));
            }
        }
        const AbilityMapping again = map_techniques_to_abilities(input, c.catalog, c.tables);
        CHECK(abilities_to_yaml(again.abilities) == abilities_to_yaml(m.abilities));
        CHECK(numbers(again.abilities) == numbers(m.abilities));

        const IrMapping irs = map_techniques_to_irs(input, c.tables);
        for (const auto& t : input) {
            const bool tabled = c.tables.irs.count(t) > 0;
            CHECK(tabled != (std::find(irs.unmodeled.begin(), irs.unmodeled.end(), t) != irs.unmodeled.end()));
        }
        CHECK(std::set<std::string>(irs.files.begin(), irs.files.end()).size() == irs.files.size());
    }
}
