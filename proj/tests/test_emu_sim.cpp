#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "scytag/ag_engine.hpp"
#include "scytag/cli.hpp"
#include "scytag/emu_sim.hpp"
#include "scytag/error.hpp"
#include "scytag/scenario_mapper.hpp"
#include "support.hpp"

using namespace scytag;

namespace {

AbilityDef ability(const std::string& number, const std::string& technique, const std::string& command = "true",
                   const std::string& platform = "linux", const std::string& executor = "sh") {
    AbilityDef a;
    a.name = "ability " + number;
    a.ability_number = number;
    a.technique = technique;
    a.type = "manual";
    a.platform = platform;
    a.executor = executor;
    a.command = command;
    return a;
}

BoundAbility step(std::size_t ordinal, const std::string& number, const std::string& ag_step, const std::string& host) {
    BoundAbility b;
    b.ability = ability(number, "T1105");
    b.ordinal = ordinal;
    b.ag_step = ag_step;
    b.host = host;
    b.node = host;
    return b;
}

struct CaseRun {
    LoadedFacts loaded;
    DerivationGraph graph;
    Schedule schedule;
};

CaseRun fixture_schedule(const std::string& name) {
    const PipelineConfig config = testing_support::case_config(name, std::filesystem::temp_directory_path());
    CaseRun c;
    c.loaded = load_facts(config);
    c.graph = evaluate(c.loaded.facts, c.loaded.rules);
    const auto catalog = parse_ability_catalog(testing_support::read_file(config.abilities));
    const auto tables = parse_mapping_tables(testing_support::read_file(config.map_abilities),
                                             testing_support::read_file(config.map_irs));
    const Scenario scenario = parse_scenario(testing_support::read_file(config.scenario));
    const Profile profile = build_profile(scenario, map_techniques_to_abilities(scenario.techniques(), catalog, tables));
    const HostContext ctx = context_from_topology(c.loaded.topology);
    const Binding binding = bind_ability_variables(profile, catalog, c.loaded.facts, ctx);
    c.schedule = schedule_steps(c.graph, binding.abilities, ctx.host_map);
    return c;
}

/// Transitive closure of the precedence relation.
std::set<std::pair<std::size_t, std::size_t>> closure(const Schedule& s) {
    std::set<std::pair<std::size_t, std::size_t>> out(s.precedence.begin(), s.precedence.end());
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& [a, b] : std::vector(out.begin(), out.end())) {
            for (const auto& [c, d] : std::vector(out.begin(), out.end())) {
                if (b == c && out.emplace(a, d).second) grew = true;
            }
        }
    }
    return out;
}

/// Atoms reachable backwards from `atom` over premise/derivation edges.
std::set<int> graph_ancestors(const DerivationGraph& g, int atom) {
    std::set<int> seen;
    std::vector<int> stack{atom};
    while (!stack.empty()) {
        const int at = stack.back();
        stack.pop_back();
        for (const auto& [from, to] : g.edges()) {
            if (to == at && seen.insert(from).second) stack.push_back(from);
        }
    }
    return seen;
}

/// Goals established when a step-realized atom needs every realizing step to
/// have succeeded; plain least fixpoint over the AND/OR graph.
std::set<std::string> oracle_objectives(const Schedule& s, const DebriefReport& r) {
    std::map<std::size_t, StepStatus> by_ordinal;
    for (const auto& st : r.steps) by_ordinal[st.ordinal] = st.status;
    std::map<int, bool> steps_ok;
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const bool ok = by_ordinal.at(s.steps[i].ordinal) == StepStatus::success;
        auto [it, fresh] = steps_ok.emplace(s.atoms[i], ok);
        if (!fresh) it->second = it->second && ok;
    }
    std::set<int> established;
    for (const auto& n : s.graph.nodes()) {
        if (n.kind == NodeKind::primitive) established.insert(n.id);
    }
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& n : s.graph.nodes()) {
            if (n.kind != NodeKind::derived || established.contains(n.id)) continue;
            if (auto it = steps_ok.find(n.id); it != steps_ok.end() && !it->second) continue;
            for (int rule : s.graph.derivations(n.id)) {
                const auto& p = s.graph.premises(rule);
                if (std::all_of(p.begin(), p.end(), [&](int x) { return established.contains(x); })) {
                    established.insert(n.id);
                    grew = true;
                    break;
                }
            }
        }
    }
    std::set<std::string> out;
    if (s.steps.empty()) return out;
    for (int g : s.graph.goals()) {
        if (established.contains(g)) out.insert(to_string(s.graph.node(g).fact));
    }
    return out;
}

void check_run(const Schedule& s, const DebriefReport& r, const RunConfig& config = {}) {
    REQUIRE(r.steps.size() == s.steps.size());
    std::map<std::size_t, std::size_t> position;
    for (std::size_t i = 0; i < r.steps.size(); ++i) position[r.steps[i].ordinal] = i;
    for (const auto& [a, b] : s.precedence) CHECK(position.at(s.steps[a].ordinal) < position.at(s.steps[b].ordinal));
    int clock = 0;
    for (const auto& st : r.steps) {
        CHECK(st.attempts <= config.max_attempts);
        if (st.status == StepStatus::network_fail) CHECK(st.attempts == config.max_attempts);
        if (st.status == StepStatus::skipped) CHECK(st.attempts == 0);
        else CHECK(st.attempts >= 1);
        CHECK(st.start == clock);
        CHECK(st.end == st.start + st.attempts);
        clock = st.end;
    }
    const auto expected = oracle_objectives(s, r);
    CHECK(std::set<std::string>(r.objectives.begin(), r.objectives.end()) == expected);
    CHECK(r.success == !expected.empty());
}

const StepResult& result_for(const DebriefReport& r, std::size_t ordinal) {
    return *std::find_if(r.steps.begin(), r.steps.end(), [&](const StepResult& s) { return s.ordinal == ordinal; });
}

} // namespace

TEST_CASE("binding substitutes placeholders from host facts") {
    const FactBase facts = parse_fact_text("hasIP('10.8.10.2',h).\nnetworkService(h,sshd,tcp,'22',root).\n");
    HostContext ctx;
    ctx.host_map = {{"h", "h"}, {"w", "w"}};
    ctx.platforms = {{"h", "linux"}, {"w", "windows"}};
    const std::vector<AbilityDef> catalog = {ability("a1", "T1021.004", "ssh #{host.ip}"),
                                             ability("a2", "T1021.004", "ssh -p #{service.port} #{host.name}"),
                                             ability("w1", "T1548.002", "Start-Process cmd", "windows", "psh"),
                                             ability("c1", "T1110.002", "login #{cred.password}")};

    SUBCASE("host address") {
        const Binding b = bind_ability_variables({"p", {{"a1", "x", "h", ""}}}, catalog, facts, ctx);
        REQUIRE(b.abilities.size() == 1);
        CHECK(b.abilities[0].ability.command == "ssh 10.8.10.2");
        CHECK_FALSE(b.abilities[0].skipped);
    }
    SUBCASE("service port and host name") {
        const Binding b = bind_ability_variables({"p", {{"a2", "x", "h", ""}}}, catalog, facts, ctx);
        CHECK(b.abilities[0].ability.command == "ssh -p 22 h");
    }
    SUBCASE("platform mismatch is skipped") {
        const Binding b = bind_ability_variables({"p", {{"w1", "x", "h", ""}}}, catalog, facts, ctx);
        CHECK(b.abilities[0].skipped);
        CHECK(b.abilities[0].skip_reason.find("platform") != std::string::npos);
        CHECK(b.skips.size() == 1);
        CHECK_FALSE(bind_ability_variables({"p", {{"w1", "x", "w", ""}}}, catalog, facts, ctx).abilities[0].skipped);
    }
    SUBCASE("unknown ability aborts") {
        CHECK_THROWS_AS(bind_ability_variables({"p", {{"nope", "x", "h", ""}}}, catalog, facts, ctx), AbortError);
    }
    SUBCASE("unresolvable placeholder aborts naming it") {
        try {
            bind_ability_variables({"p", {{"c1", "x", "h", ""}}}, catalog, facts, ctx);
            FAIL("expected an abort");
        } catch (const AbortError& e) {
            CHECK(std::string(e.what()).find("cred.password") != std::string::npos);
        }
    }
}

TEST_CASE("scheduling") {
    SUBCASE("a linear path on one host is totally ordered") {
        const RuleSet rules = parse_rules("a(H) :- s(H).\nb(H) :- a(H).\nc(H) :- b(H).\nattackGoal(c(_)).\n");
        const DerivationGraph g = evaluate(parse_fact_text("s(h)."), rules);
        const Schedule s = schedule_steps(g, {step(0, "x0", "a(h)", "h"), step(1, "x1", "b(h)", "h"), step(2, "x2", "c(h)", "h")});
        CHECK(s.order == std::vector<std::size_t>{0, 1, 2});
        const auto c = closure(s);
        CHECK(c.contains({0, 1}));
        CHECK(c.contains({0, 2}));
        CHECK(c.contains({1, 2}));
        CHECK(s.wave == std::vector<int>{0, 1, 2});
    }
    SUBCASE("branches on disjoint hosts are unordered before their join") {
        const RuleSet rules = parse_rules("a(X) :- s(X).\nb(X) :- t(X).\nc(X,Y) :- a(X), b(Y).\nattackGoal(c(_,_)).\n");
        const DerivationGraph g = evaluate(parse_fact_text("s(hA).\nt(hB)."), rules);
        const Schedule s = schedule_steps(
            g, {step(0, "x0", "a(hA)", "hA"), step(1, "x1", "b(hB)", "hB"), step(2, "x2", "c(hA,hB)", "hC")});
        // topological oracle: i precedes j iff atom i is an ancestor of atom j
        std::set<std::pair<std::size_t, std::size_t>> expected;
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                if (i != j && graph_ancestors(g, s.atoms[j]).contains(s.atoms[i])) expected.emplace(i, j);
            }
        }
        CHECK(closure(s) == expected);
        CHECK(expected == std::set<std::pair<std::size_t, std::size_t>>{{0, 2}, {1, 2}});
        CHECK(s.wave == std::vector<int>{0, 0, 1});
    }
    SUBCASE("a shared resource serializes otherwise parallel steps") {
        const RuleSet rules = parse_rules("a(X) :- s(X).\nattackGoal(a(_)).\n");
        const DerivationGraph g = evaluate(parse_fact_text("s(h1).\ns(h2)."), rules);
        auto s1 = step(0, "x0", "a(h1)", "h1");
        auto s2 = step(1, "x1", "a(h2)", "h2");
        CHECK(schedule_steps(g, {s1, s2}).precedence.empty());
        s1.resource = s2.resource = "vpn-session";
        CHECK(schedule_steps(g, {s1, s2}).precedence == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}});
    }
    SUBCASE("a step without a graph atom is a scheduling error") {
        const RuleSet rules = parse_rules("a(X) :- s(X).\nattackGoal(a(_)).\n");
        const DerivationGraph g = evaluate(parse_fact_text("s(h1)."), rules);
        CHECK_THROWS_AS(schedule_steps(g, {step(0, "x0", "zzz(h1)", "h1")}), SchedulingError);
        CHECK_THROWS_AS(schedule_steps(g, {step(0, "x0", "", "h1")}), SchedulingError);
    }
    SUBCASE("UK Office keeps the listed order") {
        const CaseRun c = fixture_schedule("uk_office");
        REQUIRE(c.schedule.steps.size() == 8);
        CHECK(c.schedule.order == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
    }
}

TEST_CASE("fault-free UK Office run") {
    const CaseRun c = fixture_schedule("uk_office");
    const DebriefReport r = run_operation(c.schedule, FaultModel{});
    check_run(c.schedule, r);
    CHECK(r.success);
    CHECK(r.succeeded_keys().size() == 8);
    for (const auto& s : r.steps) {
        CHECK(s.status == StepStatus::success);
        CHECK(s.attempts == 1);
    }
    CHECK(r.config.base_delay_s == 0);
    CHECK(r.config.jitter_min_s == 2);
    CHECK(r.config.jitter_max_s == 8);
}

TEST_CASE("scripted faults") {
    const CaseRun c = fixture_schedule("uk_office");
    const BoundAbility& third = c.schedule.steps[2];
    const auto key = std::make_pair(third.host, third.ability.ability_number);

    SUBCASE("two network failures then success") {
        FaultModel f;
        f.scripted[key] = {StepStatus::network_fail, StepStatus::network_fail};
        const DebriefReport r = run_operation(c.schedule, f);
        check_run(c.schedule, r);
        CHECK(result_for(r, 2).status == StepStatus::success);
        CHECK(result_for(r, 2).attempts == 3);
        CHECK(r.success);
    }
    SUBCASE("four network failures give up and starve dependants") {
        FaultModel f;
        f.scripted[key] = std::vector<StepStatus>(4, StepStatus::network_fail);
        const DebriefReport r = run_operation(c.schedule, f);
        check_run(c.schedule, r);
        CHECK(result_for(r, 2).status == StepStatus::network_fail);
        CHECK(result_for(r, 2).attempts == 4);
        CHECK_FALSE(r.success);
    }
    SUBCASE("detection skips the rest of that host") {
        const BoundAbility& first = c.schedule.steps[0];
        FaultModel f;
        f.scripted[{first.host, first.ability.ability_number}] = {StepStatus::detection_fail};
        const DebriefReport r = run_operation(c.schedule, f);
        check_run(c.schedule, r);
        CHECK(result_for(r, 0).status == StepStatus::detection_fail);
        for (const auto& b : c.schedule.steps) {
            if (b.ordinal > 0 && b.node == first.node) CHECK(result_for(r, b.ordinal).status == StepStatus::skipped);
        }
        CHECK(std::any_of(r.events.begin(), r.events.end(),
                          [](const std::string& e) { return e.find("detection") != std::string::npos; }));
    }
}

TEST_CASE("an exploit failure continues through another branch") {
    const RuleSet rules = parse_rules("own(H) :- s(H).\nwin(a) :- own(h1).\nwin(a) :- own(h2).\nattackGoal(win(a)).\n");
    const DerivationGraph g = evaluate(parse_fact_text("s(h1).\ns(h2)."), rules);
    const Schedule s = schedule_steps(
        g, {step(0, "x0", "own(h1)", "h1"), step(1, "x1", "own(h2)", "h2"), step(2, "x2", "win(a)", "h3")});
    FaultModel f;
    f.scripted[{"h1", "x0"}] = {StepStatus::exploit_fail};
    DebriefReport r = run_operation(s, f);
    check_run(s, r);
    CHECK(result_for(r, 2).status == StepStatus::success);
    CHECK(r.success);

    f.scripted[{"h2", "x1"}] = {StepStatus::exploit_fail};
    r = run_operation(s, f);
    check_run(s, r);
    CHECK(result_for(r, 2).status == StepStatus::skipped);
    CHECK_FALSE(r.success);
}

TEST_CASE("Bank run covers the three techniques") {
    const CaseRun c = fixture_schedule("bank");
    const DebriefReport r = run_operation(c.schedule, FaultModel{});
    check_run(c.schedule, r);
    CHECK(r.steps.size() == 3);
    CHECK(r.techniques == std::vector<std::string>{"T1552.001", "T1105", "T1059.004"});
    CHECK(r.success);
}

TEST_CASE("empty schedule") {
    const CaseRun c = fixture_schedule("bank");
    const DebriefReport r = run_operation(schedule_steps(c.graph, {}), FaultModel{});
    CHECK(r.steps.empty());
    CHECK_FALSE(r.success);
}

TEST_CASE("debrief and fault model serialization") {
    const CaseRun c = fixture_schedule("uk_office");
    FaultModel f;
    f.seed = 9;
    f.network = 0.2;
    f.scripted[{c.schedule.steps[1].host, c.schedule.steps[1].ability.ability_number}] = {StepStatus::network_fail};
    const DebriefReport r = run_operation(c.schedule, f);
    const std::string json = debrief_to_json(r);
    CHECK(debrief_to_json(parse_debrief_json(json)) == json);
    CHECK(debrief_to_html(r).find(r.operation_id) != std::string::npos);
    CHECK(fault_model_to_json(parse_fault_model(fault_model_to_json(f))) == fault_model_to_json(f));
    CHECK_THROWS_AS(parse_fault_model("{"), ParseError);
    CHECK(parse_status("DetectionFail") == StepStatus::detection_fail);
    CHECK_THROWS(parse_status("Maybe"));
}

TEST_CASE("run properties under random fault models") {
    std::mt19937 rng(8086);
    const CaseRun cases[] = {fixture_schedule("uk_office"), fixture_schedule("bank")};
    const StepStatus outcomes[] = {StepStatus::success, StepStatus::network_fail, StepStatus::exploit_fail,
                                   StepStatus::detection_fail};
    for (int trial = 0; trial < 100; ++trial) {
        CAPTURE(trial);
        const CaseRun& c = cases[trial % 2];
        FaultModel f;
        f.seed = rng();
        f.network = (rng() % 40) / 100.0;
        f.exploit = (rng() % 20) / 100.0;
        f.detection = (rng() % 10) / 100.0;
        for (const auto& b : c.schedule.steps) {
            if (rng() % 3) continue;
            auto& script = f.scripted[{b.host, b.ability.ability_number}];
            for (int k = static_cast<int>(rng() % 5); k > 0; --k) script.push_back(outcomes[rng() % 4]);
        }
        RunConfig config;
        config.max_attempts = 4;
        const DebriefReport r = run_operation(c.schedule, f, config);
        check_run(c.schedule, r, config);
        CHECK(debrief_to_json(run_operation(c.schedule, f, config)) == debrief_to_json(r));
    }
}
