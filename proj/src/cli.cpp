#include "scytag/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "scytag/emu_sim.hpp"
#include "scytag/error.hpp"
#include "scytag/metrics.hpp"
#include "scytag/path_reducer.hpp"
#include "scytag/scenario_mapper.hpp"
#include "scytag/twin_builder.hpp"

namespace scytag {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageFailure(exit_usage, "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string require(const std::string& value, const char* flag) {
    if (value.empty()) throw StageFailure(exit_usage, std::string("missing ") + flag);
    return value;
}

fs::path out_dir(const PipelineConfig& config) {
    fs::path dir = config.out.empty() ? fs::path("scytag-out") : fs::path(config.out);
    fs::create_directories(dir);
    return dir;
}

std::string artifact(const PipelineConfig& config, const char* name, const char* producer) {
    const fs::path p = out_dir(config) / name;
    if (!fs::exists(p)) {
        throw StageFailure(exit_usage, std::string(name) + " not found in " + out_dir(config).string() + "; run `" +
                                           producer + "` first");
    }
    return read_file(p.string());
}

void write_artifact(const PipelineConfig& config, const char* name, const std::string& text) {
    const fs::path p = out_dir(config) / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw StageFailure(exit_failure, "cannot write " + p.string());
    out << text;
}

std::set<std::string> plan_nodes(const TwinPlan& plan) {
    std::set<std::string> ids;
    for (const auto& n : plan.nodes) ids.insert(n.id);
    return ids;
}

RuleSet stage_rules(const PipelineConfig& config) { return parse_rules(artifact(config, "rules.P", "facts")); }

std::vector<AbilityDef> catalog_of(const PipelineConfig& config) {
    return parse_ability_catalog(read_file(require(config.abilities, "--abilities")));
}

std::string binding_to_json(const Binding& binding) {
    ojson doc;
    doc["abilities"] = ojson::array();
    for (const auto& b : binding.abilities) {
        doc["abilities"].push_back({{"ordinal", b.ordinal},
                                    {"ability_number", b.ability.ability_number},
                                    {"name", b.ability.name},
                                    {"technique", b.ability.technique},
                                    {"ag_step", b.ag_step},
                                    {"host", b.host},
                                    {"node", b.node},
                                    {"command", b.ability.command},
                                    {"skipped", b.skipped},
                                    {"skip_reason", b.skip_reason}});
    }
    doc["skips"] = binding.skips;
    return doc.dump(2) + "\n";
}

void stage_facts(const PipelineConfig& config, std::ostream& log) {
    const LoadedFacts loaded = load_facts(config);
    write_artifact(config, "facts.P", serialize_facts(loaded.facts));
    write_artifact(config, "rules.P", serialize_rules(loaded.rules));
    ojson summary{{"topology_facts", loaded.topology_facts},
                  {"vulnerability_facts", loaded.vulnerability_facts},
                  {"assumed_facts", loaded.assumed},
                  {"total_facts", loaded.facts.size()},
                  {"rules", loaded.rules.rules.size()},
                  {"rule_files", loaded.rule_files},
                  {"environmental_predicates", environmental_predicates(loaded.rules)}};
    write_artifact(config, "facts_summary.json", summary.dump(2) + "\n");
    log << "facts: " << loaded.topology_facts << " topology + " << loaded.assumed << " assumed = "
        << loaded.topology_facts + loaded.assumed << " (+" << loaded.vulnerability_facts << " vulExists), "
        << loaded.rules.rules.size() << " rules\n";
}

void stage_ag(const PipelineConfig& config, std::ostream& log) {
    const FactBase facts = parse_fact_text(artifact(config, "facts.P", "facts"));
    const RuleSet rules = stage_rules(config);
    const DerivationGraph graph = evaluate(facts, rules);
    write_artifact(config, "ag.json", to_json(graph));
    write_artifact(config, "ag.txt", to_listing(graph));
    if (graph.empty()) throw StageFailure(exit_empty_graph, "attack graph is empty: no goal is derivable");
    log << "ag: " << graph.size() << " nodes (" << graph.count(NodeKind::derived) << " derived, "
        << graph.count(NodeKind::rule) << " rule, " << graph.count(NodeKind::primitive) << " primitive), "
        << graph.critical_hops() << " hops\n";
}

void stage_reduce(const PipelineConfig& config, std::ostream& log) {
    const std::string text = artifact(config, "ag.json", "ag");
    if (config.skip_reduce) {
        write_artifact(config, "reduced_ag.json", text);
        write_artifact(config, "reduced_ag.txt", to_listing(parse_graph_json(text)));
        log << "reduce: skipped\n";
        return;
    }
    const DerivationGraph graph = parse_graph_json(text);
    const ReductionPolicy policy = config.policy.empty() ? default_policy() : parse_policy(read_file(config.policy));
    const DerivationGraph reduced = reduce_graph(graph, policy);
    write_artifact(config, "reduced_ag.json", to_json(reduced));
    write_artifact(config, "reduced_ag.txt", to_listing(reduced));
    log << "reduce: " << graph.size() << " -> " << reduced.size() << " nodes\n";
}

void stage_twin(const PipelineConfig& config, std::ostream& log) {
    const DerivationGraph reduced = parse_graph_json(artifact(config, "reduced_ag.json", "reduce"));
    if (reduced.empty()) throw StageFailure(exit_empty_graph, "attack graph is empty: nothing to build");
    const Topology topology = parse_topology(read_file(require(config.topology, "--topology")));
    const TemplateCatalog catalog = parse_template_catalog(read_file(require(config.templates, "--templates")));
    const ReductionPolicy policy = config.policy.empty() ? default_policy() : parse_policy(read_file(config.policy));

    const AssetSet assets = complete_connectivity(select_assets(reduced, topology, policy), topology);
    const TwinPlan plan = build_twin_plan(assets, topology, catalog);
    write_artifact(config, "twin_plan.json", plan_to_json(plan));
    write_artifact(config, "twin_topology.json", topology_to_json(twin_topology(plan, topology)));

    const FactBase facts = parse_fact_text(artifact(config, "facts.P", "facts"));
    const FactBase twin_facts = restrict_facts(facts, topology, plan_nodes(plan));
    write_artifact(config, "twin_facts.P", serialize_facts(twin_facts));
    const DerivationGraph twin_graph = evaluate(twin_facts, stage_rules(config));
    write_artifact(config, "twin_ag.json", to_json(twin_graph));

    MockBackend backend;
    const ValidationReport report = sanity_validate(plan, backend);
    write_artifact(config, "validation.json", report_to_json(report));
    write_artifact(config, "session.json", backend.session_json());
    log << "twin: " << plan.nodes.size() << " nodes, " << plan.links.size() << " links, " << plan.vlans.size()
        << " vlans; sanity " << (report.passed ? "pass" : "fail") << "\n";
    if (!report.passed) {
        std::string why;
        for (const auto& f : report.failures) why += "\n  " + f;
        throw StageFailure(exit_sanity, "twin failed sanity validation:" + why);
    }
    if (twin_graph.empty()) throw StageFailure(exit_sanity, "goal is not derivable on the twin");
}

void stage_bind(const PipelineConfig& config, std::ostream& log) {
    const Scenario scenario = parse_scenario(read_file(require(config.scenario, "--scenario")));
    const auto catalog = catalog_of(config);
    const std::string ir_csv = config.map_irs.empty() ? std::string("technique_id,ir_file\n") : read_file(config.map_irs);
    const MappingTables tables = parse_mapping_tables(read_file(require(config.map_abilities, "--map-abilities")), ir_csv);
    const auto techniques = scenario.techniques();
    const AbilityMapping mapping = map_techniques_to_abilities(techniques, catalog, tables);
    const IrMapping irs = map_techniques_to_irs(techniques, tables);

    std::vector<AbilityDef> with_stubs = catalog;
    for (const auto& a : mapping.abilities) {
        if (std::none_of(catalog.begin(), catalog.end(),
                         [&](const AbilityDef& c) { return c.ability_number == a.ability_number; })) {
            with_stubs.push_back(a);
        }
    }
    const Profile profile = build_profile(scenario, mapping);
    write_artifact(config, "profile.yml", profile_to_yaml(profile));
    write_artifact(config, "abilities_bound.yml", abilities_to_yaml(with_stubs));

    ojson map_doc;
    map_doc["abilities"] = ojson::array();
    for (std::size_t i = 0; i < techniques.size(); ++i) {
        map_doc["abilities"].push_back({{"technique", techniques[i]}, {"ability_number", mapping.abilities[i].ability_number}});
    }
    map_doc["stubs"] = ojson::array();
    for (const auto& [ordinal, technique] : mapping.unmatched) map_doc["stubs"].push_back({{"ordinal", ordinal}, {"technique", technique}});
    map_doc["ir_files"] = irs.files;
    map_doc["unmodeled"] = irs.unmodeled;
    write_artifact(config, "mapping.json", map_doc.dump(2) + "\n");

    const Topology topology = parse_topology(read_file(require(config.topology, "--topology")));
    const TwinPlan plan = parse_plan_json(artifact(config, "twin_plan.json", "twin"));
    const Binding full = bind_ability_variables(profile, with_stubs, parse_fact_text(artifact(config, "facts.P", "facts")),
                                                context_from_topology(topology));
    const Binding twin = bind_ability_variables(profile, with_stubs,
                                                parse_fact_text(artifact(config, "twin_facts.P", "twin")),
                                                context_from_plan(plan));
    write_artifact(config, "binding_full.json", binding_to_json(full));
    write_artifact(config, "binding_twin.json", binding_to_json(twin));
    log << "bind: " << profile.steps.size() << " steps, " << mapping.unmatched.size() << " stubs, "
        << irs.unmodeled.size() << " unmodeled, " << full.skips.size() + twin.skips.size() << " skipped\n";
}

DebriefReport emulate_on(const PipelineConfig& config, const Profile& profile, const std::vector<AbilityDef>& catalog,
                         const FactBase& facts, const HostContext& context, const DerivationGraph& graph,
                         const FaultModel& faults) {
    const Binding binding = bind_ability_variables(profile, catalog, facts, context);
    const Schedule schedule = schedule_steps(graph, binding.abilities, context.host_map);
    RunConfig run;
    run.name = config.name.empty() ? profile.name : config.name;
    return run_operation(schedule, faults, run);
}

void stage_emulate(const PipelineConfig& config, std::ostream& log) {
    const Profile profile = parse_profile(artifact(config, "profile.yml", "bind"));
    const auto catalog = parse_ability_catalog(artifact(config, "abilities_bound.yml", "bind"));
    FaultModel faults = config.faults.empty() ? FaultModel{} : parse_fault_model(read_file(config.faults));
    if (config.seed) faults.seed = *config.seed;

    const Topology topology = parse_topology(read_file(require(config.topology, "--topology")));
    const TwinPlan plan = parse_plan_json(artifact(config, "twin_plan.json", "twin"));
    const DebriefReport full = emulate_on(config, profile, catalog, parse_fact_text(artifact(config, "facts.P", "facts")),
                                          context_from_topology(topology),
                                          parse_graph_json(artifact(config, "ag.json", "ag")), faults);
    const DebriefReport twin = emulate_on(config, profile, catalog,
                                          parse_fact_text(artifact(config, "twin_facts.P", "twin")),
                                          context_from_plan(plan),
                                          parse_graph_json(artifact(config, "twin_ag.json", "twin")), faults);
    write_artifact(config, "debrief_full.json", debrief_to_json(full));
    write_artifact(config, "debrief_twin.json", debrief_to_json(twin));
    write_artifact(config, "debrief_full.html", debrief_to_html(full));
    write_artifact(config, "debrief_twin.html", debrief_to_html(twin));
    auto successes = [](const DebriefReport& r) {
        return std::count_if(r.steps.begin(), r.steps.end(),
                             [](const StepResult& s) { return s.status == StepStatus::success; });
    };
    log << "emulate: full " << successes(full) << "/" << full.steps.size() << " succeeded ("
        << (full.success ? "goal reached" : "goal missed") << "), twin " << successes(twin) << "/" << twin.steps.size()
        << " succeeded (" << (twin.success ? "goal reached" : "goal missed") << ")\n";
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

void stage_metrics(const PipelineConfig& config, std::ostream& log) {
    const Topology topology = parse_topology(read_file(require(config.topology, "--topology")));
    const TwinPlan plan = parse_plan_json(artifact(config, "twin_plan.json", "twin"));
    const std::string name = config.name.empty() ? "topology" : config.name;
    const TopologyStats full_stats{static_cast<long>(topology.nodes.size()), static_cast<long>(topology.links.size())};
    const TopologyStats twin_stats{static_cast<long>(plan.nodes.size()), static_cast<long>(plan.links.size())};
    const ReductionRatios ratios = reduction_ratios(full_stats, twin_stats);
    write_artifact(config, "structural.csv", structural_to_csv(name, full_stats, twin_stats));

    const DebriefReport full = parse_debrief_json(artifact(config, "debrief_full.json", "emulate"));
    const DebriefReport twin = parse_debrief_json(artifact(config, "debrief_twin.json", "emulate"));
    const EffectivenessReport eff = compare_debriefs(full, twin);
    write_artifact(config, "effectiveness.csv", effectiveness_to_csv(eff));
    write_artifact(config, "effectiveness.json", effectiveness_to_json(eff));

    const DerivationGraph full_graph = parse_graph_json(artifact(config, "ag.json", "ag"));
    const DerivationGraph reduced_graph = parse_graph_json(artifact(config, "reduced_ag.json", "reduce"));
    const DerivationGraph twin_graph = parse_graph_json(artifact(config, "twin_ag.json", "twin"));

    ojson doc;
    doc["topology"] = name;
    doc["structural"] = {{"hosts_full", full_stats.hosts},       {"hosts_twin", twin_stats.hosts},
                         {"connections_full", full_stats.connections}, {"connections_twin", twin_stats.connections},
                         {"r_h_pct", ratios.hosts_pct},           {"r_e_pct", ratios.connections_pct}};
    doc["hops"] = {{"full", full_graph.critical_hops()},
                   {"reduced", reduced_graph.critical_hops()},
                   {"twin", twin_graph.critical_hops()}};
    doc["effectiveness"] = {{"ASP", optional_number(eff.asp)}, {"TCP", optional_number(eff.tcp)},
                            {"PES", optional_number(eff.pes)}, {"tau", optional_number(eff.tau)},
                            {"delta_obj", eff.objective_delta}, {"undefined", eff.undefined}};
    if (!config.full_trace.empty() && !config.twin_trace.empty()) {
        const RuntimeComparison rt =
            compare_runtime(parse_trace(read_file(config.full_trace)), parse_trace(read_file(config.twin_trace)));
        write_artifact(config, "runtime.csv", runtime_to_csv(name, rt));
        doc["runtime"] = {{"cpu_full", rt.cpu_full},       {"cpu_twin", rt.cpu_twin},
                          {"cpu_delta_pct", rt.cpu_delta_pct}, {"ram_full", rt.ram_full},
                          {"ram_twin", rt.ram_twin},       {"ram_delta_pct", rt.ram_delta_pct},
                          {"io_delta_pct", rt.io_delta_pct}, {"time_full_s", rt.time_full},
                          {"time_twin_s", rt.time_twin},   {"time_delta_s", rt.time_delta_s},
                          {"energy_full_wh", rt.energy_full}, {"energy_twin_wh", rt.energy_twin},
                          {"energy_delta_pct", rt.energy_delta_pct}};
    }
    write_artifact(config, "metrics.json", doc.dump(2) + "\n");
    char line[160];
    std::snprintf(line, sizeof line, "metrics: R_H=%.2f R_E=%.2f hops %d/%d, delta_obj=%d\n", ratios.hosts_pct,
                  ratios.connections_pct, full_graph.critical_hops(), twin_graph.critical_hops(), eff.objective_delta);
    log << line;
}

using StageFn = void (*)(const PipelineConfig&, std::ostream&);

const std::vector<std::pair<std::string, StageFn>>& stages() {
    static const std::vector<std::pair<std::string, StageFn>> list{
        {"facts", stage_facts}, {"ag", stage_ag},           {"reduce", stage_reduce},  {"twin", stage_twin},
        {"bind", stage_bind},   {"emulate", stage_emulate}, {"metrics", stage_metrics},
    };
    return list;
}

} // namespace

int exit_code_for(const std::exception& error) {
    if (const auto* s = dynamic_cast<const StageFailure*>(&error)) return s->code();
    if (dynamic_cast<const ParseError*>(&error)) return exit_parse;
    if (dynamic_cast<const ValidationError*>(&error) || dynamic_cast<const ConsistencyError*>(&error) ||
        dynamic_cast<const CompletionError*>(&error)) {
        return exit_validation;
    }
    if (dynamic_cast<const InfeasibleError*>(&error)) return exit_infeasible;
    if (dynamic_cast<const AbortError*>(&error) || dynamic_cast<const SchedulingError*>(&error)) return exit_abort;
    if (dynamic_cast<const InfrastructureError*>(&error)) return exit_infrastructure;
    return exit_failure;
}

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, fn] : stages()) n.push_back(name);
        n.push_back("all");
        return n;
    }();
    return names;
}

std::string read_rules_text(const std::string& path, std::vector<std::string>* files) {
    std::vector<fs::path> paths;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".P") paths.push_back(entry.path());
        }
        std::sort(paths.begin(), paths.end());
        if (paths.empty()) throw StageFailure(exit_usage, "no .P files in " + path);
    } else {
        paths.emplace_back(path);
    }
    std::string text;
    for (const auto& p : paths) {
        text += read_file(p.string());
        text += "\n";
        if (files) files->push_back(p.filename().string());
    }
    return text;
}

LoadedFacts load_facts(const PipelineConfig& config) {
    LoadedFacts out;
    out.topology = parse_topology(read_file(require(config.topology, "--topology")));
    out.rules = parse_rules(read_rules_text(require(config.rules, "--rules"), &out.rule_files));

    FactBase base = emit_topology_facts(out.topology);
    out.topology_facts = base.size();
    if (!config.vulns.empty()) {
        const VulnMapping vulns = map_vulnerabilities(out.topology.software, parse_vuln_catalog(read_file(config.vulns)));
        out.vulnerability_facts = vulns.facts.size();
        base.merge(vulns.facts);
    }
    const FactBase assumptions =
        config.assumptions.empty() ? FactBase{} : parse_fact_text(read_file(config.assumptions));
    out.facts = complete_missing_facts(out.rules, base, assumptions);
    out.assumed = out.facts.size() - base.size();
    return out;
}

void run_stage(const std::string& stage, const PipelineConfig& config, std::ostream& log) {
    if (stage == "all") {
        for (const auto& [name, fn] : stages()) fn(config, log);
        return;
    }
    for (const auto& [name, fn] : stages()) {
        if (name == stage) return fn(config, log);
    }
    throw StageFailure(exit_usage, "unknown stage \"" + stage + "\"");
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attack-graph driven digital twin pipeline", "scytag"};
    app.require_subcommand(1, 1);
    PipelineConfig config;
    if (const char* env = std::getenv("SCYTAG_OUT")) config.out = env;
    std::uint64_t seed = 0;

    for (const auto& stage : stage_names()) {
        CLI::App* sub = app.add_subcommand(stage, stage == "all" ? "run every stage in order" : "run the " + stage + " stage");
        sub->add_option("--topology", config.topology, "topology JSON")->check(CLI::ExistingFile);
        sub->add_option("--vulns", config.vulns, "vulnerability catalog CSV")->check(CLI::ExistingFile);
        sub->add_option("--rules", config.rules, "rules file or IR directory")->check(CLI::ExistingPath);
        sub->add_option("--assumptions", config.assumptions, "assumption facts")->check(CLI::ExistingFile);
        sub->add_option("--abilities", config.abilities, "ability catalog YAML")->check(CLI::ExistingFile);
        sub->add_option("--map-abilities", config.map_abilities, "technique,ability CSV")->check(CLI::ExistingFile);
        sub->add_option("--map-irs", config.map_irs, "technique,IR file CSV")->check(CLI::ExistingFile);
        sub->add_option("--templates", config.templates, "template catalog JSON")->check(CLI::ExistingFile);
        sub->add_option("--faults", config.faults, "fault model JSON")->check(CLI::ExistingFile);
        sub->add_option("--scenario", config.scenario, "scenario YAML")->check(CLI::ExistingFile);
        sub->add_option("--policy", config.policy, "reduction policy JSON")->check(CLI::ExistingFile);
        sub->add_option("--full-trace", config.full_trace, "resource trace of the full run")->check(CLI::ExistingFile);
        sub->add_option("--twin-trace", config.twin_trace, "resource trace of the twin run")->check(CLI::ExistingFile);
        sub->add_option("--name", config.name, "operation and topology name");
        sub->add_option("--seed", seed, "fault model seed");
        sub->add_flag("--skip-reduce", config.skip_reduce, "copy the attack graph unreduced");
        sub->add_option("--out", config.out, "output directory (default $SCYTAG_OUT or ./scytag-out)");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }
    CLI::App* chosen = app.get_subcommands().front();
    if (chosen->count("--seed") > 0) config.seed = seed;

    const std::string stage = chosen->get_name();
    try {
        run_stage(stage, config, out);
    } catch (const std::exception& e) {
        err << "scytag " << stage << ": " << e.what() << "\n";
        return exit_code_for(e);
    }
    return exit_ok;
}

} // namespace scytag
