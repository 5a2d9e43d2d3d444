#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "scytag/ag_engine.hpp"
#include "scytag/cli.hpp"
#include "scytag/error.hpp"
#include "scytag/metrics.hpp"
#include "scytag/path_reducer.hpp"
#include "scytag/topology.hpp"

namespace py = pybind11;
using namespace scytag;

namespace {

std::string evaluate_text(const std::string& facts, const std::string& rules) {
    return to_json(evaluate(parse_fact_text(facts), parse_rules(rules)));
}

std::string reduce_text(const std::string& graph, const std::optional<std::string>& policy) {
    return to_json(reduce_graph(parse_graph_json(graph), policy ? parse_policy(*policy) : default_policy()));
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Attack-graph driven cyber twin pipeline.";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<CompletionError>(m, "CompletionError", base);
    py::register_exception<ConsistencyError>(m, "ConsistencyError", base);
    py::register_exception<InfeasibleError>(m, "InfeasibleError", base);
    py::register_exception<AbortError>(m, "AbortError", base);
    py::register_exception<SchedulingError>(m, "SchedulingError", base);
    py::register_exception<InfrastructureError>(m, "InfrastructureError", base);
    py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", base);

    m.def("main", &run_cli, py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr).");
    m.def("stages", &stage_names);

    m.def("topology_facts", [](const std::string& document) {
        return serialize_facts(emit_topology_facts(parse_topology(document)));
    });
    m.def("evaluate", &evaluate_text, py::arg("facts"), py::arg("rules"), "Attack graph JSON for fact and rule text.");
    m.def("reduce", &reduce_text, py::arg("graph"), py::arg("policy") = std::nullopt);
    m.def("listing", [](const std::string& graph) { return to_listing(parse_graph_json(graph)); });
    m.def("critical_hops", [](const std::string& graph) { return parse_graph_json(graph).critical_hops(); });

    m.def("reduction_ratios", [](long hosts_full, long links_full, long hosts_twin, long links_twin) {
        const ReductionRatios r = reduction_ratios({hosts_full, links_full}, {hosts_twin, links_twin});
        return py::make_tuple(r.hosts_pct, r.connections_pct);
    });
    m.def("relative_delta", &relative_delta);
    m.def("energy_wh", [](double cpu_pct, double seconds, double watts_per_vcpu) {
        return energy_wh(cpu_pct, {watts_per_vcpu}, seconds);
    }, py::arg("cpu_pct"), py::arg("seconds"), py::arg("watts_per_vcpu") = EnergyParams{}.watts_per_vcpu);
    m.def("ability_success_parity", &ability_success_parity);
    m.def("technique_coverage_parity", &technique_coverage_parity);
    m.def("path_equivalence", &path_equivalence);
    m.def("order_similarity", &order_similarity);
}
