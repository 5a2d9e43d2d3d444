#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scytag/ag_engine.hpp"
#include "scytag/datalog.hpp"
#include "scytag/topology.hpp"

namespace scytag {

struct PipelineConfig {
    std::string topology;
    std::string vulns;
    /// A rules file, or a directory whose `*.P` files are read in name order.
    std::string rules;
    std::string assumptions;
    std::string abilities;
    std::string map_abilities;
    std::string map_irs;
    std::string templates;
    std::string faults;
    std::string scenario;
    std::string policy;
    std::string full_trace;
    std::string twin_trace;
    std::string name;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool skip_reduce = false;
};

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_usage = 2,
    exit_parse = 3,
    exit_validation = 4,
    exit_infeasible = 5,
    exit_abort = 6,
    exit_empty_graph = 7,
    exit_sanity = 8,
    exit_infrastructure = 9,
};

/// A stage that ran but must stop the pipeline with a specific exit code.
class StageFailure : public std::runtime_error {
public:
    StageFailure(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
    int code() const noexcept { return code_; }

private:
    int code_;
};

int exit_code_for(const std::exception& error);

const std::vector<std::string>& stage_names();

struct LoadedFacts {
    Topology topology;
    RuleSet rules;
    /// Topology facts, vulnerability facts and assumptions, merged.
    FactBase facts;
    std::size_t topology_facts = 0;
    std::size_t vulnerability_facts = 0;
    std::size_t assumed = 0;
    std::vector<std::string> rule_files;
};

/// Reads the rules text from a file or a directory of IR files.
std::string read_rules_text(const std::string& path, std::vector<std::string>* files = nullptr);

LoadedFacts load_facts(const PipelineConfig& config);

/// Runs one stage, reading earlier artifacts from `config.out`. `all` chains
/// every stage. Throws on failure.
void run_stage(const std::string& stage, const PipelineConfig& config, std::ostream& log);

/// Command-line entry point; `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace scytag
