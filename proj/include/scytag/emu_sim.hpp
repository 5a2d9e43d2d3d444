#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scytag/datalog.hpp"
#include "scytag/derivation_graph.hpp"
#include "scytag/scenario_mapper.hpp"
#include "scytag/topology.hpp"
#include "scytag/twin_builder.hpp"

namespace scytag {

enum class StepStatus { success, network_fail, exploit_fail, detection_fail, skipped };

/// Caldera-style names: Success, NetworkFail, ExploitFail, DetectionFail, Skipped.
std::string_view to_string(StepStatus status);
StepStatus parse_status(std::string_view text);

/// Where each AG host runs and on which platform.
struct HostContext {
    /// AG host id -> node id in the environment the run targets.
    std::map<std::string, std::string> host_map;
    /// Node id -> linux / windows / darwin.
    std::map<std::string, std::string> platforms;
};

HostContext context_from_plan(const TwinPlan& plan);
/// Every topology node maps to itself; platform follows the node OS.
HostContext context_from_topology(const Topology& topology);

struct BoundAbility {
    AbilityDef ability;
    std::size_t ordinal = 0;
    std::string ag_step;
    /// AG host id and the environment node it maps to.
    std::string host;
    std::string node;
    std::string resource;
    bool skipped = false;
    std::string skip_reason;
};

struct Binding {
    std::vector<BoundAbility> abilities;
    /// One line per skipped step.
    std::vector<std::string> skips;
};

/// Substitutes `#{host.ip}`, `#{host.name}`, `#{cred.username}`,
/// `#{cred.password}`, `#{service.port}` and `#{service.protocol}` from the
/// facts about the step's host, then checks platform and executor against
/// the target node. Mismatches are skipped, not fatal. Throws AbortError for
/// an unknown ability or an unresolvable placeholder.
Binding bind_ability_variables(const Profile& profile, const std::vector<AbilityDef>& catalog, const FactBase& facts,
                               const HostContext& context);

struct Schedule {
    std::vector<BoundAbility> steps;
    /// Graph atom each step realizes, parallel to `steps`.
    std::vector<int> atoms;
    /// (before, after) pairs over step indices; transitively reduced is not
    /// required.
    std::vector<std::pair<std::size_t, std::size_t>> precedence;
    /// A linear extension: smallest profile ordinal among ready steps first.
    std::vector<std::size_t> order;
    /// Longest precedence chain ending at each step; equal waves on disjoint
    /// hosts may run in parallel.
    std::vector<int> wave;
    DerivationGraph graph;
    std::map<std::string, std::string> host_map;
};

/// Orders steps by AG dependency. Steps sharing a host or a named resource
/// are totally ordered. Throws SchedulingError for a step whose ag_step
/// matches no atom, or when the constraints form a cycle.
Schedule schedule_steps(const DerivationGraph& graph, std::vector<BoundAbility> abilities,
                        std::map<std::string, std::string> host_map = {});

/// Scripted outcomes per (host, ability number) are consumed one per
/// attempt; once exhausted, the attempt succeeds. Unscripted attempts draw
/// from the probabilities with a seeded generator.
struct FaultModel {
    std::uint64_t seed = 0;
    double network = 0.0;
    double exploit = 0.0;
    double detection = 0.0;
    std::map<std::pair<std::string, std::string>, std::vector<StepStatus>> scripted;
};

/// JSON `{"seed": n, "probabilities": {"network": p, ...}, "scripted":
/// [{"host": h, "ability_number": a, "outcomes": ["NetworkFail", ...]}]}`.
FaultModel parse_fault_model(std::string_view document);
std::string fault_model_to_json(const FaultModel& model);

struct RunConfig {
    std::string name = "operation";
    int base_delay_s = 0;
    int jitter_min_s = 2;
    int jitter_max_s = 8;
    int max_attempts = 4;
};

struct StepResult {
    std::size_t ordinal = 0;
    std::string ability_number;
    std::string name;
    std::string technique;
    std::string ag_step;
    std::string host;
    std::string command;
    StepStatus status = StepStatus::skipped;
    int attempts = 0;
    int start = 0;
    int end = 0;
    int wave = 0;
    std::string reason;

    /// `ability_number@host`
    std::string key() const { return ability_number + "@" + host; }
};

struct DebriefReport {
    std::string operation_id;
    std::vector<StepResult> steps;
    bool success = false;
    std::vector<std::string> objectives;
    std::vector<std::string> techniques;
    std::map<std::string, std::string> technique_outcomes;
    std::vector<std::string> events;
    /// Canonical edge labels of the graph the run followed.
    std::vector<std::string> ag_edges;
    RunConfig config;
    std::uint64_t seed = 0;

    std::vector<std::string> succeeded_keys() const;
    std::vector<std::string> succeeded_techniques() const;
};

/// Executes the schedule in its linear order with simulated, ordinal time.
/// NetworkFail retries up to `max_attempts`; ExploitFail leaves the atom
/// underived so later steps proceed only through another derivation;
/// DetectionFail skips the rest of that host.
DebriefReport run_operation(const Schedule& schedule, const FaultModel& faults, const RunConfig& config = {});

std::string debrief_to_json(const DebriefReport& report);
DebriefReport parse_debrief_json(std::string_view document);
std::string debrief_to_html(const DebriefReport& report);

/// Goals derivable when every atom realized by a step requires that step to
/// have succeeded.
std::vector<int> reached_goals(const DerivationGraph& graph, const std::vector<int>& step_atoms,
                               const std::vector<bool>& step_succeeded);

} // namespace scytag
