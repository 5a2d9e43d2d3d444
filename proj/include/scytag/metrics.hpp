#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scytag/emu_sim.hpp"

namespace scytag {

struct TopologyStats {
    long hosts = 0;
    long connections = 0;
};

struct ReductionRatios {
    double hosts_pct = 0.0;
    double connections_pct = 0.0;
};

/// Percent of hosts and connections removed. Throws ValidationError when the
/// twin is larger than the full network or the full network is empty.
ReductionRatios reduction_ratios(const TopologyStats& full, const TopologyStats& twin);

/// (full - twin) / full * 100. Throws UndefinedMetricError when full is 0.
double relative_delta(double full_mean, double twin_mean);

double boot_time_delta(double full_s, double twin_s);

struct EnergyParams {
    double watts_per_vcpu = 11.5;
};

/// Watt-hours drawn at `cpu_mean_pct` for `seconds`.
double energy_wh(double cpu_mean_pct, const EnergyParams& params, double seconds);

struct TraceSample {
    double timestamp_s = 0.0;
    double cpu_pct = 0.0;
    double ram_gb = 0.0;
    double io_bytes = 0.0;
};

struct ResourceTrace {
    std::vector<TraceSample> samples;

    double duration_s() const;
    double mean_cpu() const;
    double mean_ram() const;
    double mean_io() const;
};

/// CSV `timestamp_s,cpu_pct,ram_gb,io_bytes`. Timestamps must not decrease and
/// CPU must lie in [0, 100].
ResourceTrace parse_trace(std::string_view csv);

struct RuntimeComparison {
    double cpu_full = 0, cpu_twin = 0, cpu_delta_pct = 0;
    double ram_full = 0, ram_twin = 0, ram_delta_pct = 0;
    double io_full = 0, io_twin = 0, io_delta_pct = 0;
    double time_full = 0, time_twin = 0, time_delta_s = 0;
    double energy_full = 0, energy_twin = 0, energy_delta_pct = 0;
};

RuntimeComparison compare_runtime(const ResourceTrace& full, const ResourceTrace& twin, const EnergyParams& params = {});

/// |full ∩ twin| / |full| over `ability@host` keys.
double ability_success_parity(const std::vector<std::string>& succ_full, const std::vector<std::string>& succ_twin);

/// Jaccard similarity of two technique sets.
double technique_coverage_parity(const std::vector<std::string>& full, const std::vector<std::string>& twin);

/// Share of full-graph edges reproduced in the twin graph, matched by label.
double path_equivalence(const std::vector<std::string>& full_edges, const std::vector<std::string>& twin_edges);

/// Kendall tau-a over the elements both sequences share, each sequence
/// reduced to first occurrences. Needs at least two common elements.
double order_similarity(const std::vector<std::string>& seq_full, const std::vector<std::string>& seq_twin);

int objective_discrepancy(const DebriefReport& full, const DebriefReport& twin);

/// Each field is empty when its metric is undefined for the inputs.
struct EffectivenessReport {
    std::optional<double> asp;
    std::optional<double> tcp;
    std::optional<double> pes;
    std::optional<double> tau;
    int objective_delta = 1;
    std::vector<std::string> undefined;
};

EffectivenessReport compare_debriefs(const DebriefReport& full, const DebriefReport& twin);

std::string effectiveness_to_json(const EffectivenessReport& report);
std::string effectiveness_to_csv(const EffectivenessReport& report);
std::string structural_to_csv(const std::string& name, const TopologyStats& full, const TopologyStats& twin);
std::string runtime_to_csv(const std::string& name, const RuntimeComparison& runtime);

} // namespace scytag
