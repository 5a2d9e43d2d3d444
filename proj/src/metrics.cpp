#include "scytag/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "csv.hpp"
#include "json.hpp"
#include "scytag/error.hpp"

namespace scytag {

namespace {

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

std::size_t common(const std::set<std::string>& a, const std::set<std::string>& b) {
    return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [&](const std::string& x) { return b.contains(x); }));
}

std::vector<std::string> first_occurrences(const std::vector<std::string>& seq) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& x : seq) {
        if (seen.insert(x).second) out.push_back(x);
    }
    return out;
}

double parse_number(const std::string& text, std::size_t row, const char* column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("trace row ") + std::to_string(row) + ": " + column + " is not a number: \"" + text + "\"",
                         static_cast<int>(row + 1), 0);
    }
}

template <typename F>
double mean_of(const std::vector<TraceSample>& samples, F field) {
    if (samples.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : samples) sum += field(s);
    return sum / static_cast<double>(samples.size());
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string cell(const std::optional<double>& v) { return v ? fixed(*v, 2) : "undefined"; }

} // namespace

ReductionRatios reduction_ratios(const TopologyStats& full, const TopologyStats& twin) {
    if (full.hosts <= 0 || full.connections <= 0) throw ValidationError("full topology has no hosts or connections");
    if (twin.hosts < 0 || twin.connections < 0) throw ValidationError("negative twin counts");
    if (twin.hosts > full.hosts || twin.connections > full.connections) {
        throw ValidationError("twin is larger than the full topology");
    }
    return {100.0 * static_cast<double>(full.hosts - twin.hosts) / static_cast<double>(full.hosts),
            100.0 * static_cast<double>(full.connections - twin.connections) / static_cast<double>(full.connections)};
}

double relative_delta(double full_mean, double twin_mean) {
    if (full_mean == 0.0) throw UndefinedMetricError("relative delta undefined for a zero baseline");
    return (full_mean - twin_mean) / full_mean * 100.0;
}

double boot_time_delta(double full_s, double twin_s) { return full_s - twin_s; }

double energy_wh(double cpu_mean_pct, const EnergyParams& params, double seconds) {
    if (params.watts_per_vcpu <= 0.0) throw ValidationError("per-vCPU power must be positive");
    return cpu_mean_pct / 100.0 * params.watts_per_vcpu * seconds / 3600.0;
}

double ResourceTrace::duration_s() const {
    return samples.size() < 2 ? 0.0 : samples.back().timestamp_s - samples.front().timestamp_s;
}

double ResourceTrace::mean_cpu() const { return mean_of(samples, [](const TraceSample& s) { return s.cpu_pct; }); }
double ResourceTrace::mean_ram() const { return mean_of(samples, [](const TraceSample& s) { return s.ram_gb; }); }
double ResourceTrace::mean_io() const { return mean_of(samples, [](const TraceSample& s) { return s.io_bytes; }); }

ResourceTrace parse_trace(std::string_view csv) {
    ResourceTrace t;
    const auto rows = detail::parse_csv_table(csv, {"timestamp_s", "cpu_pct", "ram_gb", "io_bytes"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        TraceSample s{parse_number(rows[i][0], i + 1, "timestamp_s"), parse_number(rows[i][1], i + 1, "cpu_pct"),
                      parse_number(rows[i][2], i + 1, "ram_gb"), parse_number(rows[i][3], i + 1, "io_bytes")};
        if (s.cpu_pct < 0.0 || s.cpu_pct > 100.0) {
            throw ValidationError("trace row " + std::to_string(i + 1) + ": cpu_pct outside [0, 100]");
        }
        if (!t.samples.empty() && s.timestamp_s < t.samples.back().timestamp_s) {
            throw ValidationError("trace row " + std::to_string(i + 1) + ": timestamp goes backwards");
        }
        t.samples.push_back(s);
    }
    return t;
}

RuntimeComparison compare_runtime(const ResourceTrace& full, const ResourceTrace& twin, const EnergyParams& params) {
    RuntimeComparison r;
    r.cpu_full = full.mean_cpu();
    r.cpu_twin = twin.mean_cpu();
    r.ram_full = full.mean_ram();
    r.ram_twin = twin.mean_ram();
    r.io_full = full.mean_io();
    r.io_twin = twin.mean_io();
    r.time_full = full.duration_s();
    r.time_twin = twin.duration_s();
    r.cpu_delta_pct = relative_delta(r.cpu_full, r.cpu_twin);
    r.ram_delta_pct = relative_delta(r.ram_full, r.ram_twin);
    r.io_delta_pct = r.io_full == r.io_twin ? 0.0 : relative_delta(r.io_full, r.io_twin);
    r.time_delta_s = boot_time_delta(r.time_full, r.time_twin);
    r.energy_full = energy_wh(r.cpu_full, params, r.time_full);
    r.energy_twin = energy_wh(r.cpu_twin, params, r.time_twin);
    r.energy_delta_pct = relative_delta(r.energy_full, r.energy_twin);
    return r;
}

double ability_success_parity(const std::vector<std::string>& succ_full, const std::vector<std::string>& succ_twin) {
    const auto full = as_set(succ_full);
    if (full.empty()) throw UndefinedMetricError("ASP undefined: no ability succeeded on the full network");
    return static_cast<double>(common(full, as_set(succ_twin))) / static_cast<double>(full.size());
}

double technique_coverage_parity(const std::vector<std::string>& full, const std::vector<std::string>& twin) {
    const auto a = as_set(full);
    const auto b = as_set(twin);
    const std::size_t both = common(a, b);
    const std::size_t either = a.size() + b.size() - both;
    if (either == 0) throw UndefinedMetricError("TCP undefined: both technique sets are empty");
    return static_cast<double>(both) / static_cast<double>(either);
}

double path_equivalence(const std::vector<std::string>& full_edges, const std::vector<std::string>& twin_edges) {
    const auto full = as_set(full_edges);
    if (full.empty()) throw UndefinedMetricError("PES undefined: the full graph has no edges");
    return static_cast<double>(common(full, as_set(twin_edges))) / static_cast<double>(full.size());
}

double order_similarity(const std::vector<std::string>& seq_full, const std::vector<std::string>& seq_twin) {
    const auto a = first_occurrences(seq_full);
    const auto b = first_occurrences(seq_twin);
    std::map<std::string, std::size_t> rank_b;
    for (std::size_t i = 0; i < b.size(); ++i) rank_b[b[i]] = i;
    std::vector<std::size_t> ranks;
    for (const auto& x : a) {
        if (auto it = rank_b.find(x); it != rank_b.end()) ranks.push_back(it->second);
    }
    const std::size_t m = ranks.size();
    if (m < 2) throw UndefinedMetricError("order similarity undefined: fewer than two common abilities");
    long balance = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) balance += ranks[i] < ranks[j] ? 1 : -1;
    }
    return static_cast<double>(balance) / (static_cast<double>(m * (m - 1)) / 2.0);
}

int objective_discrepancy(const DebriefReport& full, const DebriefReport& twin) {
    return full.success && twin.success ? 0 : 1;
}

EffectivenessReport compare_debriefs(const DebriefReport& full, const DebriefReport& twin) {
    EffectivenessReport r;
    auto attempt = [&](const char* name, std::optional<double>& slot, auto&& compute) {
        try {
            slot = compute();
        } catch (const UndefinedMetricError&) {
            r.undefined.push_back(name);
        }
    };
    attempt("ASP", r.asp, [&] { return ability_success_parity(full.succeeded_keys(), twin.succeeded_keys()); });
    attempt("TCP", r.tcp, [&] { return technique_coverage_parity(full.succeeded_techniques(), twin.succeeded_techniques()); });
    attempt("PES", r.pes, [&] { return path_equivalence(full.ag_edges, twin.ag_edges); });
    attempt("tau", r.tau, [&] { return order_similarity(full.succeeded_keys(), twin.succeeded_keys()); });
    r.objective_delta = objective_discrepancy(full, twin);
    return r;
}

std::string effectiveness_to_json(const EffectivenessReport& report) {
    nlohmann::ordered_json doc;
    auto put = [&](const char* key, const std::optional<double>& v) {
        doc[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    put("ASP", report.asp);
    put("TCP", report.tcp);
    put("PES", report.pes);
    put("tau", report.tau);
    doc["delta_obj"] = report.objective_delta;
    doc["undefined"] = report.undefined;
    return doc.dump(2) + "\n";
}

std::string effectiveness_to_csv(const EffectivenessReport& report) {
    return "metric,value\nASP," + cell(report.asp) + "\nTCP," + cell(report.tcp) + "\nPES," + cell(report.pes) + "\ntau," +
           cell(report.tau) + "\ndelta_obj," + std::to_string(report.objective_delta) + "\n";
}

std::string structural_to_csv(const std::string& name, const TopologyStats& full, const TopologyStats& twin) {
    const auto r = reduction_ratios(full, twin);
    return "topology,hosts_full,hosts_twin,r_h_pct,connections_full,connections_twin,r_e_pct\n" +
           detail::csv_row({name, std::to_string(full.hosts), std::to_string(twin.hosts), fixed(r.hosts_pct, 2),
                            std::to_string(full.connections), std::to_string(twin.connections),
                            fixed(r.connections_pct, 2)});
}

std::string runtime_to_csv(const std::string& name, const RuntimeComparison& rt) {
    std::string out = "topology,metric,full,twin,delta\n";
    auto row = [&](const char* metric, double full, double twin, double delta, int decimals) {
        out += detail::csv_row({name, metric, fixed(full, decimals), fixed(twin, decimals), fixed(delta, 2)});
    };
    row("cpu_pct", rt.cpu_full, rt.cpu_twin, rt.cpu_delta_pct, 2);
    row("ram_gb", rt.ram_full, rt.ram_twin, rt.ram_delta_pct, 3);
    row("io_bytes", rt.io_full, rt.io_twin, rt.io_delta_pct, 0);
    row("boot_s", rt.time_full, rt.time_twin, rt.time_delta_s, 0);
    row("energy_wh", rt.energy_full, rt.energy_twin, rt.energy_delta_pct, 4);
    return out;
}

} // namespace scytag
