#include "scytag/emu_sim.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include "json.hpp"
#include "scytag/error.hpp"

namespace scytag {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

constexpr StepStatus all_statuses[] = {StepStatus::success, StepStatus::network_fail, StepStatus::exploit_fail,
                                       StepStatus::detection_fail, StepStatus::skipped};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string platform_of_os(const std::string& os) {
    const std::string l = lower(os);
    if (l.find("windows") != std::string::npos) return "windows";
    if (l.find("mac") != std::string::npos || l.find("darwin") != std::string::npos) return "darwin";
    return "linux";
}

bool executor_runs_on(const std::string& executor, const std::string& platform) {
    static const std::map<std::string, std::set<std::string>> allowed = {
        {"linux", {"sh", "bash", "proc"}},
        {"windows", {"psh", "pwsh", "cmd", "proc"}},
        {"darwin", {"sh", "bash", "zsh", "proc"}},
    };
    auto it = allowed.find(platform);
    return it != allowed.end() && it->second.contains(executor);
}

/// First fact (in canonical order) of `predicate` whose argument `pos` is `host`.
const Fact* about(const FactBase& facts, std::string_view predicate, std::size_t pos, const std::string& host) {
    for (const auto& f : facts) {
        if (f.predicate == predicate && pos < f.args.size() && f.args[pos] == host) return &f;
    }
    return nullptr;
}

std::string resolve(const std::string& key, const BoundAbility& step, const FactBase& facts) {
    const Fact* f = nullptr;
    if (key == "host.name") return step.node;
    if (key == "host.ip" && (f = about(facts, "hasIP", 1, step.host))) return f->args[0];
    if (key == "cred.username" && (f = about(facts, "hasAccount", 1, step.host))) return f->args[0];
    if (key == "service.protocol" && (f = about(facts, "networkService", 0, step.host))) return f->args[2];
    if (key == "service.port" && (f = about(facts, "networkService", 0, step.host))) return f->args[3];
    throw AbortError("ability " + step.ability.ability_number + " on " + step.host + ": cannot resolve #{" + key + "}");
}

std::string substitute(const BoundAbility& step, const FactBase& facts) {
    const std::string& command = step.ability.command;
    placeholders(command);
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = command.find("#{", pos);
        if (open == std::string::npos) break;
        const std::size_t close = command.find('}', open);
        out += command.substr(pos, open - pos);
        out += resolve(command.substr(open + 2, close - open - 2), step, facts);
        pos = close + 1;
    }
    return out + command.substr(pos);
}

/// Atoms reachable backwards from `atom` through any derivation.
std::set<int> ancestors(const DerivationGraph& g, int atom) {
    std::set<int> seen;
    std::vector<int> stack{atom};
    while (!stack.empty()) {
        const int a = stack.back();
        stack.pop_back();
        for (int r : g.derivations(a)) {
            for (int p : g.premises(r)) {
                if (seen.insert(p).second) stack.push_back(p);
            }
        }
    }
    return seen;
}

/// Derivability with realized atoms gated on their steps. `pending` atoms are
/// judged on their premises alone.
class Support {
public:
    Support(const DerivationGraph& g, const std::map<int, std::vector<std::size_t>>& realized,
            const std::vector<StepStatus>& status, const std::vector<bool>& done)
        : g_(g), realized_(realized), status_(status), done_(done) {}

    bool derivable(int atom) {
        const GraphNode& n = g_.node(atom);
        if (n.kind == NodeKind::primitive) return true;
        for (int r : g_.derivations(atom)) {
            const auto& ps = g_.premises(r);
            if (std::all_of(ps.begin(), ps.end(), [&](int p) { return established(p); })) return true;
        }
        return false;
    }

    bool established(int atom) {
        if (auto it = memo_.find(atom); it != memo_.end()) return it->second;
        bool ok = derivable(atom);
        if (ok) {
            if (auto it = realized_.find(atom); it != realized_.end()) {
                ok = std::all_of(it->second.begin(), it->second.end(),
                                 [&](std::size_t s) { return done_[s] && status_[s] == StepStatus::success; });
            }
        }
        memo_[atom] = ok;
        return ok;
    }

private:
    const DerivationGraph& g_;
    const std::map<int, std::vector<std::size_t>>& realized_;
    const std::vector<StepStatus>& status_;
    const std::vector<bool>& done_;
    std::map<int, bool> memo_;
};

std::uint64_t fnv(std::uint64_t h, std::string_view text) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string html_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string_view to_string(StepStatus status) {
    switch (status) {
    case StepStatus::success: return "Success";
    case StepStatus::network_fail: return "NetworkFail";
    case StepStatus::exploit_fail: return "ExploitFail";
    case StepStatus::detection_fail: return "DetectionFail";
    case StepStatus::skipped: return "Skipped";
    }
    return "?";
}

StepStatus parse_status(std::string_view text) {
    for (StepStatus s : all_statuses) {
        if (to_string(s) == text) return s;
    }
    throw ParseError("unknown step status \"" + std::string(text) + "\"");
}

HostContext context_from_plan(const TwinPlan& plan) {
    HostContext ctx;
    ctx.host_map = plan.host_map;
    for (const auto& n : plan.nodes) ctx.platforms[n.id] = n.platform.empty() ? platform_of_os(n.os) : n.platform;
    return ctx;
}

HostContext context_from_topology(const Topology& topology) {
    HostContext ctx;
    for (const auto& n : topology.nodes) {
        ctx.host_map[n.id] = n.id;
        ctx.platforms[n.id] = platform_of_os(n.os);
    }
    return ctx;
}

Binding bind_ability_variables(const Profile& profile, const std::vector<AbilityDef>& catalog, const FactBase& facts,
                               const HostContext& context) {
    std::map<std::string, const AbilityDef*> by_number;
    for (const auto& a : catalog) by_number.emplace(a.ability_number, &a);

    Binding out;
    for (std::size_t i = 0; i < profile.steps.size(); ++i) {
        const ProfileStep& ps = profile.steps[i];
        auto found = by_number.find(ps.ability_number);
        if (found == by_number.end()) throw AbortError("ability " + ps.ability_number + " is not in the catalog");
        auto mapped = context.host_map.find(ps.host);
        if (mapped == context.host_map.end()) {
            throw AbortError("step " + std::to_string(i + 1) + ": host \"" + ps.host + "\" is not in the environment");
        }

        BoundAbility b;
        b.ability = *found->second;
        b.ordinal = i;
        b.ag_step = ps.ag_step;
        b.host = ps.host;
        b.node = mapped->second;
        b.resource = ps.resource;
        b.ability.command = substitute(b, facts);

        const auto platform = context.platforms.find(b.node);
        const std::string node_platform = platform == context.platforms.end() ? "" : platform->second;
        if (!b.ability.platform.empty() && b.ability.platform != node_platform) {
            b.skipped = true;
            b.skip_reason = "platform mismatch: ability wants " + b.ability.platform + ", " + b.node + " runs " +
                            (node_platform.empty() ? "unknown" : node_platform);
        } else if (!b.ability.executor.empty() && !b.ability.platform.empty() &&
                   !executor_runs_on(b.ability.executor, node_platform)) {
            b.skipped = true;
            b.skip_reason = "executor mismatch: " + b.ability.executor + " does not run on " + node_platform;
        }
        if (b.skipped) out.skips.push_back("step " + std::to_string(i + 1) + " (" + b.ability.ability_number + "): " + b.skip_reason);
        out.abilities.push_back(std::move(b));
    }
    return out;
}

Schedule schedule_steps(const DerivationGraph& graph, std::vector<BoundAbility> abilities,
                        std::map<std::string, std::string> host_map) {
    Schedule s;
    s.graph = graph;
    s.host_map = std::move(host_map);
    const std::size_t n = abilities.size();
    for (const auto& b : abilities) {
        if (b.ag_step.empty()) {
            throw SchedulingError("ability " + b.ability.ability_number + " (step " + std::to_string(b.ordinal + 1) +
                                  ") has no attack-graph step");
        }
        const Atom pattern = parse_atom(b.ag_step);
        int atom = 0;
        for (const auto& node : graph.nodes()) {
            if (node.is_atom() && matches(pattern, node.fact)) {
                atom = node.id;
                break;
            }
        }
        if (atom == 0) {
            throw SchedulingError("ability " + b.ability.ability_number + " (step " + std::to_string(b.ordinal + 1) +
                                  "): no attack-graph atom matches " + b.ag_step);
        }
        s.atoms.push_back(atom);
    }
    s.steps = std::move(abilities);

    std::vector<std::set<int>> above(n);
    for (std::size_t i = 0; i < n; ++i) above[i] = ancestors(graph, s.atoms[i]);

    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool feeds = above[j].contains(s.atoms[i]);
            const bool fed = above[i].contains(s.atoms[j]);
            const auto& a = s.steps[i];
            const auto& b = s.steps[j];
            const bool shared = a.node == b.node || (!a.resource.empty() && a.resource == b.resource) ||
                                s.atoms[i] == s.atoms[j];
            if (feeds || (shared && !fed && a.ordinal < b.ordinal)) edges.emplace(i, j);
        }
    }
    s.precedence.assign(edges.begin(), edges.end());

    std::vector<int> indegree(n, 0);
    std::vector<std::vector<std::size_t>> next(n);
    for (const auto& [a, b] : s.precedence) {
        ++indegree[b];
        next[a].push_back(b);
    }
    auto later = [&](std::size_t a, std::size_t b) { return s.steps[a].ordinal > s.steps[b].ordinal; };
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) ready.push_back(i);
    }
    s.wave.assign(n, 0);
    while (!ready.empty()) {
        std::sort(ready.begin(), ready.end(), later);
        const std::size_t at = ready.back();
        ready.pop_back();
        s.order.push_back(at);
        for (std::size_t b : next[at]) {
            s.wave[b] = std::max(s.wave[b], s.wave[at] + 1);
            if (--indegree[b] == 0) ready.push_back(b);
        }
    }
    if (s.order.size() != n) throw SchedulingError("step ordering constraints form a cycle");
    return s;
}

FaultModel parse_fault_model(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("fault model: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("fault model: expected a JSON object");
    FaultModel m;
    try {
        if (auto it = doc.find("seed"); it != doc.end()) m.seed = it->get<std::uint64_t>();
        if (auto it = doc.find("probabilities"); it != doc.end()) {
            m.network = it->value("network", 0.0);
            m.exploit = it->value("exploit", 0.0);
            m.detection = it->value("detection", 0.0);
        }
        if (auto it = doc.find("scripted"); it != doc.end()) {
            for (const auto& entry : *it) {
                std::vector<StepStatus> outcomes;
                for (const auto& o : entry.at("outcomes")) outcomes.push_back(parse_status(o.get<std::string>()));
                m.scripted[{entry.at("host").get<std::string>(), entry.at("ability_number").get<std::string>()}] =
                    std::move(outcomes);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("fault model: ") + e.what());
    }
    for (double p : {m.network, m.exploit, m.detection}) {
        if (p < 0.0 || p > 1.0) throw ValidationError("fault model: probabilities must lie in [0, 1]");
    }
    if (m.network + m.exploit + m.detection > 1.0) throw ValidationError("fault model: probabilities sum above 1");
    return m;
}

std::string fault_model_to_json(const FaultModel& model) {
    ordered scripted = ordered::array();
    for (const auto& [key, outcomes] : model.scripted) {
        ordered list = ordered::array();
        for (StepStatus s : outcomes) list.push_back(to_string(s));
        scripted.push_back({{"host", key.first}, {"ability_number", key.second}, {"outcomes", list}});
    }
    ordered doc = {{"seed", model.seed},
                   {"probabilities", {{"network", model.network}, {"exploit", model.exploit}, {"detection", model.detection}}},
                   {"scripted", scripted}};
    return doc.dump(2) + "\n";
}

std::vector<std::string> DebriefReport::succeeded_keys() const {
    std::vector<std::string> out;
    for (const auto& s : steps) {
        if (s.status == StepStatus::success) out.push_back(s.key());
    }
    return out;
}

std::vector<std::string> DebriefReport::succeeded_techniques() const {
    std::vector<std::string> out;
    for (const auto& s : steps) {
        if (s.status == StepStatus::success && std::find(out.begin(), out.end(), s.technique) == out.end()) {
            out.push_back(s.technique);
        }
    }
    return out;
}

std::vector<int> reached_goals(const DerivationGraph& graph, const std::vector<int>& step_atoms,
                               const std::vector<bool>& step_succeeded) {
    std::map<int, std::vector<std::size_t>> realized;
    for (std::size_t i = 0; i < step_atoms.size(); ++i) realized[step_atoms[i]].push_back(i);
    std::vector<StepStatus> status;
    for (bool ok : step_succeeded) status.push_back(ok ? StepStatus::success : StepStatus::exploit_fail);
    const std::vector<bool> done(step_atoms.size(), true);
    Support support(graph, realized, status, done);
    std::vector<int> out;
    if (step_atoms.empty()) return out;
    for (int g : graph.goals()) {
        if (support.established(g)) out.push_back(g);
    }
    return out;
}

DebriefReport run_operation(const Schedule& schedule, const FaultModel& faults, const RunConfig& config) {
    const std::size_t n = schedule.steps.size();
    DebriefReport report;
    report.config = config;
    report.seed = faults.seed;
    report.ag_edges = canonical_edge_labels(schedule.graph, schedule.host_map);

    std::uint64_t id = fnv(0xcbf29ce484222325ULL, config.name);
    id = fnv(id, std::to_string(faults.seed));
    for (const auto& b : schedule.steps) id = fnv(id, b.ability.ability_number + "@" + b.host);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(id));
    report.operation_id = config.name + "-" + hex;

    std::map<int, std::vector<std::size_t>> realized;
    for (std::size_t i = 0; i < n; ++i) realized[schedule.atoms[i]].push_back(i);
    std::vector<StepStatus> status(n, StepStatus::skipped);
    std::vector<bool> done(n, false);
    std::map<std::pair<std::string, std::string>, std::size_t> cursor;
    std::set<std::string> detected;
    std::mt19937_64 rng(faults.seed);
    auto draw = [&] {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u < faults.network) return StepStatus::network_fail;
        if (u < faults.network + faults.exploit) return StepStatus::exploit_fail;
        if (u < faults.network + faults.exploit + faults.detection) return StepStatus::detection_fail;
        return StepStatus::success;
    };

    int clock = 0;
    for (std::size_t idx : schedule.order) {
        const BoundAbility& b = schedule.steps[idx];
        StepResult r;
        r.ordinal = b.ordinal;
        r.ability_number = b.ability.ability_number;
        r.name = b.ability.name;
        r.technique = b.ability.technique;
        r.ag_step = b.ag_step;
        r.host = b.host;
        r.command = b.ability.command;
        r.wave = schedule.wave[idx];
        r.start = clock;

        if (b.skipped) {
            r.reason = b.skip_reason;
        } else if (detected.contains(b.node)) {
            r.reason = "host " + b.node + " blocked after detection";
        } else if (Support(schedule.graph, realized, status, done).derivable(schedule.atoms[idx]) == false) {
            r.reason = "prerequisites not reached";
        } else {
            auto& script = faults.scripted;
            auto key = std::make_pair(b.host, b.ability.ability_number);
            auto found = script.find(key);
            while (true) {
                ++r.attempts;
                StepStatus outcome;
                if (found != script.end()) {
                    std::size_t& c = cursor[key];
                    outcome = c < found->second.size() ? found->second[c++] : StepStatus::success;
                } else {
                    outcome = draw();
                }
                if (outcome == StepStatus::skipped) outcome = StepStatus::success;
                r.status = outcome;
                if (outcome != StepStatus::network_fail || r.attempts >= config.max_attempts) break;
                report.events.push_back("step " + std::to_string(b.ordinal + 1) + " " + r.key() + ": agent unreachable, retry");
            }
            clock += r.attempts;
            if (r.status == StepStatus::detection_fail) {
                detected.insert(b.node);
                report.events.push_back("detection on " + b.node + " at step " + std::to_string(b.ordinal + 1) +
                                        "; remaining steps on this host skipped");
            } else if (r.status == StepStatus::exploit_fail) {
                report.events.push_back("step " + std::to_string(b.ordinal + 1) + " " + r.key() + ": exploit failed");
            } else if (r.status == StepStatus::network_fail) {
                report.events.push_back("step " + std::to_string(b.ordinal + 1) + " " + r.key() + ": gave up after " +
                                        std::to_string(r.attempts) + " attempts");
            }
        }
        r.end = clock;
        status[idx] = r.status;
        done[idx] = true;
        if (r.status == StepStatus::skipped) {
            report.events.push_back("step " + std::to_string(b.ordinal + 1) + " " + r.key() + " skipped: " + r.reason);
        }
        report.steps.push_back(std::move(r));
    }

    if (n > 0) {
        Support support(schedule.graph, realized, status, done);
        for (int g : schedule.graph.goals()) {
            if (support.established(g)) report.objectives.push_back(to_string(schedule.graph.node(g).fact));
        }
    }
    report.success = !report.objectives.empty();

    for (const auto& s : report.steps) {
        if (std::find(report.techniques.begin(), report.techniques.end(), s.technique) == report.techniques.end()) {
            report.techniques.push_back(s.technique);
        }
        auto [it, fresh] = report.technique_outcomes.emplace(s.technique, std::string(to_string(s.status)));
        if (!fresh && it->second == "Success" && s.status != StepStatus::success) it->second = to_string(s.status);
    }
    return report;
}

std::string debrief_to_json(const DebriefReport& report) {
    ordered steps = ordered::array();
    for (const auto& s : report.steps) {
        steps.push_back({{"ordinal", s.ordinal},
                         {"ability_number", s.ability_number},
                         {"name", s.name},
                         {"technique", s.technique},
                         {"ag_step", s.ag_step},
                         {"host", s.host},
                         {"command", s.command},
                         {"status", to_string(s.status)},
                         {"attempts", s.attempts},
                         {"start", s.start},
                         {"end", s.end},
                         {"wave", s.wave},
                         {"reason", s.reason}});
    }
    ordered outcomes = ordered::object();
    for (const auto& [t, o] : report.technique_outcomes) outcomes[t] = o;
    ordered doc = {{"operation_id", report.operation_id},
                   {"steps", steps},
                   {"success", report.success},
                   {"objectives", report.objectives},
                   {"techniques", report.techniques},
                   {"technique_outcomes", outcomes},
                   {"events", report.events},
                   {"ag_edges", report.ag_edges},
                   {"config",
                    {{"name", report.config.name},
                     {"base_delay_s", report.config.base_delay_s},
                     {"jitter_s", {report.config.jitter_min_s, report.config.jitter_max_s}},
                     {"max_attempts", report.config.max_attempts},
                     {"seed", report.seed}}}};
    return doc.dump(2) + "\n";
}

DebriefReport parse_debrief_json(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("debrief: ") + e.what());
    }
    DebriefReport r;
    try {
        r.operation_id = doc.at("operation_id").get<std::string>();
        for (const auto& s : doc.at("steps")) {
            StepResult x;
            x.ordinal = s.at("ordinal").get<std::size_t>();
            x.ability_number = s.at("ability_number").get<std::string>();
            x.name = s.value("name", "");
            x.technique = s.at("technique").get<std::string>();
            x.ag_step = s.value("ag_step", "");
            x.host = s.at("host").get<std::string>();
            x.command = s.value("command", "");
            x.status = parse_status(s.at("status").get<std::string>());
            x.attempts = s.at("attempts").get<int>();
            x.start = s.value("start", 0);
            x.end = s.value("end", 0);
            x.wave = s.value("wave", 0);
            x.reason = s.value("reason", "");
            r.steps.push_back(std::move(x));
        }
        r.success = doc.at("success").get<bool>();
        r.objectives = doc.value("objectives", std::vector<std::string>{});
        r.techniques = doc.value("techniques", std::vector<std::string>{});
        r.technique_outcomes = doc.value("technique_outcomes", std::map<std::string, std::string>{});
        r.events = doc.value("events", std::vector<std::string>{});
        r.ag_edges = doc.value("ag_edges", std::vector<std::string>{});
        if (auto c = doc.find("config"); c != doc.end()) {
            r.config.name = c->value("name", r.config.name);
            r.config.base_delay_s = c->value("base_delay_s", r.config.base_delay_s);
            if (auto j = c->find("jitter_s"); j != c->end()) {
                r.config.jitter_min_s = j->at(0).get<int>();
                r.config.jitter_max_s = j->at(1).get<int>();
            }
            r.config.max_attempts = c->value("max_attempts", r.config.max_attempts);
            r.seed = c->value("seed", std::uint64_t{0});
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("debrief: ") + e.what());
    }
    return r;
}

std::string debrief_to_html(const DebriefReport& report) {
    std::string out = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" + html_escape(report.operation_id) +
                      "</title></head><body>\n";
    out += "<h1>Operation " + html_escape(report.operation_id) + "</h1>\n";
    out += std::string("<p>Result: <b>") + (report.success ? "success" : "failure") + "</b></p>\n";
    out += "<table border=\"1\">\n<tr><th>#</th><th>Ability</th><th>Technique</th><th>Host</th><th>Status</th>"
           "<th>Attempts</th><th>Start</th><th>End</th></tr>\n";
    for (const auto& s : report.steps) {
        out += "<tr><td>" + std::to_string(s.ordinal + 1) + "</td><td>" + html_escape(s.name.empty() ? s.ability_number : s.name) +
               "</td><td>" + html_escape(s.technique) + "</td><td>" + html_escape(s.host) + "</td><td>" +
               std::string(to_string(s.status)) + "</td><td>" + std::to_string(s.attempts) + "</td><td>" +
               std::to_string(s.start) + "</td><td>" + std::to_string(s.end) + "</td></tr>\n";
    }
    out += "</table>\n<h2>Objectives</h2>\n<ul>\n";
    for (const auto& o : report.objectives) out += "<li>" + html_escape(o) + "</li>\n";
    out += "</ul>\n<h2>Events</h2>\n<ul>\n";
    for (const auto& e : report.events) out += "<li>" + html_escape(e) + "</li>\n";
    out += "</ul>\n</body></html>\n";
    return out;
}

} // namespace scytag
