#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "scytag/cli.hpp"
#include "scytag/error.hpp"
#include "support.hpp"

using namespace scytag;
namespace fs = std::filesystem;
using testing_support::read_file;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = cli_main(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::vector<std::string> case_args(const std::string& stage, const std::string& name, const fs::path& out) {
    const PipelineConfig c = testing_support::case_config(name, out);
    return {stage,         "--topology",      c.topology,  "--vulns",      c.vulns,      "--rules",
            c.rules,       "--assumptions",   c.assumptions, "--abilities", c.abilities,  "--map-abilities",
            c.map_abilities, "--map-irs",     c.map_irs,   "--templates",  c.templates,  "--faults",
            c.faults,      "--scenario",      c.scenario,  "--full-trace", c.full_trace, "--twin-trace",
            c.twin_trace,  "--name",          name,        "--out",        out.string()};
}

std::vector<std::string> with(std::vector<std::string> args, const std::string& flag, const std::string& value) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == flag) {
            args[i + 1] = value;
            return args;
        }
    }
    args.push_back(flag);
    args.push_back(value);
    return args;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_file(e.path());
    return files;
}

} // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == exit_usage);
    CHECK(run({"bogus"}).code == exit_usage);
    CHECK(run({"facts", "--topology", "/no/such/file.json"}).code == exit_usage);
    CHECK(run({"--help"}).code == exit_ok);
    const auto dir = testing_support::scratch_dir("cli-usage");
    const Result missing_input = run({"ag", "--out", dir.string()});
    CHECK(missing_input.code == exit_usage);
    CHECK(missing_input.err.find("facts.P") != std::string::npos);
    CHECK(run({"facts", "--out", dir.string()}).code == exit_usage);
}

TEST_CASE("exit codes per failure kind") {
    CHECK(exit_code_for(ParseError("x")) == exit_parse);
    CHECK(exit_code_for(ValidationError("x")) == exit_validation);
    CHECK(exit_code_for(ConsistencyError("x")) == exit_validation);
    CHECK(exit_code_for(CompletionError({"p"})) == exit_validation);
    CHECK(exit_code_for(InfeasibleError("x")) == exit_infeasible);
    CHECK(exit_code_for(AbortError("x")) == exit_abort);
    CHECK(exit_code_for(SchedulingError("x")) == exit_abort);
    CHECK(exit_code_for(InfrastructureError("x")) == exit_infrastructure);
    CHECK(exit_code_for(StageFailure(exit_sanity, "x")) == exit_sanity);
    CHECK(exit_code_for(std::runtime_error("x")) == exit_failure);

    const auto dir = testing_support::scratch_dir("cli-codes");
    const auto base = case_args("all", "uk_office", dir / "out");
    const nlohmann::json topology = nlohmann::json::parse(testing_support::fixture_text("uk_office", "topology.json"));

    SUBCASE("malformed topology") {
        write(dir / "bad.json", "{");
        const Result r = run(with(base, "--topology", (dir / "bad.json").string()));
        CHECK(r.code == exit_parse);
        CHECK(r.err.find("scytag all:") != std::string::npos);
    }
    SUBCASE("dangling link") {
        nlohmann::json t = topology;
        t["links"].push_back({{"a", t["nodes"][0]["id"]}, {"b", "x9"}});
        write(dir / "dangling.json", t.dump());
        CHECK(run(with(base, "--topology", (dir / "dangling.json").string())).code == exit_validation);
    }
    SUBCASE("attack path host cut off from the network") {
        nlohmann::json t = topology;
        nlohmann::json kept = nlohmann::json::array();
        for (const auto& l : t["links"]) {
            if (l["a"] != "alpine-openvpn-1" && l["b"] != "alpine-openvpn-1") kept.push_back(l);
        }
        t["links"] = kept;
        write(dir / "cut.json", t.dump());
        const Result r = run(with(base, "--topology", (dir / "cut.json").string()));
        CHECK(r.code == exit_infeasible);
        CHECK(r.err.find("alpine-openvpn-1") != std::string::npos);
    }
    SUBCASE("missing template") {
        write(dir / "templates.json", "{}");
        CHECK(run(with(base, "--templates", (dir / "templates.json").string())).code == exit_abort);
    }
}

TEST_CASE("empty fact base stops after the attack graph") {
    const auto dir = testing_support::scratch_dir("cli-empty");
    write(dir / "empty.json", R"({"nodes": [], "links": []})");
    const auto args = with(case_args("all", "uk_office", dir / "out"), "--topology", (dir / "empty.json").string());
    const Result r = run(args);
    CHECK(r.code == exit_empty_graph);
    CHECK(r.err.find("empty") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "ag.json"));
    CHECK_FALSE(fs::exists(dir / "out" / "twin_plan.json"));
    CHECK_FALSE(fs::exists(dir / "out" / "twin_ag.json"));
}

TEST_CASE("skip-reduce copies the graph unchanged") {
    const auto dir = testing_support::scratch_dir("cli-skip");
    auto args = case_args("facts", "bank", dir);
    REQUIRE(run(args).code == 0);
    args[0] = "ag";
    REQUIRE(run(args).code == 0);
    args[0] = "reduce";
    args.push_back("--skip-reduce");
    REQUIRE(run(args).code == 0);
    CHECK(read_file(dir / "reduced_ag.json") == read_file(dir / "ag.json"));
}

TEST_CASE("UK Office end to end") {
    const auto dir = testing_support::scratch_dir("cli-uk");
    const Result r = run(case_args("all", "uk_office", dir));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto plan = nlohmann::json::parse(read_file(dir / "twin_plan.json"));
    CHECK(plan["nodes"].size() == 10);
    const auto debrief = nlohmann::json::parse(read_file(dir / "debrief_twin.json"));
    REQUIRE(debrief["steps"].size() == 8);
    for (const auto& s : debrief["steps"]) CHECK(s["status"] == "Success");
    CHECK(read_file(dir / "structural.csv").find(",81.48,") != std::string::npos);
    CHECK(r.out.find("facts: 146 topology + 112 assumed = 258") != std::string::npos);
    const auto metrics = nlohmann::json::parse(read_file(dir / "metrics.json"));
    CHECK(metrics["hops"]["full"] == 5);
    CHECK(metrics["hops"]["twin"] == 5);
    for (const char* f : {"facts.P", "rules.P", "facts_summary.json", "ag.json", "ag.txt", "reduced_ag.json",
                          "reduced_ag.txt", "twin_plan.json", "twin_topology.json", "twin_facts.P", "twin_ag.json",
                          "validation.json", "session.json", "profile.yml", "abilities_bound.yml", "mapping.json",
                          "binding_full.json", "binding_twin.json", "debrief_full.json", "debrief_twin.json",
                          "debrief_full.html", "debrief_twin.html", "structural.csv", "effectiveness.csv",
                          "effectiveness.json", "runtime.csv", "metrics.json"}) {
        CHECK_MESSAGE(fs::exists(dir / f), f);
    }
}

TEST_CASE("all equals the stages run one by one, and reruns are identical") {
    const auto root = testing_support::scratch_dir("cli-compose");
    const auto chained = root / "all";
    const auto staged = root / "staged";
    const auto again = root / "again";
    REQUIRE(run(with(case_args("all", "bank", chained), "--seed", "5")).code == 0);
    for (const auto& stage : stage_names()) {
        if (stage == "all") continue;
        REQUIRE_MESSAGE(run(with(case_args(stage, "bank", staged), "--seed", "5")).code == 0, stage);
    }
    REQUIRE(run(with(case_args("all", "bank", again), "--seed", "5")).code == 0);
    const auto a = snapshot(chained);
    CHECK(a.size() >= 25);
    CHECK(snapshot(staged) == a);
    CHECK(snapshot(again) == a);
}

TEST_CASE("SCYTAG_OUT sets the default output directory") {
    const auto dir = testing_support::scratch_dir("cli-env");
    auto args = case_args("facts", "bank", dir);
    args.resize(args.size() - 2);
    ::setenv("SCYTAG_OUT", dir.string().c_str(), 1);
    const Result r = run(args);
    ::unsetenv("SCYTAG_OUT");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "facts.P"));
}
