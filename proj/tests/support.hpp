#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "scytag/cli.hpp"

namespace testing_support {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(SCYTAG_FIXTURES) / name; }

inline std::string fixture_text(const std::string& name, const std::string& file) { return read_file(fixture(name) / file); }

/// Pipeline inputs for one of the shipped case studies.
inline scytag::PipelineConfig case_config(const std::string& name, const std::filesystem::path& out) {
    const auto dir = fixture(name);
    scytag::PipelineConfig c;
    c.topology = (dir / "topology.json").string();
    c.vulns = (dir / "vulns.csv").string();
    c.rules = (dir / "rules").string();
    c.assumptions = (dir / "assumptions.P").string();
    c.abilities = (dir / "abilities.yml").string();
    c.map_abilities = (dir / "map_abilities.csv").string();
    c.map_irs = (dir / "map_irs.csv").string();
    c.templates = (dir / "templates.json").string();
    c.faults = (dir / "faults.json").string();
    c.scenario = (dir / "scenario.yml").string();
    c.full_trace = (dir / "full_trace.csv").string();
    c.twin_trace = (dir / "twin_trace.csv").string();
    c.name = name;
    c.out = out.string();
    return c;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto dir = std::filesystem::temp_directory_path() / ("scytag-" + tag + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing_support
