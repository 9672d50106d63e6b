#include "ecol/artifact.hpp"

#include <fstream>

#include "ecol/errors.hpp"

namespace ecol {

using nlohmann::json;

json ci_to_json(const CIReport& ci) {
    return json{{"delta", ci.point},       {"ci_lo", ci.lo}, {"ci_hi", ci.hi},
                {"resamples", ci.resamples}, {"seed", ci.seed}, {"n", ci.n},
                {"significant", ci.significant}};
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

void require_number(const json& j, const char* key, const std::string& where) {
    require(j.contains(key) && j.at(key).is_number(), where + ": missing numeric field '" + key + "'");
}

}  // namespace

void validate_result_artifact(const json& j) {
    require(j.is_object(), "artifact is not a JSON object");
    require(j.contains("schema_version") && j.at("schema_version").is_number_integer(), "missing schema_version");
    require(j.at("schema_version").get<int>() == kArtifactSchemaVersion,
            "unsupported schema_version " + j.at("schema_version").dump());
    require(j.contains("spec") && j.at("spec").is_object(), "missing spec echo");
    const auto& spec = j.at("spec");
    for (const char* key : {"tag", "K", "n_entities", "seed", "embedder", "vw_arms"}) {
        require(spec.contains(key), std::string("spec: missing field '") + key + "'");
    }
    require(j.contains("cells") && j.at("cells").is_array(), "missing cells array");
    std::size_t i = 0;
    for (const auto& c : j.at("cells")) {
        const std::string where = "cells[" + std::to_string(i++) + "]";
        require(c.is_object(), where + ": not an object");
        for (const char* key : {"K", "n", "delta", "ci_lo", "ci_hi"}) require_number(c, key, where);
        for (const char* arm : {"arm_a", "arm_b"}) {
            require(c.contains(arm) && c.at(arm).is_object(), where + ": missing " + arm);
            require_number(c.at(arm), "hit_at_1", where + "." + arm);
            require_number(c.at(arm), "vw", where + "." + arm);
        }
        require(c.at("ci_lo").get<double>() <= c.at("ci_hi").get<double>(), where + ": ci_lo > ci_hi");
    }
    require(j.contains("environment") && j.at("environment").is_object(), "missing environment stamp");
}

std::vector<RegistryEntry> read_registry(const std::filesystem::path& registry) {
    std::ifstream in(registry);
    if (!in) throw InvalidArgument("cannot open registry " + registry.string());
    std::vector<RegistryEntry> out;
    std::string line;
    std::size_t lineno = 0;
    const auto base = registry.parent_path();
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(lineno, "registry row needs claim<TAB>path");
        std::filesystem::path p = line.substr(tab + 1);
        if (p.is_relative()) p = base / p;
        out.push_back({line.substr(0, tab), p});
    }
    return out;
}

std::vector<RegistryProblem> verify_registry(const std::filesystem::path& registry) {
    std::vector<RegistryProblem> problems;
    for (const auto& e : read_registry(registry)) {
        if (!std::filesystem::exists(e.path)) {
            problems.push_back({e, "missing"});
            continue;
        }
        try {
            std::ifstream in(e.path);
            validate_result_artifact(json::parse(in));
        } catch (const std::exception& ex) {
            problems.push_back({e, ex.what()});
        }
    }
    return problems;
}

}  // namespace ecol
