#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecol/stats.hpp"

namespace ecol {

inline constexpr int kArtifactSchemaVersion = 1;
inline constexpr std::string_view kArtifactVersion = "0.1.0";

nlohmann::json ci_to_json(const CIReport& ci);

/// Throws InvalidArgument naming the first structural problem.
void validate_result_artifact(const nlohmann::json& j);

struct RegistryEntry {
    std::string claim;
    std::filesystem::path path;
};

struct RegistryProblem {
    RegistryEntry entry;
    std::string error;  // "missing" or the parse/validation message
};

/// Tab-separated `claim<TAB>path` rows; blank lines and '#' comments ignored.
/// Relative paths resolve against the registry file's directory.
std::vector<RegistryEntry> read_registry(const std::filesystem::path& registry);

std::vector<RegistryProblem> verify_registry(const std::filesystem::path& registry);

}  // namespace ecol
