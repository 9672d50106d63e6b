#pragma once

#include <iosfwd>

namespace ecol {

inline constexpr const char* kSeedEnvVar = "ECOL_SEED";

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ecol
