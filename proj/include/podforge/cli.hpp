#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "podforge/runner.hpp"

namespace podforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitStageFailure = 1;
inline constexpr int kExitUsage = 2;

/// `podforge script|generate|eval|ablate|voicepool`. args[0] is the program
/// name. Config precedence: defaults, then --config YAML, then environment,
/// then flags.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

}  // namespace podforge
