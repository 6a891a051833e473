#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace sparsedyn::cli {

const std::vector<std::string>& command_names();

/// Keys accepted by a command, including the common seed, out and jobs.
std::vector<KeySpec> command_schema(const std::string& command);

/// Runs a validated configuration. Progress goes to `log`; results go to
/// files under the `out` directory.
void run_command(const std::string& command, const Config& config, std::ostream& log);

}  // namespace sparsedyn::cli
