#pragma once

#include "nlh/config.hpp"

#include <string>
#include <vector>

namespace nlh::cli {

enum ExitCode { exit_ok = 0, exit_config = 1, exit_numerical = 2, exit_under_resolved = 3 };

/// One configuration key of a command. Defaults are text so the manifest
/// can echo exactly what was used; an empty default means "derived" and the
/// command fills in the value it resolved.
struct KeyDef {
    std::string name;
    std::string default_value;
    std::string help;
};

const std::vector<std::string>& command_names();
/// Keys accepted by a command (including the shared ones: command, out, preset).
const std::vector<KeyDef>& command_keys(const std::string& command);

/// Environment variable naming the directory relative output paths live under.
constexpr const char* output_root_env = "NLH_OUTPUT_ROOT";

/// Runs one command. `cfg` holds the merged file and flag values; unknown
/// keys are rejected, defaults are filled in, and a manifest.json is written
/// to the output directory whatever the outcome (when the directory can be
/// created). Never throws; errors map to exit codes.
int dispatch(const std::string& command, const KeyValueConfig& cfg);

}  // namespace nlh::cli
