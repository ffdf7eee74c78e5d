#pragma once
// Command layer shared by the C API and the CLI. Every command consumes a
// flat key=value configuration, writes its artifacts plus a manifest.json
// (config echo, input content hashes, version) and stays bit-reproducible
// for a fixed seed: no wall-clock values enter any artifact.

#include <map>
#include <string>

namespace hypercqa::run {

using Config = std::map<std::string, std::string>;

// key=value lines; '#' comments and blank lines are skipped.
Config parse_config_text(const std::string& text);

// Commands: sample | train | eval | oracle | baseline | ablate | stats.
// Returns the payload for commands that produce one (stats without an out
// path); empty otherwise. Errors are reported as hypercqa::Error.
std::string run_command(const std::string& command, const Config& config);

}  // namespace hypercqa::run
