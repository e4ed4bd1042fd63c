#pragma once

// Subcommands of the scenario runner. Each writes its artifacts under `out`
// and returns the process exit status: 0 on success, 2 when an invariant of
// the produced report fails or a run is halted by the blow-up guard.

#include "mmsim/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace mmsim {

int run_command(const std::string& subcommand, const Config& config, const std::filesystem::path& out,
                std::ostream& log);

} // namespace mmsim
