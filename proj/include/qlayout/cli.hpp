#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qlayout {

/// Entry point of the `qlayout` tool. Subcommands: synth, refine, eval,
/// demo-train, plot. Returns the process exit code; diagnostics go to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace qlayout
