#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace alignlab {

// Subcommands: run, oracle, gap-scan. Returns the process exit code.
int cli_main(int argc, char** argv);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alignlab
