#pragma once

#include <string>
#include <vector>

namespace tonepipe {

// Entry point behind main(). One pipeline stage per subcommand:
// prepare | train | eval | predict | geotag | analyze | report.
// Settings come from --config key=value files, overridable by a flag of the
// same name (--train.epochs 5). Returns the process exit status; failures
// print a single "error: ..." line on stderr and leave no partial artifacts.
int run_command(int argc, const char* const* argv);

// In-process variant for tests; args excludes the program name.
int run_command(const std::vector<std::string>& args);

}  // namespace tonepipe
