#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace leafrust::cli {

// Runs the leafrust command line. args[0] is the program name.
// Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace leafrust::cli
