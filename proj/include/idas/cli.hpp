#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace idas {

/// Entry point of the `idas` command; `args` excludes the program name.
/// Returns 0 on success, 1 on an operational error, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace idas
