#pragma once

#include <string>
#include <vector>

namespace srn {

// Entry point behind the `srn` binary. `args` excludes the program name.
// Exit codes: 0 success, 1 usage error, 2 data/file error, 3 numeric failure.
int run_cli(const std::vector<std::string>& args);

} // namespace srn
