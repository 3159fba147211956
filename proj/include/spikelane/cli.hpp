#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spikelane {

/// Entry point of the `spikelane` tool. `args` excludes the program name.
/// Returns the process exit code: 0 when every requested artifact was
/// written, 1 on a runtime failure, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spikelane
