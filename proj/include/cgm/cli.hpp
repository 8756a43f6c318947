#pragma once

#include <string>
#include <vector>

namespace cgm {

/// Command-line front end (analyze / roundtrip / export subcommands).
/// Exit codes: 0 all checks pass, 1 checks fail (report still written), 2 usage error.
int run_cli(const std::vector<std::string>& args);

}  // namespace cgm
