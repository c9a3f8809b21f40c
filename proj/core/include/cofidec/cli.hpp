#pragma once

#include <string>
#include <vector>

namespace cofidec {

/// Full command-line surface (barycenter, decode, views, bench, fuse-replay).
/// Returns the process exit code; 0 iff all outputs were fully written.
/// Partial outputs are removed on failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace cofidec
