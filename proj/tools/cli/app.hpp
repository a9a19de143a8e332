#pragma once

namespace aberray::cli {

/// Parses argv, runs one subcommand and returns the process exit status:
/// 0 on success, 2 on a usage error, 1 on a runtime error.
int run(int argc, const char* const* argv);

}  // namespace aberray::cli
