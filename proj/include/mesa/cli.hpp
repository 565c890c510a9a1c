#pragma once

namespace mesa {

/// Entry point for the command line tool. Exit codes: 0 success, 2 config
/// error, 3 solver failure, 4 diagnostics failure under --strict.
int cli_main(int argc, const char* const* argv);

}  // namespace mesa
