#pragma once

namespace edgesim {

/// Command-line entry point (subcommands: run, validate, manager).
/// Returns 0 on success, 1 on scenario errors, 2 on runtime errors.
int cli_main(int argc, char** argv);

}  // namespace edgesim
