// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dtloc {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,       ///< I/O or unexpected runtime failure
  kExitParseError = 2,    ///< malformed scene, report or config text
  kExitInvalid = 3,       ///< well-formed input that violates an invariant
  kExitSceneMismatch = 4, ///< report or database built for a different scene
  kExitBadDatabase = 5,   ///< truncated, corrupt or wrong-version database file
  kExitUsage = 64,        ///< unknown flag or missing argument
};

/// Runs the CLI on `args` (without the program name), writing results to `out` and
/// diagnostics to `err`.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace dtloc
