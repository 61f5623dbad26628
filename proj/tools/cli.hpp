#pragma once

namespace tio::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDependencyError = 3,
  kCompatibilityError = 4,
  kAssertionFailed = 5,
};

/// Parses the command line, runs one command and returns its exit code.
int run(int argc, char** argv);

}  // namespace tio::cli
