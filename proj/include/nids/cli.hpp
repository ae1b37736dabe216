// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nids::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,  // bad flags, config file or checkpoint
  kDataError = 2,
  kTrainingError = 3,
};

// Runs one `nids` command line. `args` excludes the program name. Results go
// to `out`; progress and one-line diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nids::cli
