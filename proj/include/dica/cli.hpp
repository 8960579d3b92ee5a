#pragma once

#include <iosfwd>

namespace dica::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kFormat = 3,
  kContradiction = 4,
  kCapacity = 5,
  kDimension = 6,
  kMissingLabel = 7,
};

// Entry point behind the `dica` binary: train, generate, encode, complete,
// correct, classify, prototypes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dica::cli
