#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gmwae/error.hpp"

namespace gmwae {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Runs `gmwae <subcommand> ...`; `args` excludes the program name.
/// Subcommands: train, generate, eval, synth.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gmwae
