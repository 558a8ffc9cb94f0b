// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

namespace topocl::cli {

constexpr int kExitOk         = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric    = 3;
//! Anything that is neither a validation nor a numeric failure (allocation failure, say).
constexpr int kExitInternal   = 1;

//! Exit code for an exception escaping a subcommand.
int exitCodeFor(const std::exception& error);

//! Parses `args` (without the program name) and runs one subcommand. Summary lines go to `out`,
//! diagnostics to `err`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

//! Entry point used by main(): wraps run() with std::cout / std::cerr.
int runMain(int argc, const char* const* argv);

}  // namespace topocl::cli
