#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stdgn::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;

/// Parses and dispatches one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace stdgn::cli
