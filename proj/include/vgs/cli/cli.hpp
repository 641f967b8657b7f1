#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vgs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. `args` excludes the program name. Returns 0 on
// success, 1 when some samples or attributes failed, 2 on usage errors
// (the synopsis goes to `err`).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace vgs::cli
