#pragma once

#include <iosfwd>

namespace pcsid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// Parses the command line and runs one verb. Progress goes to out, errors
// to err. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pcsid::cli
