#pragma once

#include <iosfwd>

namespace snswf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point shared by the executable and the tests. stdout receives the
/// one-line summary, stderr every diagnostic.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace snswf::cli
