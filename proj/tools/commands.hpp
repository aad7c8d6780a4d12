#pragma once

#include <iosfwd>

namespace ndsense::cli {

/// Exit codes: 0 success, 1 configuration or input error, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ndsense::cli
