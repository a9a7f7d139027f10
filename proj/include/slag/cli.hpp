#pragma once

#include <iosfwd>

namespace slag {

// Data-parallel width cap from SLAG_THREADS (default and current minimum: 1).
int threadWidth();

// Command-line front door.  Returns the process exit status:
// 0 success, 1 validation/usage error, 2 solver failure.
int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slag
