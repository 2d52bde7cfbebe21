// The adx3 command line, callable in-process for tests.
#pragma once

#include <iosfwd>

namespace adx3::cli {

/// Exit codes: 0 ok, 1 runtime failure, 2 usage or input, 3 environment.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adx3::cli
