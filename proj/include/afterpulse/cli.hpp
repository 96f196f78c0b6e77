#pragma once

#include <iosfwd>

namespace afterpulse {

// Exit codes: 0 success, 1 usage/config/IO error, 2 numerical or degenerate data.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace afterpulse
