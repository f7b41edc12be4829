#pragma once

#include <ostream>

namespace riskwarden {

// Exit codes: 0 success, 1 domain error, 2 I/O or parse error, 3 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace riskwarden
