#pragma once

#include <ostream>

namespace asif {

/// Entry point of the `asif` command-line tool. Data goes to `out`,
/// diagnostics to `err`. Returns 0 on success, 2 on any engine error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace asif
