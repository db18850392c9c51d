// Command-line front end. Exit codes: 0 success or help, 1 engine error,
// 2 usage error. Errors are printed to `err` as one JSON line.

#pragma once

#include <iosfwd>

namespace tumorsynth {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tumorsynth
