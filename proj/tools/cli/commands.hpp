#pragma once

#include <ostream>

namespace rcwave::cli {

/// Entry point of the rcwave tool. Exit status: 0 success, 2 usage or
/// validation error, 3 I/O failure, 4 numerical failure, 1 anything else.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rcwave::cli
