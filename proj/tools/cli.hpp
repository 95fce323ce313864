#pragma once

#include <iostream>

namespace symvs {

/// Exit codes: 0 success, 1 input or usage error, 2 the solver diverged.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace symvs
