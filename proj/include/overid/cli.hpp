#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "overid/scm.hpp"

namespace overid::cli {

/// Named parameter set (default, fig3a, fig3b, f2-case1, f2-case2, f2-case3)
/// or an inline list such as "a=1,b=2,var_um=0.5" applied over the defaults.
ScmParams parse_params(std::string_view spec);

/// Runs one command line (without the program name). Returns the process
/// exit status: 0 success, 1 configuration error, 2 schema mismatch,
/// 3 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace overid::cli
