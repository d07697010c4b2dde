#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crcgram::cli {

/// Runs one `crcgram` invocation. `args` excludes the program name. Returns the
/// process exit status: 0 success, 2 configuration, 3 input data, 4 numeric.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crcgram::cli
