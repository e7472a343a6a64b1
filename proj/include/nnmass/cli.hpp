#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nnmass::cli {

// Dispatch one command. Returns the process exit status: 0 success, 1 domain
// error (error JSON on `err`), 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nnmass::cli
