#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vo {

/// Verb grammar printed on usage errors.
std::string cli_usage();

/// Runs one command line (without the program name). Returns 0 on success,
/// 1 on a domain error and 2 on a usage error. `default_data_dir` holds the
/// shipped fixture used when no --state archive exists yet.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                 const std::string& default_data_dir);

}  // namespace vo
