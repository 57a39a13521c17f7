// Command-line front end.
#pragma once

#include <atomic>
#include <exception>
#include <iosfwd>
#include <string_view>

#include "commitshield/config.hpp"
#include "commitshield/model.hpp"

namespace commitshield {

class MalformedUrl : public Error {
public:
    using Error::Error;
};

enum ExitCode : int {
    exit_ok = 0,
    exit_analysis = 1,
    exit_usage = 2,
    exit_network = 3,
};

/// https://<forge>/<owner>/<repo>/commit/<sha> or owner/repo@sha.
CommitRef parse_commit_url(std::string_view url);

/// Maps an exception (unwrapping stage failures) to an exit code.
int exit_code_for(std::exception_ptr error);

/// Raised by the SIGINT handler while an evaluation runs.
std::atomic<bool>& interrupt_flag();

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
    const EnvLookup& env = process_env());

} // namespace commitshield
