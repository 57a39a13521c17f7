// Subprocess execution with captured output.
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "commitshield/model.hpp"

namespace commitshield {

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;

    bool ok() const { return exit_code == 0; }
};

class ProcessError : public Error {
public:
    using Error::Error;
};

/// Runs argv[0] (looked up in PATH) with the given working directory.
/// Output streams are captured as raw bytes. extra_env entries override the
/// inherited environment.
ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd = {},
    const std::vector<std::pair<std::string, std::string>>& extra_env = {});

} // namespace commitshield
