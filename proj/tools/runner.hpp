#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hvz::cli {

inline constexpr int manifest_schema_version = 1;

// Exit statuses of the command line tool.
enum Exit : int {
    exit_ok = 0,
    exit_failed_checks = 1,
    exit_invalid_input = 2,
    exit_runtime_error = 3,
};

struct Invocation {
    std::string command;  // run, checks or export-grid
    std::string input;    // config path, suite name or field snapshot
    std::filesystem::path out = "hvz-out";
    int threads = 1;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

// Executes one command, writing artifacts, manifest.json and, on failure,
// error.json into `out`. Progress goes to `log`, error records to `err`.
int run_command(const Invocation& invocation, std::ostream& log, std::ostream& err);

// Single-line machine-readable error record.
std::string error_record(const std::string& code, const std::string& message);

}  // namespace hvz::cli
