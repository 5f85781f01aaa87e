#pragma once

// Command runner behind the command-line tool: loads a scenario, runs one
// command, writes the report and artifacts under the output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hjr {

inline constexpr const char *commands[] = {"reduce", "solve-hj", "reconstruct", "simulate",
                                           "verify", "integrate", "equilibrium"};

enum ExitCode : int {
    exit_ok = 0,
    exit_residual = 1,
    exit_schema = 2,
    exit_numeric = 3,
};

struct RunFlags {
    double tol = 1e-8;
    std::optional<std::size_t> grid;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = ".";
    std::optional<double> dt;
    std::optional<double> t_end;
};

struct RunResult {
    int exit_code = exit_ok;
    // Report as JSON text (also written to <out>/<name>.<command>.json when
    // the scenario was valid).
    std::string report;
    // Human readable message for non-zero exits.
    std::string message;
    std::vector<std::filesystem::path> files;
};

// Never throws; every failure is mapped to an exit code.
RunResult run_command(const std::string &command, const std::filesystem::path &scenario, const RunFlags &flags);

} // namespace hjr
