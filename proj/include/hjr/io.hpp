#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hjr/phase_space.hpp"

namespace hjr {

// printf "%.17g": enough digits to round-trip any double.
std::string format_g17(double v);

// Writes to a temporary file in the same directory, then renames it over
// `path`. Parent directories are created.
void write_file_atomic(const std::filesystem::path &path, const std::string &text);

std::string read_file(const std::filesystem::path &path);

// Header t,<coords>,<momenta>; one LF-terminated row per sample.
std::string trajectory_csv(const Trajectory &traj, const std::vector<std::string> &coords,
                           const std::vector<std::string> &momenta);

void write_trajectory_csv(const Trajectory &traj, const std::vector<std::string> &coords,
                          const std::vector<std::string> &momenta, const std::filesystem::path &path);

struct TrajectoryTable {
    std::vector<std::string> coords;
    std::vector<std::string> momenta;
    Trajectory trajectory;
};

// Inverse of trajectory_csv. The header must be t followed by an even number
// of columns; the first half are coordinates.
TrajectoryTable parse_trajectory_csv(const std::string &text);
TrajectoryTable read_trajectory_csv(const std::filesystem::path &path);

} // namespace hjr
