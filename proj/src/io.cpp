#include "hjr/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <unistd.h>

#include "hjr/error.hpp"

namespace hjr {

std::string format_g17(double v)
{
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

void write_file_atomic(const std::filesystem::path &path, const std::string &text)
{
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorKind::io, fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
    }
    auto tmp = path;
    tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, fmt::format("cannot open {} for writing", tmp.string()));
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) throw Error(ErrorKind::io, fmt::format("write to {} failed", tmp.string()));
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorKind::io, fmt::format("cannot rename onto {}: {}", path.string(), ec.message()));
    }
}

std::string read_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trajectory_csv(const Trajectory &traj, const std::vector<std::string> &coords,
                           const std::vector<std::string> &momenta)
{
    if (coords.size() != momenta.size()) throw Error(ErrorKind::dimension, "coordinate and momentum name counts differ");
    std::string out = "t";
    for (const auto &c : coords) out += "," + c;
    for (const auto &m : momenta) out += "," + m;
    out += '\n';
    for (const auto &s : traj.samples) {
        if (s.z.q.size() != coords.size() || s.z.p.size() != momenta.size()) {
            throw Error(ErrorKind::dimension, "trajectory sample has wrong dimension");
        }
        out += format_g17(s.t);
        for (double v : s.z.q) out += "," + format_g17(v);
        for (double v : s.z.p) out += "," + format_g17(v);
        out += '\n';
    }
    return out;
}

void write_trajectory_csv(const Trajectory &traj, const std::vector<std::string> &coords,
                          const std::vector<std::string> &momenta, const std::filesystem::path &path)
{
    write_file_atomic(path, trajectory_csv(traj, coords, momenta));
}

namespace {

std::vector<std::string> split_fields(const std::string &line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string &s, std::size_t line)
{
    errno = 0;
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    // Underflow to a subnormal is still the correctly rounded value.
    if (s.empty() || end != s.c_str() + s.size() || (errno == ERANGE && std::isinf(v))) {
        throw Error(ErrorKind::io, fmt::format("line {}: '{}' is not a number", line, s));
    }
    return v;
}

} // namespace

TrajectoryTable parse_trajectory_csv(const std::string &text)
{
    TrajectoryTable out;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::io, "empty trajectory file");
    const auto header = split_fields(line);
    if (header.empty() || header[0] != "t" || header.size() % 2 == 0) {
        throw Error(ErrorKind::io, "trajectory header must be t followed by coordinates and momenta");
    }
    const std::size_t n = (header.size() - 1) / 2;
    out.coords.assign(header.begin() + 1, header.begin() + 1 + static_cast<std::ptrdiff_t>(n));
    out.momenta.assign(header.begin() + 1 + static_cast<std::ptrdiff_t>(n), header.end());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != header.size()) throw Error(ErrorKind::io, fmt::format("line {}: expected {} fields", lineno, header.size()));
        TrajectorySample s;
        s.t = parse_double(f[0], lineno);
        for (std::size_t i = 0; i < n; ++i) {
            s.z.q.push_back(parse_double(f[1 + i], lineno));
            s.z.p.push_back(parse_double(f[1 + n + i], lineno));
        }
        out.trajectory.samples.push_back(std::move(s));
    }
    const auto &smp = out.trajectory.samples;
    if (smp.size() >= 2) out.trajectory.dt = smp[1].t - smp[0].t;
    return out;
}

TrajectoryTable read_trajectory_csv(const std::filesystem::path &path) { return parse_trajectory_csv(read_file(path)); }

} // namespace hjr
