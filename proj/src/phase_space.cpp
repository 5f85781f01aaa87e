#include "hjr/phase_space.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "hjr/error.hpp"

namespace hjr {

HamiltonianSystem::HamiltonianSystem(std::vector<std::string> coords, std::vector<std::string> momenta, Expr h,
                                     std::string time_var)
    : coords_(std::move(coords)), momenta_(std::move(momenta)), time_var_(std::move(time_var)), h_(std::move(h))
{
    if (coords_.empty()) throw Error(ErrorKind::argument, "a Hamiltonian system needs at least one coordinate");
    if (coords_.size() != momenta_.size()) {
        throw Error(ErrorKind::dimension, fmt::format("{} coordinates but {} momenta", coords_.size(), momenta_.size()));
    }
    slots_ = coords_;
    slots_.insert(slots_.end(), momenta_.begin(), momenta_.end());
    if (!time_var_.empty()) slots_.push_back(time_var_);
    for (const auto &v : free_variables(h_)) {
        if (std::find(slots_.begin(), slots_.end(), v) == slots_.end()) {
            throw Error(ErrorKind::argument, fmt::format("Hamiltonian uses undeclared variable '{}'", v));
        }
    }
    energy_ = CompiledExpr(h_, slots_);
    for (std::size_t i = 0; i < dim(); ++i) {
        dh_dq_.emplace_back(differentiate(h_, coords_[i]), slots_);
        dh_dp_.emplace_back(differentiate(h_, momenta_[i]), slots_);
    }
}

void HamiltonianSystem::check_dimensions(const PhasePoint &z) const
{
    if (z.q.size() != dim() || z.p.size() != dim()) {
        throw Error(ErrorKind::dimension,
                    fmt::format("phase point has dimensions ({}, {}), system has n = {}", z.q.size(), z.p.size(), dim()));
    }
}

std::vector<double> HamiltonianSystem::pack(const PhasePoint &z) const
{
    check_dimensions(z);
    std::vector<double> v;
    v.reserve(slots_.size());
    v.insert(v.end(), z.q.begin(), z.q.end());
    v.insert(v.end(), z.p.begin(), z.p.end());
    if (time_dependent()) v.push_back(z.t.value_or(0.0));
    return v;
}

double HamiltonianSystem::energy(const PhasePoint &z) const { return energy_(pack(z)); }

std::vector<double> HamiltonianSystem::velocity(const PhasePoint &z) const
{
    const auto v = pack(z);
    std::vector<double> out(dim());
    for (std::size_t i = 0; i < dim(); ++i) out[i] = dh_dp_[i](v, singularity_guard);
    return out;
}

std::vector<double> HamiltonianSystem::vector_field(const PhasePoint &z) const
{
    const auto v = pack(z);
    const std::size_t n = dim();
    std::vector<double> out(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = dh_dp_[i](v, singularity_guard);
        out[n + i] = -dh_dq_[i](v, singularity_guard);
    }
    return out;
}

std::vector<double> hamiltonian_vector_field(const HamiltonianSystem &sys, const PhasePoint &z)
{
    return sys.vector_field(z);
}

double symplectic_pairing(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size() || u.size() % 2 != 0) {
        throw Error(ErrorKind::dimension, fmt::format("cannot pair tangent vectors of sizes {} and {}", u.size(), v.size()));
    }
    const std::size_t n = u.size() / 2;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += u[i] * v[n + i] - u[n + i] * v[i];
    return s;
}

OdeSolution rk4(const FieldFn &f, std::vector<double> x0, double t0, double t_end, double dt)
{
    if (!(dt > 0.0)) throw Error(ErrorKind::argument, "time step must be positive");
    if (t_end < t0) throw Error(ErrorKind::argument, "t_end precedes the start time");
    const double span = t_end - t0;
    const auto steps = static_cast<std::size_t>(std::max(0.0, std::ceil(span / dt - 1e-9)));
    OdeSolution sol;
    sol.t.reserve(steps + 1);
    sol.x.reserve(steps + 1);
    sol.t.push_back(t0);
    sol.x.push_back(x0);
    const std::size_t m = x0.size();
    std::vector<double> tmp(m);
    std::vector<double> x = std::move(x0);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = t0 + static_cast<double>(s) * dt;
        const double t_next = s + 1 == steps ? t_end : t0 + static_cast<double>(s + 1) * dt;
        const double h = t_next - t;
        const auto k1 = f(t, x);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        const auto k2 = f(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        const auto k3 = f(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + h * k3[i];
        const auto k4 = f(t + h, tmp);
        for (std::size_t i = 0; i < m; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        sol.t.push_back(t_next);
        sol.x.push_back(x);
    }
    return sol;
}

Trajectory flow_reference(const HamiltonianSystem &sys, const PhasePoint &z0, double t_end, double dt)
{
    sys.check_dimensions(z0);
    const std::size_t n = sys.dim();
    const double t0 = z0.t.value_or(0.0);
    std::vector<double> x0(z0.q);
    x0.insert(x0.end(), z0.p.begin(), z0.p.end());
    PhasePoint scratch;
    auto field = [&](double t, std::span<const double> x) {
        scratch.q.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
        scratch.p.assign(x.begin() + static_cast<std::ptrdiff_t>(n), x.end());
        scratch.t = t;
        return sys.vector_field(scratch);
    };
    const auto sol = rk4(field, std::move(x0), t0, t0 + t_end, dt);
    Trajectory traj;
    traj.dt = dt;
    traj.samples.reserve(sol.t.size());
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        PhasePoint z;
        z.q.assign(sol.x[i].begin(), sol.x[i].begin() + static_cast<std::ptrdiff_t>(n));
        z.p.assign(sol.x[i].begin() + static_cast<std::ptrdiff_t>(n), sol.x[i].end());
        if (sys.time_dependent() || z0.t) z.t = sol.t[i];
        traj.samples.push_back({sol.t[i], std::move(z)});
    }
    return traj;
}

} // namespace hjr
