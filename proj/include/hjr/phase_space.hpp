#pragma once

// Canonical phase space T*Rⁿ: Hamiltonian systems, their vector fields and a
// classical RK4 flow used as the reference dynamics.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjr/expr.hpp"

namespace hjr {

// Denominators smaller than this are treated as singular during flows.
inline constexpr double singularity_guard = 1e-12;

struct PhasePoint {
    std::vector<double> q;
    std::vector<double> p;
    std::optional<double> t;
};

struct TrajectorySample {
    double t = 0.0;
    PhasePoint z;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<TrajectorySample> samples;
};

class HamiltonianSystem {
public:
    // `time_var` empty means autonomous; otherwise h may depend on it.
    HamiltonianSystem(std::vector<std::string> coords, std::vector<std::string> momenta, Expr h,
                      std::string time_var = {});

    std::size_t dim() const noexcept { return coords_.size(); }
    const std::vector<std::string> &coords() const noexcept { return coords_; }
    const std::vector<std::string> &momenta() const noexcept { return momenta_; }
    const Expr &hamiltonian() const noexcept { return h_; }
    bool time_dependent() const noexcept { return !time_var_.empty(); }
    const std::string &time_var() const noexcept { return time_var_; }

    // Variable order used by compiled expressions: coords, momenta, [time].
    const std::vector<std::string> &slots() const noexcept { return slots_; }

    const Expr &dh_dq(std::size_t i) const { return dh_dq_.at(i).expr(); }
    const Expr &dh_dp(std::size_t i) const { return dh_dp_.at(i).expr(); }

    double energy(const PhasePoint &z) const;
    // ∂h/∂p at z.
    std::vector<double> velocity(const PhasePoint &z) const;
    // (q̇, ṗ) = (∂h/∂p, −∂h/∂q), guarded against singular denominators.
    std::vector<double> vector_field(const PhasePoint &z) const;

    void check_dimensions(const PhasePoint &z) const;

private:
    std::vector<double> pack(const PhasePoint &z) const;

    std::vector<std::string> coords_;
    std::vector<std::string> momenta_;
    std::string time_var_;
    std::vector<std::string> slots_;
    Expr h_;
    CompiledExpr energy_;
    std::vector<CompiledExpr> dh_dq_;
    std::vector<CompiledExpr> dh_dp_;
};

std::vector<double> hamiltonian_vector_field(const HamiltonianSystem &sys, const PhasePoint &z);

// ω(u, v) = Σ u_qⁱ v_pᵢ − u_pᵢ v_qⁱ for tangent vectors laid out as (q, p).
double symplectic_pairing(std::span<const double> u, std::span<const double> v);

// Classical fourth-order Runge-Kutta on X_h, samples at every step. The last
// step is shortened so the final sample lands on t_end.
Trajectory flow_reference(const HamiltonianSystem &sys, const PhasePoint &z0, double t_end, double dt);

using FieldFn = std::function<std::vector<double>(double t, std::span<const double> x)>;

struct OdeSolution {
    std::vector<double> t;
    std::vector<std::vector<double>> x;
};

// RK4 for a generic first-order system x' = f(t, x).
OdeSolution rk4(const FieldFn &f, std::vector<double> x0, double t0, double t_end, double dt);

} // namespace hjr
