#pragma once

// Lifting reduced Hamilton-Jacobi solutions to T*Q and reconstructing full
// trajectories from reduced ones.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjr/one_form.hpp"
#include "hjr/phase_space.hpp"
#include "hjr/reduction.hpp"

namespace hjr {

// γ = Yᵀ·γ̃(Y·q) + α_μ(q), with α_μ = Xᵀμ when no connection form is given.
// The potential is lifted too when both pieces have one.
OneForm lift_solution(const OneForm &reduced, const QuotientChart &chart, const MomentumValue &mu,
                      const std::vector<std::string> &q_names, const std::optional<OneForm> &connection = {});

// X_h^γ(q) = ∂h/∂p at (q, γ(q)).
std::vector<double> projected_vector_field(const HamiltonianSystem &sys, const OneForm &gamma, std::span<const double> q);

struct Reconstruction {
    // Samples (t, q, γ(q)) at multiples of the step.
    Trajectory trajectory;
    // Reduced curve c(t) and group curve g(t) at the same times.
    PointSet reduced;
    PointSet group;
};

// c(t) by RK4 on ∂h̃/∂p_y(y, γ̃(y)) with half steps, d(t) = T⁻¹(c(t), 0),
// dg/dt = X·X_h^γ(d(t)) by Simpson's rule, q(t) = d(t) + G·g(t).
// The step is shrunk so that t_end is a whole number of steps.
Reconstruction reconstruct_trajectory(const HamiltonianSystem &sys, const ReducedSystem &red, const OneForm &reduced_gamma,
                                      const OneForm &gamma, std::span<const double> y0, double t_end, double dt,
                                      std::span<const double> x0 = {});

// RK4 of X_h^γ on Q; momenta are γ(q).
Trajectory projected_flow(const HamiltonianSystem &sys, const OneForm &gamma, std::span<const double> q0, double t_end,
                          double dt);

// sup over samples of ‖a − b‖∞ in (q, p); sample counts must agree.
double sup_distance(const Trajectory &a, const Trajectory &b);

// sup over t of ‖(c(t), γ(c(t))) − z(t)‖∞, with c from projected_flow and z
// from flow_reference started at γ(q0).
double gamma_relatedness(const HamiltonianSystem &sys, const OneForm &gamma, std::span<const double> q0, double t_end,
                         double dt);

} // namespace hjr
