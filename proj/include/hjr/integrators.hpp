#pragma once

// Canonical maps defined implicitly by generating functions, their exact
// Jacobians, first-order generating-function schemes and the associated
// momentum and equilibrium checks.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "hjr/generating.hpp"
#include "hjr/linalg.hpp"
#include "hjr/phase_space.hpp"
#include "hjr/symmetry.hpp"

namespace hjr {

struct NewtonSettings {
    double tol = 1e-12;
    int max_iter = 50;
    // Mixed Hessians with σ_min ≤ singular_tol·σ_max are rejected.
    double singular_tol = 1e-13;
};

// Solves ∂S/∂q(t, q, b) = p for b. The guess defaults to S's own, then p.
Vec solve_parameters(const GeneratingFunction &s, double t, std::span<const double> q, std::span<const double> p,
                     std::optional<Vec> guess = {}, const NewtonSettings &settings = {});

// (q, p) ↦ (∂S/∂β, β).
PhasePoint apply_type2(const GeneratingFunction &s, const PhasePoint &z, double t, std::optional<Vec> guess = {},
                       const NewtonSettings &settings = {});
// (q, p) ↦ (α, −∂S/∂α).
PhasePoint apply_type1(const GeneratingFunction &s, const PhasePoint &z, double t, std::optional<Vec> guess = {},
                       const NewtonSettings &settings = {});

// Jacobian of the map at z from implicit differentiation; `b` is the solved
// parameter. Layout (q, p) → (Q, P).
Mat map_jacobian(const GeneratingFunction &s, std::span<const double> q, std::span<const double> b, double t);

// max |(MᵀΩM − Ω)_ij| with Ω = [[0, I], [−I, 0]].
double symplecticity_defect(const Mat &m);

double symplecticity_check(const GeneratingFunction &s, const PhasePoint &z, double t, const NewtonSettings &settings = {});

// Warm-started stepping with a fixed generating function.
class ImplicitMap {
public:
    explicit ImplicitMap(std::shared_ptr<const GeneratingFunction> s, NewtonSettings settings = {});

    PhasePoint apply(const PhasePoint &z, double t = 0.0);
    const std::optional<Vec> &last_parameters() const noexcept { return warm_; }
    void reset() { warm_.reset(); }

private:
    std::shared_ptr<const GeneratingFunction> s_;
    NewtonSettings settings_;
    std::optional<Vec> warm_;
};

// S = Σ qⁱβᵢ + τ·(h(q, β) + extra) with β named like the momenta.
std::shared_ptr<SymbolicGeneratingFunction> first_order_scheme(const HamiltonianSystem &sys, double tau,
                                                               const Expr &extra = Expr(0.0));

// Randomized check that S(q + G·g, β) − S(q, β) does not depend on q.
InvarianceResult check_diagonal_invariance(const SymbolicGeneratingFunction &s, const TranslationAction &a,
                                           const SamplingOptions &opts);

struct MomentumReport {
    InvarianceResult precondition;
    double drift = 0.0;
    double energy_drift = 0.0;
    std::size_t steps = 0;
    PhasePoint final_point;
};

// Iterates the type II map and records max_k |J(z_k) − J(z_0)|. With
// `enforce` the invariance precondition throws PreconditionError; without it
// the run proceeds and the precondition is only reported.
MomentumReport momentum_preservation_check(const SymbolicGeneratingFunction &s, const TranslationAction &a,
                                           const HamiltonianSystem &sys, const PhasePoint &z0, std::size_t steps,
                                           const SamplingOptions &opts = {}, bool enforce = true);

struct EquilibriumReport {
    std::vector<double> t;
    PointSet alpha;
    PointSet beta;
    double max_var = 0.0;
};

// Along flow_reference from z0, solves ∂S/∂q = p for α and sets β = −∂S/∂α.
EquilibriumReport transform_to_equilibrium(const GeneratingFunction &s, const HamiltonianSystem &sys, const PhasePoint &z0,
                                           double t_end, double dt, const NewtonSettings &settings = {});

// max over random samples of |J(z) − J(Ψ_t(z))| with Ψ_t from flow_reference.
double flow_lagrangian_momentum_check(const HamiltonianSystem &sys, const TranslationAction &a, std::size_t samples,
                                      double t, double dt, std::uint64_t seed = 42, double box = 2.0);

struct GeneratorAudit {
    std::size_t trials = 0;
    std::size_t accepted = 0;
    double max_defect = 0.0;
    double max_composed_defect = 0.0;
    double max_condition = 0.0;
};

// Random near-identity polynomial generators S = qᵀβ + ε·P(q, β) of dimension
// 1 or 2. Points whose mixed Hessian has condition number ≥ max_condition or
// where Newton fails are skipped.
GeneratorAudit random_generator_audit(std::size_t trials, std::uint64_t seed, double max_condition = 1e6);

} // namespace hjr
