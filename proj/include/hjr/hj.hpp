#pragma once

// Hamilton-Jacobi residuals, the 1-D reduced quadrature solver, time
// extension, cyclic ansatz, complete-solution checks and the additive split.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hjr/expr.hpp"
#include "hjr/generating.hpp"
#include "hjr/one_form.hpp"
#include "hjr/phase_space.hpp"
#include "hjr/reduction.hpp"

namespace hjr {

struct HjResidual {
    double energy = 0.0;
    double max_dev = 0.0;
    std::vector<double> worst_point;
};

// E_est = mean of h∘γ over the grid, max_dev = max |h∘γ − E_est|.
HjResidual hj_residual(const HamiltonianSystem &sys, const OneForm &gamma, const PointSet &grid);

// Roots of h(y, p) = E along one branch. The root is bracketed by walking
// outward from p = 0 in the direction of `branch`; on the + branch h must be
// increasing in p at the root, on the − branch decreasing.
class BranchRoot {
public:
    BranchRoot(const Expr &h, std::string y_name, std::string p_name, int branch);

    int branch() const noexcept { return branch_; }
    const Expr &hamiltonian() const noexcept { return h_; }
    const std::string &y_name() const noexcept { return y_; }
    const std::string &p_name() const noexcept { return p_; }

    double h(double y, double p) const;
    double h_y(double y, double p) const;
    double h_p(double y, double p) const;
    double h_pp(double y, double p) const;

    // |h(y, p) − E| ≤ tol at return. Throws Error(numeric) at turning points
    // and when the branch is not monotone.
    double solve(double y, double energy, std::optional<double> guess = {}, double tol = 1e-12) const;

private:
    Expr h_;
    std::string y_;
    std::string p_;
    int branch_;
    CompiledExpr f_;
    CompiledExpr fy_;
    CompiledExpr fp_;
    CompiledExpr fpp_;
};

struct Reduced1dOptions {
    double energy = 0.0;
    double y_lo = 0.0;
    double y_hi = 1.0;
    int branch = 1;
    std::size_t nodes = 2001;
    double turning_margin = 1e-6;
    double root_tol = 1e-12;
};

// W̄ tabulated on a uniform grid by Simpson's rule from y_lo, W̄′ = p(y).
// Off the nodes W̄′ is re-solved from an interpolated guess and W̄ is cubic
// Hermite in (W̄, W̄′).
class Reduced1dSolution {
public:
    struct State;

    explicit Reduced1dSolution(std::shared_ptr<const State> state) : state_(std::move(state)) {}

    const std::vector<double> &nodes() const;
    const std::vector<double> &values() const;
    const std::vector<double> &slopes() const;
    double energy() const;
    const BranchRoot &root() const;

    double momentum(double y) const;
    double antiderivative(double y) const;
    // max over nodes of |h̃(y, W̄′(y)) − E|.
    double node_residual() const;

    // W̄′ and W̄ as call nodes applied to `arg`; both differentiate exactly.
    Expr momentum_expr(const Expr &arg) const;
    Expr antiderivative_expr(const Expr &arg) const;
    // W̄′ dy with potential W̄ on the single coordinate y.
    OneForm one_form() const;

    // Columns y, W, dW with 17 significant digits.
    void write_csv(const std::filesystem::path &path) const;

private:
    std::shared_ptr<const State> state_;
};

Reduced1dSolution solve_reduced_1d(const Expr &h, const std::string &y_name, const std::string &p_name,
                                   const Reduced1dOptions &opts);

// S = W − E·t, so that ∂S/∂t + h(q, ∂S/∂q) = 0 when h(q, dW) = E.
Expr time_extension(const Expr &w, double energy, const std::string &time_var);

// max over grid points and times of |∂S/∂t + h(q, ∂S/∂q)|; `sys` must be
// autonomous and S an expression over its coordinates and `time_var`.
double time_dependent_residual(const HamiltonianSystem &sys, const Expr &s, const std::string &time_var,
                               const PointSet &grid, std::span<const double> times);

struct CyclicAnsatz {
    std::vector<std::size_t> cyclic;
    std::vector<double> values;
    // Non-cyclic coordinate indices of the original system.
    std::vector<std::size_t> rest;
    // h with the cyclic momenta fixed to `values`, over the rest coordinates
    // and momenta.
    Expr reduced;
    // W = Σ qˡβₗ + V(rest), printed.
    std::string template_text;
};

// Throws PreconditionError if a listed coordinate is not cyclic.
CyclicAnsatz cyclic_ansatz(const HamiltonianSystem &sys, const std::vector<std::string> &cyclic,
                           const std::vector<double> &values, const SamplingOptions &opts = {});

struct CyclicSolution {
    CyclicAnsatz ansatz;
    Reduced1dSolution v;
    double energy = 0.0;
    // W = Σ qˡβₗ + V over the system coordinates.
    Expr w;
};

// One remaining coordinate only.
CyclicSolution solve_cyclic(const HamiltonianSystem &sys, const CyclicAnsatz &ansatz, const Reduced1dOptions &opts);

// ∂²W/∂q∂β with β = (E, cyclic values); the remaining row comes from the
// implicit derivatives of V′.
Mat cyclic_mixed_hessian(const HamiltonianSystem &sys, const CyclicSolution &s, std::span<const double> q);

struct HeavyTopParams {
    double inertia = 1.0;
    double inertia3 = 1.0;
    double mgl = 1.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double energy = 1.0;
    double theta_lo = 0.5;
    double theta_hi = 2.5;
    std::size_t nodes = 2001;
};

struct HeavyTopResult {
    CyclicSolution solution;
    double min_radicand = 0.0;
    double equation_residual = 0.0;
    double min_abs_det = 0.0;
};

HamiltonianSystem heavy_top_system(const HeavyTopParams &p);
// 2I(F − mgl cosθ − β₃²/2J) − (β₂ − β₃cosθ)²/sin²θ.
double heavy_top_radicand(const HeavyTopParams &p, double theta);
HeavyTopResult solve_heavy_top(const HeavyTopParams &p, std::size_t checks = 401);

struct CompletenessReport {
    double hj_max_dev = 0.0;
    double min_abs_det = 0.0;
    std::vector<double> worst_point;
};

// Points are (t, q..., b...).
CompletenessReport check_complete(const GeneratingFunction &s, const HamiltonianSystem &sys, const PointSet &points);

// Type I complete solution S(t, q, E) = −E·t + ∫_{q0}^{q} p(s, E) ds for a
// one degree of freedom system, p on a fixed branch.
class QuadratureCompleteSolution final : public GeneratingFunction {
public:
    QuadratureCompleteSolution(const HamiltonianSystem &sys, double q0, int branch);

    GeneratingKind kind() const override { return GeneratingKind::type1; }
    std::size_t dim() const override { return 1; }

    double value(double t, std::span<const double> q, std::span<const double> b) const override;
    Vec grad_q(double t, std::span<const double> q, std::span<const double> b) const override;
    Vec grad_b(double t, std::span<const double> q, std::span<const double> b) const override;
    double time_derivative(double t, std::span<const double> q, std::span<const double> b) const override;
    Mat hess_qq(double t, std::span<const double> q, std::span<const double> b) const override;
    Mat hess_qb(double t, std::span<const double> q, std::span<const double> b) const override;
    Mat hess_bb(double t, std::span<const double> q, std::span<const double> b) const override;
    // E = h(q, p).
    std::optional<Vec> initial_guess(double t, std::span<const double> q, std::span<const double> p) const override;

private:
    double integrate(double q, double energy, int which) const;

    HamiltonianSystem sys_;
    BranchRoot root_;
    double q0_;
};

struct AdditiveSplit {
    Expr s_m;
    Expr s_g;
    double c = 0.0;
    double residual = 0.0;
};

// S_G = μᵀX·q, S_M(y) = S(T⁻¹(y, 0)) − c with c = S(0). Checks J∘dS ≡ μ on
// the grid first and throws PreconditionError with the worst point.
AdditiveSplit additive_split_check(const Expr &s, const std::vector<std::string> &q_names, const QuotientChart &chart,
                                   const MomentumValue &mu, const std::vector<std::string> &y_names,
                                   const PointSet &grid, double tol = 1e-9);

} // namespace hjr
