#pragma once

// Quotient charts for translation actions, reduced Hamiltonians, magnetic
// terms and the projection of invariant lagrangian graphs.

#include <optional>
#include <string>
#include <vector>

#include "hjr/expr.hpp"
#include "hjr/linalg.hpp"
#include "hjr/one_form.hpp"
#include "hjr/phase_space.hpp"
#include "hjr/symmetry.hpp"

namespace hjr {

// Linear change of coordinates (y, x) = T·q with T = [Y; X]. Rows of Y span
// the annihilator of the generators, X = (GᵀG)⁻¹Gᵀ. Covectors split as
// (p_y, p_x) = T⁻ᵀ·p, and p_x is the momentum.
class QuotientChart {
public:
    QuotientChart(Mat generators, Mat y_block, Mat x_block);

    std::size_t ambient_dim() const noexcept { return static_cast<std::size_t>(t_.rows()); }
    std::size_t group_dim() const noexcept { return static_cast<std::size_t>(x_.rows()); }
    std::size_t reduced_dim() const noexcept { return static_cast<std::size_t>(y_.rows()); }

    const Mat &generators() const noexcept { return g_; }
    const Mat &y_block() const noexcept { return y_; }
    const Mat &x_block() const noexcept { return x_; }
    const Mat &matrix() const noexcept { return t_; }
    const Mat &inverse() const noexcept { return t_inv_; }

    std::vector<double> reduce_point(std::span<const double> q) const;
    std::vector<double> group_part(std::span<const double> q) const;
    // q = T⁻¹(y, x); x defaults to the zero section.
    std::vector<double> lift_point(std::span<const double> y, std::span<const double> x = {}) const;

    // (p_y, p_x) from p.
    std::pair<std::vector<double>, std::vector<double>> split_covector(std::span<const double> p) const;
    // p = Yᵀp_y + Xᵀp_x.
    std::vector<double> join_covector(std::span<const double> p_y, std::span<const double> p_x) const;

    // Expressions for the q coordinates in terms of y names (x = 0), and for y
    // in terms of q names.
    std::vector<Expr> coords_from_reduced(const std::vector<std::string> &y_names) const;
    std::vector<Expr> reduced_from_coords(const std::vector<std::string> &q_names) const;

private:
    Mat g_;
    Mat y_;
    Mat x_;
    Mat t_;
    Mat t_inv_;
};

QuotientChart build_chart(const TranslationAction &a);

// Σ cᵢ·namesᵢ with zero coefficients dropped.
Expr linear_combination(std::span<const double> coeffs, const std::vector<std::string> &names);

// Antisymmetric matrix of expressions over the reduced coordinates. Only the
// strict upper triangle is stored; the lower one is its negation.
class TwoForm {
public:
    explicit TwoForm(std::vector<std::string> base);
    TwoForm(std::vector<std::string> base, std::vector<Expr> upper);

    std::size_t dim() const noexcept { return base_.size(); }
    const std::vector<std::string> &base() const noexcept { return base_; }

    Expr component(std::size_t i, std::size_t j) const;
    void set(std::size_t i, std::size_t j, Expr value);
    Mat operator()(std::span<const double> y) const;
    // Every component is the literal zero.
    bool is_zero() const;

private:
    std::size_t index(std::size_t i, std::size_t j) const;

    std::vector<std::string> base_;
    std::vector<Expr> upper_;
};

struct ReducedNames {
    std::vector<std::string> coords;
    std::vector<std::string> momenta;
};

// y1..ym and py1..pym.
ReducedNames default_reduced_names(std::size_t m);

struct ReducedSystem {
    QuotientChart chart;
    MomentumValue mu;
    ReducedNames names;
    Expr hamiltonian;
    TwoForm magnetic;
    // Largest relative difference of h̃ between two random fibre points.
    double x_dependence = 0.0;
};

// The flat connection form Σ μ_a dx^a pulled back to q: components Xᵀμ.
OneForm flat_connection_form(const QuotientChart &chart, const std::vector<std::string> &q_names,
                             const MomentumValue &mu);

// Substitutes q = T⁻¹(y, 0) and p = Yᵀp_y + Xᵀμ into h and simplifies.
// Throws PreconditionError if h is not invariant or the result depends on x.
ReducedSystem reduce(const HamiltonianSystem &sys, const TranslationAction &a, const MomentumValue &mu,
                     const ReducedNames &names, const SamplingOptions &opts = {},
                     const std::optional<OneForm> &connection = {});

// `x_dependence`, when given, receives the largest sampled fibre deviation.
Expr reduced_hamiltonian(const HamiltonianSystem &sys, const QuotientChart &chart, const MomentumValue &mu,
                         const ReducedNames &names, const SamplingOptions &opts = {}, double *x_dependence = nullptr);

// Preconditions on a connection form α_μ: G-invariance and J∘α_μ ≡ μ, sampled
// on q = T⁻¹(y, x) for y in the reduced grid and random x.
void check_connection_form(const QuotientChart &chart, const OneForm &alpha, const MomentumValue &mu,
                           const PointSet &reduced_grid, const SamplingOptions &opts);

// β_μ with π*β_μ = dα_μ.
TwoForm magnetic_term(const QuotientChart &chart, const OneForm &alpha, const std::vector<std::string> &y_names);

// α_q ↦ α_q − α_μ(q).
PhasePoint momentum_shift(const PhasePoint &z, const OneForm &alpha);

struct ProjectionReport {
    double closedness = 0.0;
    double invariance = 0.0;
    double momentum = 0.0;
    // max |dγ̃ + β_μ| over the reduced grid.
    double lagrangian = 0.0;
};

struct Projection {
    OneForm reduced;
    ProjectionReport report;
};

// y-part of γ − α_μ in chart coordinates, restricted to x = 0. Preconditions
// (closed, invariant, J∘γ ≡ μ) are sampled over the reduced grid with random
// fibre points and raise PreconditionError with the worst point.
Projection project_lagrangian(const OneForm &gamma, const QuotientChart &chart, const MomentumValue &mu,
                              const std::vector<std::string> &y_names, const PointSet &reduced_grid,
                              const SamplingOptions &opts = {}, const std::optional<OneForm> &connection = {},
                              const std::optional<TwoForm> &magnetic = {});

// max over the grid and i < j of |∂ᵢγ_j − ∂ⱼγᵢ + β_ij|; β absent means zero.
double magnetic_lagrangian_residual(const OneForm &gamma, const std::optional<TwoForm> &beta, const PointSet &grid);

} // namespace hjr
