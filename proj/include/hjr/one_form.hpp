#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hjr/expr.hpp"

namespace hjr {

using PointSet = std::vector<std::vector<double>>;

// Tensor-product grid over [lo, hi] per axis, `counts[i]` points on axis i
// (a single point sits at the midpoint).
PointSet tensor_grid(std::span<const std::pair<double, double>> ranges, std::span<const std::size_t> counts);

// A 1-form on a coordinate chart: components are expressions over the base
// coordinate names. Candidate Hamilton-Jacobi solutions are graphs Im(γ).
class OneForm {
public:
    OneForm(std::vector<std::string> base, std::vector<Expr> components, std::optional<Expr> potential = {});

    // γ = dS.
    static OneForm exact(std::vector<std::string> base, const Expr &potential);
    static OneForm zero(std::vector<std::string> base);

    std::size_t dim() const noexcept { return base_.size(); }
    const std::vector<std::string> &base() const noexcept { return base_; }
    const std::vector<Expr> &components() const noexcept { return components_; }
    const std::optional<Expr> &potential() const noexcept { return potential_; }

    std::vector<double> operator()(std::span<const double> x) const;
    double potential_at(std::span<const double> x) const;

    // ∂γ_j/∂xⁱ at x.
    double partial(std::size_t i, std::size_t j, std::span<const double> x) const;
    const Expr &partial_expr(std::size_t i, std::size_t j) const { return partials_.at(i * dim() + j).expr(); }

private:
    std::vector<std::string> base_;
    std::vector<Expr> components_;
    std::optional<Expr> potential_;
    std::vector<CompiledExpr> compiled_;
    std::vector<CompiledExpr> partials_;
    CompiledExpr compiled_potential_;
};

// max over the grid and i < j of |∂γ_j/∂xⁱ − ∂γ_i/∂xʲ|.
double closedness_residual(const OneForm &gamma, const PointSet &grid);

} // namespace hjr
