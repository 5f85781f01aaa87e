#include "hjr/one_form.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "hjr/error.hpp"
#include "hjr/phase_space.hpp"

namespace hjr {

PointSet tensor_grid(std::span<const std::pair<double, double>> ranges, std::span<const std::size_t> counts)
{
    if (ranges.size() != counts.size()) throw Error(ErrorKind::dimension, "grid ranges and counts differ in length");
    PointSet out{{}};
    for (std::size_t axis = 0; axis < ranges.size(); ++axis) {
        const auto [lo, hi] = ranges[axis];
        const std::size_t m = counts[axis];
        if (m == 0) return {};
        PointSet next;
        next.reserve(out.size() * m);
        for (const auto &prefix : out) {
            for (std::size_t i = 0; i < m; ++i) {
                const double x = m == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
                auto pt = prefix;
                pt.push_back(x);
                next.push_back(std::move(pt));
            }
        }
        out = std::move(next);
    }
    return out;
}

OneForm::OneForm(std::vector<std::string> base, std::vector<Expr> components, std::optional<Expr> potential)
    : base_(std::move(base)), components_(std::move(components)), potential_(std::move(potential))
{
    if (base_.size() != components_.size()) {
        throw Error(ErrorKind::dimension,
                    fmt::format("1-form on {} coordinates given {} components", base_.size(), components_.size()));
    }
    compiled_.reserve(dim());
    for (const auto &c : components_) compiled_.emplace_back(c, base_);
    partials_.reserve(dim() * dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        for (std::size_t j = 0; j < dim(); ++j) partials_.emplace_back(differentiate(components_[j], base_[i]), base_);
    }
    if (potential_) compiled_potential_ = CompiledExpr(*potential_, base_);
}

OneForm OneForm::exact(std::vector<std::string> base, const Expr &potential)
{
    std::vector<Expr> comps;
    comps.reserve(base.size());
    for (const auto &name : base) comps.push_back(differentiate(potential, name));
    return OneForm(std::move(base), std::move(comps), potential);
}

OneForm OneForm::zero(std::vector<std::string> base)
{
    std::vector<Expr> comps(base.size(), Expr(0.0));
    return OneForm(std::move(base), std::move(comps), Expr(0.0));
}

std::vector<double> OneForm::operator()(std::span<const double> x) const
{
    if (x.size() != dim()) throw Error(ErrorKind::dimension, "1-form evaluated at a point of wrong dimension");
    std::vector<double> out(dim());
    for (std::size_t j = 0; j < dim(); ++j) out[j] = compiled_[j](x, singularity_guard);
    return out;
}

double OneForm::potential_at(std::span<const double> x) const
{
    if (!potential_) throw Error(ErrorKind::argument, "1-form has no potential");
    return compiled_potential_(x, singularity_guard);
}

double OneForm::partial(std::size_t i, std::size_t j, std::span<const double> x) const
{
    return partials_.at(i * dim() + j)(x, singularity_guard);
}

double closedness_residual(const OneForm &gamma, const PointSet &grid)
{
    double worst = 0.0;
    for (const auto &x : grid) {
        for (std::size_t i = 0; i < gamma.dim(); ++i) {
            for (std::size_t j = i + 1; j < gamma.dim(); ++j) {
                worst = std::max(worst, std::abs(gamma.partial(i, j, x) - gamma.partial(j, i, x)));
            }
        }
    }
    return worst;
}

} // namespace hjr
