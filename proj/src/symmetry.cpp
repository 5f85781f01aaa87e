#include "hjr/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "hjr/error.hpp"

namespace hjr {

TranslationAction::TranslationAction(Mat generators) : g_(std::move(generators))
{
    if (g_.rows() == 0) throw Error(ErrorKind::argument, "translation action on a zero-dimensional space");
    if (g_.cols() > g_.rows()) {
        throw Error(ErrorKind::argument, fmt::format("{} generators in dimension {}", g_.cols(), g_.rows()));
    }
    if (g_.cols() > 0 && matrix_rank(g_) != g_.cols()) {
        throw Error(ErrorKind::argument, "generator directions are linearly dependent; the action is not free");
    }
}

TranslationAction TranslationAction::from_generators(std::size_t n, const std::vector<std::vector<double>> &generators)
{
    Mat g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(generators.size()));
    for (std::size_t c = 0; c < generators.size(); ++c) {
        if (generators[c].size() != n) {
            throw Error(ErrorKind::dimension,
                        fmt::format("generator {} has {} entries, expected {}", c, generators[c].size(), n));
        }
        for (std::size_t r = 0; r < n; ++r) g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = generators[c][r];
    }
    return TranslationAction(std::move(g));
}

TranslationAction TranslationAction::time_translation(std::size_t n)
{
    Mat g = Mat::Zero(static_cast<Eigen::Index>(n + 1), 1);
    g(0, 0) = 1.0;
    return TranslationAction(std::move(g));
}

void TranslationAction::check_group_element(std::span<const double> g) const
{
    if (g.size() != group_dim()) {
        throw Error(ErrorKind::dimension, fmt::format("group element has {} entries, group dimension is {}", g.size(), group_dim()));
    }
}

std::vector<double> TranslationAction::translate(std::span<const double> g, std::span<const double> q) const
{
    check_group_element(g);
    if (q.size() != ambient_dim()) throw Error(ErrorKind::dimension, "configuration point has wrong dimension");
    std::vector<double> out(q.begin(), q.end());
    for (std::size_t c = 0; c < group_dim(); ++c) {
        for (std::size_t r = 0; r < ambient_dim(); ++r) {
            out[r] += g_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * g[c];
        }
    }
    return out;
}

PhasePoint TranslationAction::lift(std::span<const double> g, const PhasePoint &z) const
{
    if (z.p.size() != ambient_dim()) throw Error(ErrorKind::dimension, "covector has wrong dimension");
    PhasePoint out = z;
    out.q = translate(g, z.q);
    return out;
}

MomentumValue TranslationAction::momentum(std::span<const double> p) const
{
    if (p.size() != ambient_dim()) throw Error(ErrorKind::dimension, "covector has wrong dimension");
    MomentumValue mu(group_dim(), 0.0);
    for (std::size_t c = 0; c < group_dim(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < ambient_dim(); ++r) s += g_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * p[r];
        mu[c] = s;
    }
    return mu;
}

PhasePoint cotangent_lift(const TranslationAction &a, std::span<const double> g, const PhasePoint &z) { return a.lift(g, z); }

MomentumValue momentum_map(const TranslationAction &a, const PhasePoint &z) { return a.momentum(z); }

InvarianceResult check_invariance(const TranslationAction &a, const Expr &f, const HamiltonianSystem &names,
                                  const SamplingOptions &opts)
{
    if (opts.samples == 0) throw Error(ErrorKind::argument, "invariance check needs at least one sample");
    if (names.dim() != a.ambient_dim()) throw Error(ErrorKind::dimension, "action and system dimensions differ");
    InvarianceResult result;
    if (a.group_dim() == 0) return result;

    const CompiledExpr fc(f, names.slots());
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> point(-opts.box, opts.box);
    std::uniform_real_distribution<double> element(-opts.group_box, opts.group_box);
    const std::size_t n = a.ambient_dim();
    std::vector<double> slots(names.slots().size(), 0.0);
    std::vector<double> g(a.group_dim());
    for (std::size_t s = 0; s < opts.samples; ++s) {
        for (auto &v : slots) v = point(rng);
        for (auto &v : g) v = element(rng);
        const double f0 = fc(slots);
        auto moved = slots;
        const auto q1 = a.translate(g, std::span<const double>(slots.data(), n));
        std::copy(q1.begin(), q1.end(), moved.begin());
        const double f1 = fc(moved);
        const double violation = std::abs(f1 - f0) / (1.0 + std::abs(f0));
        if (violation > result.max_violation) {
            result.max_violation = violation;
            result.witness.assign(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(2 * n));
            result.witness.insert(result.witness.end(), g.begin(), g.end());
        }
    }
    result.invariant = result.max_violation <= opts.tol;
    return result;
}

bool is_invariant(const TranslationAction &a, const Expr &f, const HamiltonianSystem &names, const SamplingOptions &opts)
{
    return check_invariance(a, f, names, opts).invariant;
}

LemmaReport check_invariance_lemma(const TranslationAction &a, const OneForm &gamma, const PointSet &grid, double tol,
                                   std::uint64_t seed)
{
    if (gamma.dim() != a.ambient_dim()) throw Error(ErrorKind::dimension, "1-form and action dimensions differ");
    LemmaReport report;
    const std::size_t k = a.group_dim();
    if (k == 0 || grid.empty()) return report;

    std::vector<double> lo(k, std::numeric_limits<double>::infinity());
    std::vector<double> hi(k, -std::numeric_limits<double>::infinity());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> element(-2.0, 2.0);
    std::vector<double> g(k);
    for (const auto &q : grid) {
        const auto gq = gamma(q);
        const auto mu = a.momentum(gq);
        for (std::size_t c = 0; c < k; ++c) {
            lo[c] = std::min(lo[c], mu[c]);
            hi[c] = std::max(hi[c], mu[c]);
        }
        for (auto &v : g) v = element(rng);
        const auto moved = gamma(a.translate(g, q));
        for (std::size_t j = 0; j < gq.size(); ++j) {
            report.max_violation = std::max(report.max_violation, std::abs(moved[j] - gq[j]) / (1.0 + std::abs(gq[j])));
        }
    }
    for (std::size_t c = 0; c < k; ++c) report.j_spread = std::max(report.j_spread, hi[c] - lo[c]);
    report.invariant = report.max_violation <= tol;
    report.consistent = (report.j_spread <= tol) == report.invariant;
    return report;
}

} // namespace hjr
