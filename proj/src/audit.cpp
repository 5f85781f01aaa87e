#include "hjr/audit.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <bit>
#include <optional>

#include "hjr/error.hpp"

namespace hjr {

Expr random_expression(std::mt19937_64 &rng, const std::vector<std::string> &vars, int depth)
{
    std::uniform_int_distribution<int> leaf_kind(0, 2);
    std::uniform_int_distribution<std::size_t> pick(0, vars.size() - 1);
    std::uniform_int_distribution<int> small(-20, 20);
    if (depth <= 0) {
        if (leaf_kind(rng) == 0) return Expr(small(rng) / 4.0);
        return Expr::variable(vars[pick(rng)]);
    }
    std::uniform_int_distribution<int> kind(0, 13);
    const int k = kind(rng);
    auto sub = [&] { return random_expression(rng, vars, depth - 1); };
    switch (k) {
    case 0:
        return Expr::binary(Op::add, sub(), sub());
    case 1:
        return Expr::binary(Op::sub, sub(), sub());
    case 2:
    case 3:
        return Expr::binary(Op::mul, sub(), sub());
    case 4:
        return Expr::binary(Op::div, sub(), sub());
    case 5: {
        static constexpr double exps[] = {2.0, 3.0, -1.0, 0.5, -2.0};
        std::uniform_int_distribution<int> e(0, 4);
        return Expr::binary(Op::pow, sub(), Expr(exps[e(rng)]));
    }
    case 6:
        return Expr::unary(Op::neg, sub());
    case 7:
        return Expr::unary(Op::sin, sub());
    case 8:
        return Expr::unary(Op::cos, sub());
    case 9:
        return Expr::unary(Op::tan, sub());
    case 10:
        return Expr::unary(Op::atan, sub());
    case 11:
        return Expr::unary(Op::sqrt, sub());
    case 12:
        return Expr::unary(Op::exp, sub());
    default:
        return Expr::unary(Op::log, sub());
    }
}

namespace {

std::optional<double> try_eval(const CompiledExpr &f, std::vector<double> x)
{
    try {
        return f(x);
    } catch (const DomainError &) {
        return std::nullopt;
    }
}

std::optional<double> central(const CompiledExpr &f, const std::vector<double> &x, std::size_t i, double h)
{
    auto xp = x;
    auto xm = x;
    xp[i] += h;
    xm[i] -= h;
    const auto fp = try_eval(f, xp);
    const auto fm = try_eval(f, xm);
    if (!fp || !fm) return std::nullopt;
    return (*fp - *fm) / (2.0 * h);
}

// Two Richardson levels; empty when they disagree beyond `agree`.
std::optional<double> richardson(const CompiledExpr &f, const std::vector<double> &x, std::size_t i, double agree)
{
    const double h = 1e-3 * (1.0 + std::abs(x[i]));
    double r[2];
    for (int level = 0; level < 2; ++level) {
        const double hh = h / (level == 0 ? 1.0 : 2.0);
        const auto d1 = central(f, x, i, hh);
        const auto d2 = central(f, x, i, hh / 2.0);
        if (!d1 || !d2) return std::nullopt;
        r[level] = (4.0 * *d2 - *d1) / 3.0;
    }
    if (!(std::abs(r[0] - r[1]) <= agree * (1.0 + std::abs(r[1])))) return std::nullopt;
    return r[1];
}

} // namespace

DerivativeAudit derivative_audit(std::size_t expressions, std::uint64_t seed, int depth)
{
    const std::vector<std::string> vars{"x", "y", "z"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    DerivativeAudit out;
    while (out.expressions < expressions) {
        const Expr e = random_expression(rng, vars, depth);
        const CompiledExpr f(e, vars);
        const Expr round = parse(to_string(e));
        const CompiledExpr fr(round, vars);
        std::vector<CompiledExpr> d;
        for (const auto &v : vars) d.emplace_back(differentiate(e, v), vars);
        bool used = false;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            for (int attempt = 0; attempt < 20; ++attempt) {
                std::vector<double> x{u(rng), u(rng), u(rng)};
                const auto fx = try_eval(f, x);
                const auto dx = try_eval(d[i], x);
                if (!fx || !dx) {
                    ++out.skipped;
                    continue;
                }
                // Large values make difference quotients meaningless.
                if (std::abs(*fx) > 1e6 || std::abs(*dx) > 1e6) {
                    ++out.skipped;
                    continue;
                }
                const auto fd = richardson(f, x, i, 1e-7);
                if (!fd) {
                    ++out.skipped;
                    continue;
                }
                const auto rx = try_eval(fr, x);
                if (!rx || std::bit_cast<std::uint64_t>(*rx) != std::bit_cast<std::uint64_t>(*fx)) ++out.roundtrip_mismatches;
                const double err = std::abs(*dx - *fd) / (1.0 + std::abs(*fd));
                if (err > out.max_rel_error) {
                    out.max_rel_error = err;
                    out.worst_expression = to_string(e);
                }
                ++out.checked;
                used = true;
                break;
            }
        }
        if (used) ++out.expressions;
    }
    return out;
}

Expr random_invariant_potential(std::mt19937_64 &rng, const QuotientChart &chart,
                                const std::vector<std::string> &q_names, const MomentumValue &mu, int depth)
{
    const auto m = chart.reduced_dim();
    std::vector<std::string> y_names;
    for (std::size_t i = 0; i < m; ++i) y_names.push_back("\x02y" + std::to_string(i));
    Expr f = m == 0 ? Expr(0.0) : random_expression(rng, y_names, depth);
    const auto ys = chart.reduced_from_coords(q_names);
    std::map<std::string, Expr, std::less<>> sub;
    for (std::size_t i = 0; i < m; ++i) sub.emplace(y_names[i], ys[i]);
    f = substitute(f, sub);
    const Vec coeffs = chart.x_block().transpose() * to_vec(mu);
    return f + linear_combination(to_std(coeffs), q_names);
}

namespace {

// dS finite and moderate at every grid point.
bool usable(const OneForm &form, const PointSet &grid)
{
    try {
        for (const auto &q : grid) {
            for (double v : form(q)) {
                if (!(std::abs(v) < 1e6)) return false;
            }
        }
    } catch (const DomainError &) {
        return false;
    }
    return true;
}

} // namespace

LemmaSuite lemma_suite(const TranslationAction &a, const MomentumValue &mu, const std::vector<std::string> &q_names,
                       const PointSet &grid, std::size_t count, double amplitude, double tol, std::uint64_t seed)
{
    const auto chart = build_chart(a);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(0.5, 2.0);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    std::size_t moved = 0;
    const Mat &g = a.generators();
    for (Eigen::Index i = 1; i < g.rows(); ++i) {
        if (std::abs(g(i, 0)) > std::abs(g(static_cast<Eigen::Index>(moved), 0))) moved = static_cast<std::size_t>(i);
    }
    LemmaSuite out;
    out.min_perturbed_spread = std::numeric_limits<double>::infinity();
    while (out.count < count) {
        const Expr s = random_invariant_potential(rng, chart, q_names, mu);
        const auto form = OneForm::exact(q_names, s);
        if (!usable(form, grid)) {
            ++out.rejected;
            continue;
        }
        const auto inv = check_invariance_lemma(a, form, grid, tol, seed + out.count);
        const Expr bump = amplitude * sin(freq(rng) * Expr::variable(q_names[moved]) + phase(rng));
        const auto pert = check_invariance_lemma(a, OneForm::exact(q_names, s + bump), grid, tol, seed + out.count);
        out.max_invariant_spread = std::max(out.max_invariant_spread, inv.j_spread);
        out.min_perturbed_spread = std::min(out.min_perturbed_spread, pert.j_spread);
        if (!inv.consistent || !pert.consistent || !inv.invariant || pert.invariant) ++out.inconsistent;
        ++out.count;
    }
    return out;
}

} // namespace hjr
