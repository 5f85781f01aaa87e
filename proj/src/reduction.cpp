#include "hjr/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "hjr/error.hpp"

namespace hjr {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void clean(Mat &m)
{
    const double scale = std::max(1.0, max_abs(m));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (std::abs(m(i, j)) < 1e-15 * scale) m(i, j) = 0.0;
        }
    }
}

std::vector<std::string> numbered(const char *prefix, std::size_t m)
{
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= m; ++i) out.push_back(fmt::format("{}{}", prefix, i));
    return out;
}

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

// Sample points q = T⁻¹(y, x) with y from the grid and x random in the fibre box.
template <typename Fn>
void for_fibre_samples(const QuotientChart &chart, const PointSet &grid, const SamplingOptions &opts, Fn &&fn)
{
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> fibre(-opts.group_box, opts.group_box);
    std::vector<double> x(chart.group_dim());
    std::vector<double> g(chart.group_dim());
    for (const auto &y : grid) {
        for (auto &v : x) v = fibre(rng);
        for (auto &v : g) v = fibre(rng);
        fn(chart.lift_point(y, x), g);
    }
}

} // namespace

QuotientChart::QuotientChart(Mat generators, Mat y_block, Mat x_block)
    : g_(std::move(generators)), y_(std::move(y_block)), x_(std::move(x_block))
{
    const Index n = g_.rows();
    if (y_.cols() != n || x_.cols() != n || y_.rows() + x_.rows() != n || x_.rows() != g_.cols()) {
        throw Error(ErrorKind::dimension, "chart blocks do not fit the generator matrix");
    }
    t_.resize(n, n);
    t_ << y_, x_;
    Eigen::FullPivLU<Mat> lu(t_);
    if (!lu.isInvertible()) throw Error(ErrorKind::numeric, "chart matrix is singular");
    t_inv_ = lu.inverse();
    clean(t_inv_);
}

std::vector<double> QuotientChart::reduce_point(std::span<const double> q) const
{
    if (q.size() != ambient_dim()) throw Error(ErrorKind::dimension, "point has wrong dimension for the chart");
    return to_std(y_ * to_vec(q));
}

std::vector<double> QuotientChart::group_part(std::span<const double> q) const
{
    if (q.size() != ambient_dim()) throw Error(ErrorKind::dimension, "point has wrong dimension for the chart");
    return to_std(x_ * to_vec(q));
}

std::vector<double> QuotientChart::lift_point(std::span<const double> y, std::span<const double> x) const
{
    if (y.size() != reduced_dim()) throw Error(ErrorKind::dimension, "reduced point has wrong dimension");
    if (!x.empty() && x.size() != group_dim()) throw Error(ErrorKind::dimension, "fibre point has wrong dimension");
    Vec yx = Vec::Zero(idx(ambient_dim()));
    for (std::size_t i = 0; i < y.size(); ++i) yx(idx(i)) = y[i];
    for (std::size_t i = 0; i < x.size(); ++i) yx(idx(reduced_dim() + i)) = x[i];
    return to_std(t_inv_ * yx);
}

std::pair<std::vector<double>, std::vector<double>> QuotientChart::split_covector(std::span<const double> p) const
{
    if (p.size() != ambient_dim()) throw Error(ErrorKind::dimension, "covector has wrong dimension for the chart");
    const Vec c = t_inv_.transpose() * to_vec(p);
    const auto m = idx(reduced_dim());
    return {to_std(c.head(m)), to_std(c.tail(idx(group_dim())))};
}

std::vector<double> QuotientChart::join_covector(std::span<const double> p_y, std::span<const double> p_x) const
{
    if (p_y.size() != reduced_dim() || p_x.size() != group_dim()) {
        throw Error(ErrorKind::dimension, "covector parts have wrong dimensions");
    }
    Vec p = y_.transpose() * to_vec(p_y);
    if (group_dim() > 0) p += x_.transpose() * to_vec(p_x);
    return to_std(p);
}

std::vector<Expr> QuotientChart::coords_from_reduced(const std::vector<std::string> &y_names) const
{
    if (y_names.size() != reduced_dim()) throw Error(ErrorKind::dimension, "wrong number of reduced coordinate names");
    std::vector<Expr> out;
    for (std::size_t i = 0; i < ambient_dim(); ++i) {
        std::vector<double> row(reduced_dim());
        for (std::size_t j = 0; j < reduced_dim(); ++j) row[j] = t_inv_(idx(i), idx(j));
        out.push_back(linear_combination(row, y_names));
    }
    return out;
}

std::vector<Expr> QuotientChart::reduced_from_coords(const std::vector<std::string> &q_names) const
{
    if (q_names.size() != ambient_dim()) throw Error(ErrorKind::dimension, "wrong number of coordinate names");
    std::vector<Expr> out;
    for (std::size_t j = 0; j < reduced_dim(); ++j) {
        std::vector<double> row(ambient_dim());
        for (std::size_t i = 0; i < ambient_dim(); ++i) row[i] = y_(idx(j), idx(i));
        out.push_back(linear_combination(row, q_names));
    }
    return out;
}

QuotientChart build_chart(const TranslationAction &a)
{
    const Mat &g = a.generators();
    const Index n = g.rows();
    const Index k = g.cols();
    if (k == 0) return QuotientChart(g, Mat::Identity(n, n), Mat(0, n));
    if (matrix_rank(g) != k) throw Error(ErrorKind::argument, "generator matrix is rank deficient");
    Mat y = left_null_space(g);
    const Mat gram = g.transpose() * g;
    Mat x = gram.ldlt().solve(g.transpose());
    clean(x);
    return QuotientChart(g, std::move(y), std::move(x));
}

Expr linear_combination(std::span<const double> coeffs, const std::vector<std::string> &names)
{
    if (coeffs.size() != names.size()) throw Error(ErrorKind::dimension, "coefficient and name counts differ");
    Expr out;
    bool first = true;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const double c = coeffs[i];
        if (c == 0.0) continue;
        const Expr v = Expr::variable(names[i]);
        if (first) {
            out = c * v;
            first = false;
        } else if (c < 0.0) {
            out = out - (-c) * v;
        } else {
            out = out + c * v;
        }
    }
    return out;
}

TwoForm::TwoForm(std::vector<std::string> base)
    : base_(std::move(base)), upper_(base_.size() * (base_.size() - (base_.empty() ? 0 : 1)) / 2)
{
}

TwoForm::TwoForm(std::vector<std::string> base, std::vector<Expr> upper) : TwoForm(std::move(base))
{
    if (upper.size() != upper_.size()) throw Error(ErrorKind::dimension, "wrong number of 2-form components");
    upper_ = std::move(upper);
}

std::size_t TwoForm::index(std::size_t i, std::size_t j) const
{
    const std::size_t m = dim();
    return i * m - i * (i + 1) / 2 + (j - i - 1);
}

Expr TwoForm::component(std::size_t i, std::size_t j) const
{
    if (i >= dim() || j >= dim()) throw Error(ErrorKind::dimension, "2-form index out of range");
    if (i == j) return Expr(0.0);
    if (i < j) return upper_[index(i, j)];
    return -upper_[index(j, i)];
}

void TwoForm::set(std::size_t i, std::size_t j, Expr value)
{
    if (i >= dim() || j >= dim() || i == j) throw Error(ErrorKind::dimension, "2-form index out of range");
    if (i < j) {
        upper_[index(i, j)] = std::move(value);
    } else {
        upper_[index(j, i)] = -value;
    }
}

Mat TwoForm::operator()(std::span<const double> y) const
{
    if (y.size() != dim()) throw Error(ErrorKind::dimension, "2-form evaluated at a point of wrong dimension");
    Mat out = Mat::Zero(idx(dim()), idx(dim()));
    for (std::size_t i = 0; i < dim(); ++i) {
        for (std::size_t j = i + 1; j < dim(); ++j) {
            const double v = CompiledExpr(upper_[index(i, j)], base_)(y, singularity_guard);
            out(idx(i), idx(j)) = v;
            out(idx(j), idx(i)) = -v;
        }
    }
    return out;
}

bool TwoForm::is_zero() const
{
    return std::all_of(upper_.begin(), upper_.end(), [](const Expr &e) { return e.is_constant(0.0); });
}

ReducedNames default_reduced_names(std::size_t m) { return {numbered("y", m), numbered("py", m)}; }

OneForm flat_connection_form(const QuotientChart &chart, const std::vector<std::string> &q_names, const MomentumValue &mu)
{
    if (mu.size() != chart.group_dim()) throw Error(ErrorKind::dimension, "momentum value has wrong dimension");
    std::vector<Expr> comps;
    Expr potential;
    for (std::size_t i = 0; i < chart.ambient_dim(); ++i) {
        double c = 0.0;
        for (std::size_t a = 0; a < mu.size(); ++a) c += chart.x_block()(idx(a), idx(i)) * mu[a];
        comps.emplace_back(c);
        if (c != 0.0) potential = potential + c * Expr::variable(q_names[i]);
    }
    return OneForm(q_names, std::move(comps), potential);
}

Expr reduced_hamiltonian(const HamiltonianSystem &sys, const QuotientChart &chart, const MomentumValue &mu,
                         const ReducedNames &names, const SamplingOptions &opts, double *x_dependence)
{
    if (sys.dim() != chart.ambient_dim()) throw Error(ErrorKind::dimension, "system and chart dimensions differ");
    if (mu.size() != chart.group_dim()) throw Error(ErrorKind::dimension, "momentum value has wrong dimension");
    if (names.coords.size() != chart.reduced_dim() || names.momenta.size() != chart.reduced_dim()) {
        throw Error(ErrorKind::dimension, "wrong number of reduced variable names");
    }

    const TranslationAction action(chart.generators());
    const auto inv = check_invariance(action, sys.hamiltonian(), sys, opts);
    if (!inv.invariant) {
        throw PreconditionError(fmt::format("Hamiltonian is not invariant under the action (violation {:.3g})", inv.max_violation),
                                inv.witness);
    }

    std::map<std::string, Expr, std::less<>> subs;
    const auto q_expr = chart.coords_from_reduced(names.coords);
    for (std::size_t i = 0; i < sys.dim(); ++i) {
        subs[sys.coords()[i]] = q_expr[i];
        std::vector<double> row(chart.reduced_dim());
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = chart.y_block()(idx(j), idx(i));
        double shift = 0.0;
        for (std::size_t a = 0; a < mu.size(); ++a) shift += chart.x_block()(idx(a), idx(i)) * mu[a];
        subs[sys.momenta()[i]] = linear_combination(row, names.momenta) + Expr(shift);
    }
    Expr reduced = simplify(substitute(sys.hamiltonian(), subs));

    std::vector<std::string> slots = names.coords;
    slots.insert(slots.end(), names.momenta.begin(), names.momenta.end());
    if (sys.time_dependent()) slots.push_back(sys.time_var());
    for (const auto &v : free_variables(reduced)) {
        if (std::find(slots.begin(), slots.end(), v) == slots.end()) {
            throw Error(ErrorKind::argument, fmt::format("reduced Hamiltonian still depends on '{}'", v));
        }
    }

    // x-independence: compare h̃(y, p_y) with h at two random fibre points.
    const CompiledExpr full(sys.hamiltonian(), sys.slots());
    const CompiledExpr red(reduced, slots);
    std::mt19937_64 rng(opts.seed + 1);
    std::uniform_real_distribution<double> box(-opts.box, opts.box);
    std::uniform_real_distribution<double> fibre(-opts.group_box, opts.group_box);
    const std::size_t m = chart.reduced_dim();
    double worst = 0.0;
    std::vector<double> witness;
    for (std::size_t s = 0; s < opts.samples; ++s) {
        std::vector<double> rs(slots.size());
        for (auto &v : rs) v = box(rng);
        const std::span<const double> y(rs.data(), m);
        const std::span<const double> py(rs.data() + m, m);
        for (int copy = 0; copy < 2; ++copy) {
            std::vector<double> x(chart.group_dim());
            for (auto &v : x) v = fibre(rng);
            const auto q = chart.lift_point(y, x);
            const auto p = chart.join_covector(py, mu);
            std::vector<double> fs(q);
            fs.insert(fs.end(), p.begin(), p.end());
            if (sys.time_dependent()) fs.push_back(rs.back());
            double a = 0.0;
            double b = 0.0;
            try {
                a = full(fs);
                b = red(rs);
            } catch (const DomainError &) {
                continue;
            }
            if (rel(a, b) > worst) {
                worst = rel(a, b);
                witness = fs;
            }
        }
    }
    if (x_dependence) *x_dependence = worst;
    if (worst > opts.tol) {
        throw PreconditionError(fmt::format("reduced Hamiltonian depends on the fibre (deviation {:.3g})", worst), witness);
    }
    return reduced;
}

ReducedSystem reduce(const HamiltonianSystem &sys, const TranslationAction &a, const MomentumValue &mu,
                     const ReducedNames &names, const SamplingOptions &opts, const std::optional<OneForm> &connection)
{
    QuotientChart chart = build_chart(a);
    double x_dep = 0.0;
    Expr h = reduced_hamiltonian(sys, chart, mu, names, opts, &x_dep);
    TwoForm beta(names.coords);
    if (connection) beta = magnetic_term(chart, *connection, names.coords);
    ReducedSystem out{std::move(chart), mu, names, std::move(h), std::move(beta), x_dep};
    return out;
}

void check_connection_form(const QuotientChart &chart, const OneForm &alpha, const MomentumValue &mu,
                           const PointSet &reduced_grid, const SamplingOptions &opts)
{
    if (alpha.dim() != chart.ambient_dim()) throw Error(ErrorKind::dimension, "connection form has wrong dimension");
    if (mu.size() != chart.group_dim()) throw Error(ErrorKind::dimension, "momentum value has wrong dimension");
    const TranslationAction action(chart.generators());
    for_fibre_samples(chart, reduced_grid, opts, [&](const std::vector<double> &q, const std::vector<double> &g) {
        const auto a0 = alpha(q);
        const auto j = action.momentum(a0);
        for (std::size_t c = 0; c < j.size(); ++c) {
            if (rel(j[c], mu[c]) > opts.tol) {
                throw PreconditionError(fmt::format("J∘α differs from μ by {:.3g}", std::abs(j[c] - mu[c])), q);
            }
        }
        const auto a1 = alpha(action.translate(g, q));
        for (std::size_t i = 0; i < a0.size(); ++i) {
            if (rel(a1[i], a0[i]) > opts.tol) {
                throw PreconditionError(fmt::format("connection form is not invariant (component {} moves by {:.3g})", i,
                                                    std::abs(a1[i] - a0[i])),
                                        q);
            }
        }
    });
}

namespace {

// y-part of T⁻ᵀ·components, with q replaced by T⁻¹(y, 0).
std::vector<Expr> reduced_components(const QuotientChart &chart, const std::vector<std::string> &q_names,
                                     const std::vector<Expr> &comps, const std::vector<std::string> &y_names)
{
    std::map<std::string, Expr, std::less<>> subs;
    const auto q_expr = chart.coords_from_reduced(y_names);
    for (std::size_t i = 0; i < q_names.size(); ++i) subs[q_names[i]] = q_expr[i];
    std::vector<Expr> out;
    for (std::size_t j = 0; j < chart.reduced_dim(); ++j) {
        Expr acc;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const double c = chart.inverse()(idx(i), idx(j));
            if (c != 0.0) acc = acc + c * comps[i];
        }
        out.push_back(substitute(acc, subs));
    }
    return out;
}

} // namespace

TwoForm magnetic_term(const QuotientChart &chart, const OneForm &alpha, const std::vector<std::string> &y_names)
{
    if (alpha.dim() != chart.ambient_dim()) throw Error(ErrorKind::dimension, "connection form has wrong dimension");
    const auto a = reduced_components(chart, alpha.base(), alpha.components(), y_names);
    TwoForm beta(y_names);
    for (std::size_t i = 0; i < y_names.size(); ++i) {
        for (std::size_t j = i + 1; j < y_names.size(); ++j) {
            beta.set(i, j, simplify(differentiate(a[j], y_names[i]) - differentiate(a[i], y_names[j])));
        }
    }
    return beta;
}

PhasePoint momentum_shift(const PhasePoint &z, const OneForm &alpha)
{
    if (z.q.size() != alpha.dim() || z.p.size() != alpha.dim()) {
        throw Error(ErrorKind::dimension, "phase point and 1-form dimensions differ");
    }
    PhasePoint out = z;
    const auto a = alpha(z.q);
    for (std::size_t i = 0; i < a.size(); ++i) out.p[i] -= a[i];
    return out;
}

double magnetic_lagrangian_residual(const OneForm &gamma, const std::optional<TwoForm> &beta, const PointSet &grid)
{
    if (beta && beta->dim() != gamma.dim()) throw Error(ErrorKind::dimension, "2-form and 1-form dimensions differ");
    double worst = 0.0;
    for (const auto &y : grid) {
        Mat b = beta ? (*beta)(y) : Mat::Zero(idx(gamma.dim()), idx(gamma.dim()));
        for (std::size_t i = 0; i < gamma.dim(); ++i) {
            for (std::size_t j = i + 1; j < gamma.dim(); ++j) {
                const double d = gamma.partial(i, j, y) - gamma.partial(j, i, y);
                worst = std::max(worst, std::abs(d + b(idx(i), idx(j))));
            }
        }
    }
    return worst;
}

Projection project_lagrangian(const OneForm &gamma, const QuotientChart &chart, const MomentumValue &mu,
                              const std::vector<std::string> &y_names, const PointSet &reduced_grid,
                              const SamplingOptions &opts, const std::optional<OneForm> &connection,
                              const std::optional<TwoForm> &magnetic)
{
    if (gamma.dim() != chart.ambient_dim()) throw Error(ErrorKind::dimension, "1-form has wrong dimension for the chart");
    if (mu.size() != chart.group_dim()) throw Error(ErrorKind::dimension, "momentum value has wrong dimension");
    const OneForm alpha = connection ? *connection : flat_connection_form(chart, gamma.base(), mu);
    const TranslationAction action(chart.generators());

    ProjectionReport report;
    std::vector<double> worst_point;
    double worst_scaled = 0.0;
    std::string worst_what;
    auto note = [&](double v, double scaled, const std::vector<double> &q, const char *what) {
        if (scaled > worst_scaled) {
            worst_scaled = scaled;
            worst_point = q;
            worst_what = what;
        }
        return v;
    };
    for_fibre_samples(chart, reduced_grid, opts, [&](const std::vector<double> &q, const std::vector<double> &g) {
        const auto g0 = gamma(q);
        for (std::size_t i = 0; i < gamma.dim(); ++i) {
            for (std::size_t j = i + 1; j < gamma.dim(); ++j) {
                const double d = std::abs(gamma.partial(i, j, q) - gamma.partial(j, i, q));
                report.closedness = std::max(report.closedness, note(d, d, q, "not closed"));
            }
        }
        const auto jq = action.momentum(g0);
        for (std::size_t c = 0; c < jq.size(); ++c) {
            const double d = std::abs(jq[c] - mu[c]);
            report.momentum = std::max(report.momentum, note(d, rel(jq[c], mu[c]), q, "J∘γ differs from μ"));
        }
        const auto g1 = gamma(action.translate(g, q));
        for (std::size_t i = 0; i < g0.size(); ++i) {
            const double d = std::abs(g1[i] - g0[i]);
            report.invariance = std::max(report.invariance, note(d, rel(g1[i], g0[i]), q, "not invariant"));
        }
    });
    if (worst_scaled > opts.tol) {
        throw PreconditionError(fmt::format("1-form is {} (deviation {:.3g})", worst_what, worst_scaled), worst_point);
    }

    std::vector<Expr> diff;
    for (std::size_t i = 0; i < gamma.dim(); ++i) diff.push_back(gamma.components()[i] - alpha.components()[i]);
    auto comps = reduced_components(chart, gamma.base(), diff, y_names);
    std::optional<Expr> potential;
    if (gamma.potential() && alpha.potential()) {
        std::map<std::string, Expr, std::less<>> subs;
        const auto q_expr = chart.coords_from_reduced(y_names);
        for (std::size_t i = 0; i < gamma.dim(); ++i) subs[gamma.base()[i]] = q_expr[i];
        potential = substitute(*gamma.potential() - *alpha.potential(), subs);
    }
    OneForm reduced(y_names, std::move(comps), potential);
    const TwoForm beta = magnetic ? *magnetic : magnetic_term(chart, alpha, y_names);
    report.lagrangian = magnetic_lagrangian_residual(reduced, beta, reduced_grid);
    return {std::move(reduced), report};
}

} // namespace hjr
