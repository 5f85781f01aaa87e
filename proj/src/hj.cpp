#include "hjr/hj.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/core.h>

#include "hjr/error.hpp"
#include "hjr/io.hpp"

namespace hjr {

namespace {

const char *branch_sign(int branch) { return branch > 0 ? "+" : "-"; }

} // namespace

HjResidual hj_residual(const HamiltonianSystem &sys, const OneForm &gamma, const PointSet &grid)
{
    if (gamma.dim() != sys.dim()) throw Error(ErrorKind::dimension, "1-form and system dimensions differ");
    if (sys.time_dependent()) throw Error(ErrorKind::argument, "hj_residual needs an autonomous Hamiltonian");
    HjResidual out;
    if (grid.empty()) return out;
    std::vector<double> values;
    values.reserve(grid.size());
    for (const auto &q : grid) {
        PhasePoint z{q, gamma(q), std::nullopt};
        values.push_back(sys.energy(z));
    }
    out.energy = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = std::abs(values[i] - out.energy);
        if (d > out.max_dev || out.worst_point.empty()) {
            out.max_dev = std::max(out.max_dev, d);
            out.worst_point = grid[i];
        }
    }
    return out;
}

BranchRoot::BranchRoot(const Expr &h, std::string y_name, std::string p_name, int branch)
    : h_(h), y_(std::move(y_name)), p_(std::move(p_name)), branch_(branch)
{
    if (branch_ != 1 && branch_ != -1) throw Error(ErrorKind::argument, "branch must be +1 or -1");
    const std::vector<std::string> slots{y_, p_};
    f_ = CompiledExpr(h_, slots);
    fy_ = CompiledExpr(differentiate(h_, y_), slots);
    const Expr hp = differentiate(h_, p_);
    fp_ = CompiledExpr(hp, slots);
    fpp_ = CompiledExpr(differentiate(hp, p_), slots);
}

double BranchRoot::h(double y, double p) const { return f_(std::array{y, p}, singularity_guard); }
double BranchRoot::h_y(double y, double p) const { return fy_(std::array{y, p}, singularity_guard); }
double BranchRoot::h_p(double y, double p) const { return fp_(std::array{y, p}, singularity_guard); }
double BranchRoot::h_pp(double y, double p) const { return fpp_(std::array{y, p}, singularity_guard); }

double BranchRoot::solve(double y, double energy, std::optional<double> guess, double tol) const
{
    const double b = branch_;
    auto f = [&](double p) { return h(y, p) - energy; };

    if (guess && b * *guess > 0.0) {
        double p = *guess;
        for (int it = 0; it < 12; ++it) {
            double fv = 0.0;
            double d = 0.0;
            try {
                fv = f(p);
                d = h_p(y, p);
            } catch (const DomainError &) {
                break;
            }
            if (!(b * d > 0.0) || !(b * p > 0.0)) break;
            if (std::abs(fv) <= tol) return p;
            p -= fv / d;
        }
    }

    const double f0 = f(0.0);
    if (!(f0 < 0.0)) {
        throw Error(ErrorKind::numeric, fmt::format("no root of h({}, {}) = {} on the {} branch at {} = {:.17g} "
                                                    "(turning point: h({}, 0) - E = {:.6g})",
                                                    y_, p_, energy, branch_sign(branch_), y_, y, y_, f0));
    }
    double lo = 0.0;
    double hi = 1.0;
    while (!(f(b * hi) > 0.0)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e15) throw Error(ErrorKind::numeric, fmt::format("cannot bracket a root of h = {} at {} = {:.17g}", energy, y_, y));
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        const double fv = f(b * s);
        if (std::abs(fv) <= tol) break;
        if (fv < 0.0) {
            lo = s;
        } else {
            hi = s;
        }
        const double d = b * h_p(y, b * s);
        double next = d > 0.0 ? s - fv / d : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == s || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            s = next;
            break;
        }
        s = next;
    }
    const double p = b * s;
    const double res = std::abs(f(p));
    if (res > tol) {
        throw Error(ErrorKind::numeric, fmt::format("root of h = {} at {} = {:.17g} stalled with residual {:.3g}", energy, y_, y, res));
    }
    if (!(b * h_p(y, p) > 0.0)) {
        throw Error(ErrorKind::numeric,
                    fmt::format("h is not monotone in {} on the {} branch at {} = {:.17g}", p_, branch_sign(branch_), y_, y));
    }
    return p;
}

struct Reduced1dSolution::State {
    BranchRoot root;
    double energy = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;
    std::vector<double> y;
    std::vector<double> w;
    std::vector<double> p;
    double node_residual = 0.0;
    Expr slope_of_p;

    double guess(double at) const
    {
        if (at <= lo) return p.front();
        if (at >= hi) return p.back();
        const double s = (at - lo) / step;
        const auto i = std::min(static_cast<std::size_t>(s), y.size() - 2);
        const double t = s - static_cast<double>(i);
        return (1.0 - t) * p[i] + t * p[i + 1];
    }
};

namespace {

std::shared_ptr<const ScalarFunction> momentum_function(const std::shared_ptr<const Reduced1dSolution::State> &st);

Expr momentum_call(const std::shared_ptr<const Reduced1dSolution::State> &st, const Expr &arg)
{
    return Expr::call(momentum_function(st), arg);
}

std::shared_ptr<const ScalarFunction> momentum_function(const std::shared_ptr<const Reduced1dSolution::State> &st)
{
    auto fn = std::make_shared<ScalarFunction>();
    fn->name = "dW";
    fn->value = [st](double y) { return st->root.solve(y, st->energy, st->guess(y)); };
    fn->derivative = [st](const Expr &u) {
        std::map<std::string, Expr, std::less<>> subs{{st->root.y_name(), u}, {st->root.p_name(), momentum_call(st, u)}};
        return substitute(st->slope_of_p, subs);
    };
    return fn;
}

double hermite(const Reduced1dSolution::State &st, double y)
{
    const double span = st.hi - st.lo;
    if (y < st.lo - 1e-12 * span || y > st.hi + 1e-12 * span) {
        throw DomainError(fmt::format("W({:.17g})", y), fmt::format("outside the tabulated range [{}, {}]", st.lo, st.hi));
    }
    const double s = std::clamp((y - st.lo) / st.step, 0.0, static_cast<double>(st.y.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(s), st.y.size() - 2);
    const double t = s - static_cast<double>(i);
    const double h = st.step;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * st.w[i] + (t3 - 2 * t2 + t) * h * st.p[i] + (-2 * t3 + 3 * t2) * st.w[i + 1] +
           (t3 - t2) * h * st.p[i + 1];
}

std::shared_ptr<const ScalarFunction> antiderivative_function(const std::shared_ptr<const Reduced1dSolution::State> &st)
{
    auto fn = std::make_shared<ScalarFunction>();
    fn->name = "W";
    fn->value = [st](double y) { return hermite(*st, y); };
    fn->derivative = [st](const Expr &u) { return momentum_call(st, u); };
    return fn;
}

} // namespace

const std::vector<double> &Reduced1dSolution::nodes() const { return state_->y; }
const std::vector<double> &Reduced1dSolution::values() const { return state_->w; }
const std::vector<double> &Reduced1dSolution::slopes() const { return state_->p; }
double Reduced1dSolution::energy() const { return state_->energy; }
const BranchRoot &Reduced1dSolution::root() const { return state_->root; }
double Reduced1dSolution::node_residual() const { return state_->node_residual; }

double Reduced1dSolution::momentum(double y) const { return state_->root.solve(y, state_->energy, state_->guess(y)); }

double Reduced1dSolution::antiderivative(double y) const { return hermite(*state_, y); }

Expr Reduced1dSolution::momentum_expr(const Expr &arg) const { return momentum_call(state_, arg); }

Expr Reduced1dSolution::antiderivative_expr(const Expr &arg) const
{
    return Expr::call(antiderivative_function(state_), arg);
}

OneForm Reduced1dSolution::one_form() const
{
    const Expr y = Expr::variable(state_->root.y_name());
    return OneForm({state_->root.y_name()}, {momentum_expr(y)}, antiderivative_expr(y));
}

void Reduced1dSolution::write_csv(const std::filesystem::path &path) const
{
    std::string text = fmt::format("{},W,dW\n", state_->root.y_name());
    for (std::size_t i = 0; i < state_->y.size(); ++i) {
        text += format_g17(state_->y[i]) + "," + format_g17(state_->w[i]) + "," + format_g17(state_->p[i]) + "\n";
    }
    write_file_atomic(path, text);
}

Reduced1dSolution solve_reduced_1d(const Expr &h, const std::string &y_name, const std::string &p_name,
                                   const Reduced1dOptions &opts)
{
    if (opts.nodes < 2) throw Error(ErrorKind::argument, "quadrature needs at least two nodes");
    if (!(opts.y_hi > opts.y_lo)) throw Error(ErrorKind::argument, "empty quadrature range");
    auto st = std::make_shared<Reduced1dSolution::State>(Reduced1dSolution::State{
        BranchRoot(h, y_name, p_name, opts.branch), opts.energy, opts.y_lo, opts.y_hi, 0.0, {}, {}, {}, 0.0, {}});
    st->slope_of_p = -differentiate(h, y_name) / differentiate(h, p_name);

    const auto &root = st->root;
    for (double end : {opts.y_lo - opts.turning_margin, opts.y_hi + opts.turning_margin}) {
        try {
            (void)root.solve(end, opts.energy, std::nullopt, opts.root_tol);
        } catch (const Error &e) {
            throw Error(ErrorKind::numeric, fmt::format("turning point within {} of the range [{}, {}]: {}", opts.turning_margin,
                                                        opts.y_lo, opts.y_hi, e.what()));
        }
    }

    const std::size_t n = opts.nodes;
    st->step = (opts.y_hi - opts.y_lo) / static_cast<double>(n - 1);
    st->y.resize(n);
    st->p.resize(n);
    st->w.assign(n, 0.0);
    std::optional<double> warm;
    for (std::size_t i = 0; i < n; ++i) {
        st->y[i] = i + 1 == n ? opts.y_hi : opts.y_lo + st->step * static_cast<double>(i);
        st->p[i] = root.solve(st->y[i], opts.energy, warm, opts.root_tol);
        warm = st->p[i];
        st->node_residual = std::max(st->node_residual, std::abs(root.h(st->y[i], st->p[i]) - opts.energy));
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double mid = 0.5 * (st->y[i] + st->y[i + 1]);
        const double pm = root.solve(mid, opts.energy, 0.5 * (st->p[i] + st->p[i + 1]), opts.root_tol);
        const double h6 = (st->y[i + 1] - st->y[i]) / 6.0;
        st->w[i + 1] = st->w[i] + h6 * (st->p[i] + 4.0 * pm + st->p[i + 1]);
    }
    return Reduced1dSolution(std::move(st));
}

Expr time_extension(const Expr &w, double energy, const std::string &time_var)
{
    return w - energy * Expr::variable(time_var);
}

double time_dependent_residual(const HamiltonianSystem &sys, const Expr &s, const std::string &time_var,
                               const PointSet &grid, std::span<const double> times)
{
    if (sys.time_dependent()) throw Error(ErrorKind::argument, "time extension needs an autonomous Hamiltonian");
    std::vector<std::string> slots = sys.coords();
    slots.push_back(time_var);
    const CompiledExpr st(differentiate(s, time_var), slots);
    std::vector<CompiledExpr> sq;
    for (const auto &q : sys.coords()) sq.emplace_back(differentiate(s, q), slots);
    double worst = 0.0;
    for (const auto &q : grid) {
        if (q.size() != sys.dim()) throw Error(ErrorKind::dimension, "grid point has wrong dimension");
        for (double t : times) {
            std::vector<double> x = q;
            x.push_back(t);
            PhasePoint z{q, std::vector<double>(sys.dim()), std::nullopt};
            for (std::size_t i = 0; i < sys.dim(); ++i) z.p[i] = sq[i](x, singularity_guard);
            worst = std::max(worst, std::abs(st(x, singularity_guard) + sys.energy(z)));
        }
    }
    return worst;
}

CyclicAnsatz cyclic_ansatz(const HamiltonianSystem &sys, const std::vector<std::string> &cyclic,
                           const std::vector<double> &values, const SamplingOptions &opts)
{
    if (cyclic.size() != values.size()) throw Error(ErrorKind::dimension, "one value per cyclic coordinate is required");
    CyclicAnsatz out;
    out.values = values;
    for (const auto &name : cyclic) {
        const auto it = std::find(sys.coords().begin(), sys.coords().end(), name);
        if (it == sys.coords().end()) throw Error(ErrorKind::argument, fmt::format("'{}' is not a coordinate", name));
        out.cyclic.push_back(static_cast<std::size_t>(it - sys.coords().begin()));
    }
    for (std::size_t i = 0; i < sys.dim(); ++i) {
        if (std::find(out.cyclic.begin(), out.cyclic.end(), i) == out.cyclic.end()) out.rest.push_back(i);
    }

    std::map<std::string, Expr, std::less<>> subs;
    std::string tmpl;
    for (std::size_t l = 0; l < out.cyclic.size(); ++l) {
        std::vector<double> dir(sys.dim(), 0.0);
        dir[out.cyclic[l]] = 1.0;
        const auto action = TranslationAction::from_generators(sys.dim(), {dir});
        const auto inv = check_invariance(action, sys.hamiltonian(), sys, opts);
        if (!inv.invariant) {
            throw PreconditionError(fmt::format("'{}' is not a cyclic variable (violation {:.3g})", cyclic[l], inv.max_violation),
                                    inv.witness);
        }
        subs[sys.coords()[out.cyclic[l]]] = Expr(0.0);
        subs[sys.momenta()[out.cyclic[l]]] = Expr(values[l]);
        tmpl += fmt::format("{}*{} + ", to_string(Expr(values[l])), sys.coords()[out.cyclic[l]]);
    }
    out.reduced = simplify(substitute(sys.hamiltonian(), subs));
    std::string args;
    for (std::size_t r : out.rest) args += (args.empty() ? "" : ", ") + sys.coords()[r];
    out.template_text = tmpl + "V(" + args + ")";
    return out;
}

CyclicSolution solve_cyclic(const HamiltonianSystem &sys, const CyclicAnsatz &ansatz, const Reduced1dOptions &opts)
{
    if (ansatz.rest.size() != 1) {
        throw Error(ErrorKind::argument,
                    fmt::format("cyclic ansatz leaves {} coordinates; the quadrature handles one", ansatz.rest.size()));
    }
    const std::size_t r = ansatz.rest.front();
    auto v = solve_reduced_1d(ansatz.reduced, sys.coords()[r], sys.momenta()[r], opts);
    Expr w;
    for (std::size_t l = 0; l < ansatz.cyclic.size(); ++l) {
        w = w + ansatz.values[l] * Expr::variable(sys.coords()[ansatz.cyclic[l]]);
    }
    w = w + v.antiderivative_expr(Expr::variable(sys.coords()[r]));
    return CyclicSolution{ansatz, std::move(v), opts.energy, std::move(w)};
}

Mat cyclic_mixed_hessian(const HamiltonianSystem &sys, const CyclicSolution &s, std::span<const double> q)
{
    if (q.size() != sys.dim()) throw Error(ErrorKind::dimension, "point has wrong dimension");
    const auto &a = s.ansatz;
    const std::size_t n = sys.dim();
    const std::size_t r = a.rest.front();
    PhasePoint z{std::vector<double>(q.begin(), q.end()), std::vector<double>(n, 0.0), std::nullopt};
    z.p[r] = s.v.momentum(q[r]);
    for (std::size_t l = 0; l < a.cyclic.size(); ++l) z.p[a.cyclic[l]] = a.values[l];
    const auto hp = sys.velocity(z);
    Mat m = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto row = static_cast<Eigen::Index>(r);
    m(row, 0) = 1.0 / hp[r];
    for (std::size_t l = 0; l < a.cyclic.size(); ++l) {
        const auto col = static_cast<Eigen::Index>(l + 1);
        m(row, col) = -hp[a.cyclic[l]] / hp[r];
        m(static_cast<Eigen::Index>(a.cyclic[l]), col) = 1.0;
    }
    return m;
}

HamiltonianSystem heavy_top_system(const HeavyTopParams &p)
{
    const Expr th = Expr::variable("theta");
    const Expr pth = Expr::variable("p_theta");
    const Expr pphi = Expr::variable("p_phi");
    const Expr ppsi = Expr::variable("p_psi");
    const Expr c = cos(th);
    const Expr s = sin(th);
    const Expr h = pow(pth, 2) / (2.0 * p.inertia) + pow(pphi - ppsi * c, 2) / (2.0 * p.inertia * pow(s, 2)) +
                   pow(ppsi, 2) / (2.0 * p.inertia3) + p.mgl * c;
    return HamiltonianSystem({"theta", "phi", "psi"}, {"p_theta", "p_phi", "p_psi"}, h);
}

double heavy_top_radicand(const HeavyTopParams &p, double theta)
{
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double k = p.beta2 - p.beta3 * c;
    return 2.0 * p.inertia * (p.energy - p.mgl * c - p.beta3 * p.beta3 / (2.0 * p.inertia3)) - k * k / (s * s);
}

HeavyTopResult solve_heavy_top(const HeavyTopParams &p, std::size_t checks)
{
    if (checks < 2) throw Error(ErrorKind::argument, "need at least two check points");
    double min_rad = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.nodes; ++i) {
        const double th = p.theta_lo + (p.theta_hi - p.theta_lo) * static_cast<double>(i) / static_cast<double>(p.nodes - 1);
        if (std::abs(std::sin(th)) < singularity_guard) {
            throw DomainError("sin(theta)", fmt::format("gimbal singularity at theta = {:.17g}", th));
        }
        const double r = heavy_top_radicand(p, th);
        if (!(r > 0.0)) throw Error(ErrorKind::numeric, fmt::format("radicand {:.6g} is not positive at theta = {:.17g}", r, th));
        min_rad = std::min(min_rad, r);
    }

    const auto sys = heavy_top_system(p);
    const auto ansatz = cyclic_ansatz(sys, {"phi", "psi"}, {p.beta2, p.beta3});
    Reduced1dOptions opts;
    opts.energy = p.energy;
    opts.y_lo = p.theta_lo;
    opts.y_hi = p.theta_hi;
    opts.nodes = p.nodes;
    HeavyTopResult out{solve_cyclic(sys, ansatz, opts), min_rad, 0.0, std::numeric_limits<double>::infinity()};

    const CompiledExpr dv(differentiate(out.solution.w, "theta"), std::vector<std::string>{"theta", "phi", "psi"});
    for (std::size_t i = 0; i < checks; ++i) {
        const double th = p.theta_lo + (p.theta_hi - p.theta_lo) * (static_cast<double>(i) + 0.37) / static_cast<double>(checks);
        const std::array<double, 3> q{th, 0.0, 0.0};
        const double v = dv(q, singularity_guard);
        const double s = std::sin(th);
        const double c = std::cos(th);
        const double k = p.beta2 - p.beta3 * c;
        const double lhs =
            0.5 * (v * v / p.inertia + k * k / (p.inertia * s * s) + p.beta3 * p.beta3 / p.inertia3) + p.mgl * c;
        out.equation_residual = std::max(out.equation_residual, std::abs(lhs - p.energy));
        out.min_abs_det = std::min(out.min_abs_det, std::abs(cyclic_mixed_hessian(sys, out.solution, q).determinant()));
    }
    return out;
}

CompletenessReport check_complete(const GeneratingFunction &s, const HamiltonianSystem &sys, const PointSet &points)
{
    const std::size_t n = s.dim();
    if (n != sys.dim()) throw Error(ErrorKind::dimension, "generating function and system dimensions differ");
    CompletenessReport out;
    out.min_abs_det = std::numeric_limits<double>::infinity();
    for (const auto &pt : points) {
        if (pt.size() != 1 + 2 * n) throw Error(ErrorKind::dimension, "complete-solution points are (t, q, b)");
        const double t = pt[0];
        const std::span<const double> q(pt.data() + 1, n);
        const std::span<const double> b(pt.data() + 1 + n, n);
        PhasePoint z{{q.begin(), q.end()}, to_std(s.grad_q(t, q, b)), std::nullopt};
        if (sys.time_dependent()) z.t = t;
        const double dev = std::abs(s.time_derivative(t, q, b) + sys.energy(z));
        if (dev >= out.hj_max_dev) {
            out.hj_max_dev = dev;
            out.worst_point = pt;
        }
        out.min_abs_det = std::min(out.min_abs_det, std::abs(s.hess_qb(t, q, b).determinant()));
    }
    if (points.empty()) out.min_abs_det = 0.0;
    return out;
}

QuadratureCompleteSolution::QuadratureCompleteSolution(const HamiltonianSystem &sys, double q0, int branch)
    : sys_(sys), root_(sys.hamiltonian(), sys.coords().at(0), sys.momenta().at(0), branch), q0_(q0)
{
    if (sys.dim() != 1) throw Error(ErrorKind::dimension, "quadrature complete solution needs one degree of freedom");
    if (sys.time_dependent()) throw Error(ErrorKind::argument, "quadrature complete solution needs an autonomous Hamiltonian");
}

double QuadratureCompleteSolution::integrate(double q, double energy, int which) const
{
    if (q == q0_) return 0.0;
    auto f = [&](double s) {
        const double p = root_.solve(s, energy, std::nullopt, 1e-14 * (1.0 + std::abs(energy)));
        switch (which) {
        case 0:
            return p;
        case 1:
            return 1.0 / root_.h_p(s, p);
        default: {
            const double d = root_.h_p(s, p);
            return -root_.h_pp(s, p) / (d * d * d);
        }
        }
    };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, q0_, q, 8, 1e-11);
}

double QuadratureCompleteSolution::value(double t, std::span<const double> q, std::span<const double> b) const
{
    return -b[0] * t + integrate(q[0], b[0], 0);
}

Vec QuadratureCompleteSolution::grad_q(double, std::span<const double> q, std::span<const double> b) const
{
    return Vec::Constant(1, root_.solve(q[0], b[0]));
}

Vec QuadratureCompleteSolution::grad_b(double t, std::span<const double> q, std::span<const double> b) const
{
    return Vec::Constant(1, -t + integrate(q[0], b[0], 1));
}

double QuadratureCompleteSolution::time_derivative(double, std::span<const double>, std::span<const double> b) const
{
    return -b[0];
}

Mat QuadratureCompleteSolution::hess_qq(double, std::span<const double> q, std::span<const double> b) const
{
    const double p = root_.solve(q[0], b[0]);
    return Mat::Constant(1, 1, -root_.h_y(q[0], p) / root_.h_p(q[0], p));
}

Mat QuadratureCompleteSolution::hess_qb(double, std::span<const double> q, std::span<const double> b) const
{
    const double p = root_.solve(q[0], b[0]);
    return Mat::Constant(1, 1, 1.0 / root_.h_p(q[0], p));
}

Mat QuadratureCompleteSolution::hess_bb(double, std::span<const double> q, std::span<const double> b) const
{
    return Mat::Constant(1, 1, integrate(q[0], b[0], 2));
}

std::optional<Vec> QuadratureCompleteSolution::initial_guess(double, std::span<const double> q,
                                                             std::span<const double> p) const
{
    return Vec::Constant(1, root_.h(q[0], p[0]));
}

AdditiveSplit additive_split_check(const Expr &s, const std::vector<std::string> &q_names, const QuotientChart &chart,
                                   const MomentumValue &mu, const std::vector<std::string> &y_names,
                                   const PointSet &grid, double tol)
{
    if (q_names.size() != chart.ambient_dim()) throw Error(ErrorKind::dimension, "wrong number of coordinate names");
    if (mu.size() != chart.group_dim()) throw Error(ErrorKind::dimension, "momentum value has wrong dimension");
    const OneForm ds = OneForm::exact(q_names, s);
    const TranslationAction action(chart.generators());
    double worst = 0.0;
    std::vector<double> witness;
    for (const auto &q : grid) {
        const auto j = action.momentum(ds(q));
        for (std::size_t c = 0; c < j.size(); ++c) {
            const double d = std::abs(j[c] - mu[c]) / (1.0 + std::abs(mu[c]));
            if (d > worst) {
                worst = d;
                witness = q;
            }
        }
    }
    if (worst > tol) {
        throw PreconditionError(fmt::format("J∘dS differs from μ by {:.6g}", worst), witness);
    }

    AdditiveSplit out;
    const auto flat = flat_connection_form(chart, q_names, mu);
    out.s_g = *flat.potential();
    out.c = ds.potential_at(std::vector<double>(q_names.size(), 0.0));
    std::map<std::string, Expr, std::less<>> subs;
    const auto q_expr = chart.coords_from_reduced(y_names);
    for (std::size_t i = 0; i < q_names.size(); ++i) subs[q_names[i]] = q_expr[i];
    out.s_m = substitute(s, subs) - out.c;

    const CompiledExpr sm(out.s_m, y_names);
    const CompiledExpr sg(out.s_g, q_names);
    for (const auto &q : grid) {
        const double lhs = ds.potential_at(q);
        const double rhs = sm(chart.reduce_point(q), singularity_guard) + sg(q) + out.c;
        out.residual = std::max(out.residual, std::abs(lhs - rhs));
    }
    return out;
}

} // namespace hjr
