#include "hjr/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "hjr/error.hpp"

namespace hjr {

namespace {

using Index = Eigen::Index;

void check_conditioning(const Mat &a, const NewtonSettings &settings)
{
    Eigen::JacobiSVD<Mat> svd(a);
    const auto &sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > settings.singular_tol * sv(0))) {
        throw Error(ErrorKind::numeric, fmt::format("singular mixed Hessian (singular values {:.3g} .. {:.3g})", sv(0),
                                                    sv(sv.size() - 1)));
    }
}

double condition_number(const Mat &a)
{
    Eigen::JacobiSVD<Mat> svd(a);
    const auto &sv = svd.singularValues();
    return sv(0) / sv(sv.size() - 1);
}

} // namespace

Vec solve_parameters(const GeneratingFunction &s, double t, std::span<const double> q, std::span<const double> p,
                     std::optional<Vec> guess, const NewtonSettings &settings)
{
    const std::size_t n = s.dim();
    if (q.size() != n || p.size() != n) throw Error(ErrorKind::dimension, "phase point has wrong dimension for the generator");
    Vec b = guess ? *guess : s.initial_guess(t, q, p).value_or(to_vec(p));
    if (static_cast<std::size_t>(b.size()) != n) throw Error(ErrorKind::dimension, "initial guess has wrong dimension");
    const Vec target = to_vec(p);
    const double scale = 1.0 + target.cwiseAbs().maxCoeff();

    auto residual = [&](const Vec &bb) { return Vec(s.grad_q(t, q, std::span<const double>(bb.data(), n)) - target); };
    Vec f = residual(b);
    for (int it = 0; it < settings.max_iter; ++it) {
        if (f.cwiseAbs().maxCoeff() <= settings.tol * scale) return b;
        const Mat a = s.hess_qb(t, q, std::span<const double>(b.data(), n));
        check_conditioning(a, settings);
        const Vec step = a.partialPivLu().solve(f);
        double lambda = 1.0;
        bool moved = false;
        for (int k = 0; k < 30; ++k, lambda *= 0.5) {
            const Vec trial = b - lambda * step;
            try {
                const Vec ft = residual(trial);
                if (!ft.allFinite()) continue;
                b = trial;
                f = ft;
                moved = true;
                break;
            } catch (const Error &e) {
                if (e.kind() != ErrorKind::domain && e.kind() != ErrorKind::numeric) throw;
            }
        }
        if (!moved) throw Error(ErrorKind::numeric, "Newton step left the domain of the generating function");
        if (step.cwiseAbs().maxCoeff() * lambda <= 1e-3 * settings.tol * (1.0 + b.cwiseAbs().maxCoeff()) &&
            f.cwiseAbs().maxCoeff() <= 1e3 * settings.tol * scale) {
            return b;
        }
    }
    if (f.cwiseAbs().maxCoeff() <= settings.tol * scale) return b;
    throw Error(ErrorKind::numeric, fmt::format("Newton did not converge in {} iterations (residual {:.3g})",
                                                settings.max_iter, f.cwiseAbs().maxCoeff()));
}

PhasePoint apply_type2(const GeneratingFunction &s, const PhasePoint &z, double t, std::optional<Vec> guess,
                       const NewtonSettings &settings)
{
    if (s.kind() != GeneratingKind::type2) throw Error(ErrorKind::argument, "apply_type2 needs a type II generator");
    const Vec b = solve_parameters(s, t, z.q, z.p, std::move(guess), settings);
    const std::span<const double> bs(b.data(), s.dim());
    return PhasePoint{to_std(s.grad_b(t, z.q, bs)), to_std(b), z.t};
}

PhasePoint apply_type1(const GeneratingFunction &s, const PhasePoint &z, double t, std::optional<Vec> guess,
                       const NewtonSettings &settings)
{
    if (s.kind() != GeneratingKind::type1) throw Error(ErrorKind::argument, "apply_type1 needs a type I generator");
    const Vec a = solve_parameters(s, t, z.q, z.p, std::move(guess), settings);
    const std::span<const double> as(a.data(), s.dim());
    return PhasePoint{to_std(a), to_std(Vec(-s.grad_b(t, z.q, as))), z.t};
}

Mat map_jacobian(const GeneratingFunction &s, std::span<const double> q, std::span<const double> b, double t)
{
    const auto n = static_cast<Index>(s.dim());
    const Mat a = s.hess_qb(t, q, b);
    const Mat sqq = s.hess_qq(t, q, b);
    const Mat sbb = s.hess_bb(t, q, b);
    const Mat a_inv = a.inverse();
    const Mat db_dq = -a_inv * sqq;
    const Mat db_dp = a_inv;
    Mat m(2 * n, 2 * n);
    if (s.kind() == GeneratingKind::type2) {
        m.block(0, 0, n, n) = a.transpose() + sbb * db_dq;
        m.block(0, n, n, n) = sbb * db_dp;
        m.block(n, 0, n, n) = db_dq;
        m.block(n, n, n, n) = db_dp;
    } else {
        m.block(0, 0, n, n) = db_dq;
        m.block(0, n, n, n) = db_dp;
        m.block(n, 0, n, n) = -a.transpose() - sbb * db_dq;
        m.block(n, n, n, n) = -sbb * db_dp;
    }
    return m;
}

double symplecticity_defect(const Mat &m)
{
    if (m.rows() != m.cols() || m.rows() % 2 != 0) throw Error(ErrorKind::dimension, "Jacobian must be square of even size");
    const Index n = m.rows() / 2;
    Mat omega = Mat::Zero(2 * n, 2 * n);
    omega.block(0, n, n, n) = Mat::Identity(n, n);
    omega.block(n, 0, n, n) = -Mat::Identity(n, n);
    return max_abs(m.transpose() * omega * m - omega);
}

double symplecticity_check(const GeneratingFunction &s, const PhasePoint &z, double t, const NewtonSettings &settings)
{
    const Vec b = solve_parameters(s, t, z.q, z.p, std::nullopt, settings);
    return symplecticity_defect(map_jacobian(s, z.q, std::span<const double>(b.data(), s.dim()), t));
}

ImplicitMap::ImplicitMap(std::shared_ptr<const GeneratingFunction> s, NewtonSettings settings)
    : s_(std::move(s)), settings_(settings)
{
    if (!s_) throw Error(ErrorKind::argument, "implicit map needs a generating function");
}

PhasePoint ImplicitMap::apply(const PhasePoint &z, double t)
{
    const Vec b = solve_parameters(*s_, t, z.q, z.p, warm_, settings_);
    warm_ = b;
    const std::span<const double> bs(b.data(), s_->dim());
    if (s_->kind() == GeneratingKind::type2) return PhasePoint{to_std(s_->grad_b(t, z.q, bs)), to_std(b), z.t};
    return PhasePoint{to_std(b), to_std(Vec(-s_->grad_b(t, z.q, bs))), z.t};
}

std::shared_ptr<SymbolicGeneratingFunction> first_order_scheme(const HamiltonianSystem &sys, double tau, const Expr &extra)
{
    if (sys.time_dependent()) throw Error(ErrorKind::argument, "the first-order scheme needs an autonomous Hamiltonian");
    Expr s;
    for (std::size_t i = 0; i < sys.dim(); ++i) {
        s = s + Expr::variable(sys.coords()[i]) * Expr::variable(sys.momenta()[i]);
    }
    s = s + tau * (sys.hamiltonian() + extra);
    return std::make_shared<SymbolicGeneratingFunction>(GeneratingKind::type2, s, sys.coords(), sys.momenta());
}

InvarianceResult check_diagonal_invariance(const SymbolicGeneratingFunction &s, const TranslationAction &a,
                                           const SamplingOptions &opts)
{
    if (a.ambient_dim() != s.dim()) throw Error(ErrorKind::dimension, "action and generator dimensions differ");
    InvarianceResult out;
    if (a.group_dim() == 0) return out;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> box(-opts.box, opts.box);
    std::uniform_real_distribution<double> element(-opts.group_box, opts.group_box);
    const std::size_t n = s.dim();
    std::size_t valid = 0;
    for (std::size_t k = 0; k < 20 * opts.samples && valid < opts.samples; ++k) {
        std::vector<double> q1(n), q2(n), b(n), g(a.group_dim());
        for (auto *v : {&q1, &q2, &b, &g}) {
            for (auto &x : *v) x = (v == &g) ? element(rng) : box(rng);
        }
        double d1 = 0.0;
        double d2 = 0.0;
        try {
            d1 = s.value(0.0, a.translate(g, q1), b) - s.value(0.0, q1, b);
            d2 = s.value(0.0, a.translate(g, q2), b) - s.value(0.0, q2, b);
        } catch (const DomainError &) {
            continue;
        }
        ++valid;
        const double v = std::abs(d1 - d2) / (1.0 + std::abs(d1));
        if (v > out.max_violation) {
            out.max_violation = v;
            out.witness = q1;
            out.witness.insert(out.witness.end(), q2.begin(), q2.end());
            out.witness.insert(out.witness.end(), b.begin(), b.end());
            out.witness.insert(out.witness.end(), g.begin(), g.end());
        }
    }
    if (valid == 0) throw Error(ErrorKind::numeric, "no admissible samples for the invariance check");
    out.invariant = out.max_violation <= opts.tol;
    return out;
}

MomentumReport momentum_preservation_check(const SymbolicGeneratingFunction &s, const TranslationAction &a,
                                           const HamiltonianSystem &sys, const PhasePoint &z0, std::size_t steps,
                                           const SamplingOptions &opts, bool enforce)
{
    if (s.kind() != GeneratingKind::type2) throw Error(ErrorKind::argument, "momentum check needs a type II generator");
    MomentumReport out;
    out.precondition = check_diagonal_invariance(s, a, opts);
    if (enforce && !out.precondition.invariant) {
        throw PreconditionError(
            fmt::format("generating function is not invariant under the diagonal action (violation {:.3g})",
                        out.precondition.max_violation),
            out.precondition.witness);
    }
    const auto j0 = a.momentum(z0);
    const double e0 = sys.energy(z0);
    NewtonSettings settings;
    Vec warm = to_vec(z0.p);
    PhasePoint z = z0;
    for (std::size_t k = 0; k < steps; ++k) {
        z = apply_type2(s, z, 0.0, warm, settings);
        warm = to_vec(z.p);
        const auto j = a.momentum(z);
        for (std::size_t c = 0; c < j.size(); ++c) out.drift = std::max(out.drift, std::abs(j[c] - j0[c]));
        out.energy_drift = std::max(out.energy_drift, std::abs(sys.energy(z) - e0));
    }
    out.steps = steps;
    out.final_point = z;
    return out;
}

EquilibriumReport transform_to_equilibrium(const GeneratingFunction &s, const HamiltonianSystem &sys, const PhasePoint &z0,
                                           double t_end, double dt, const NewtonSettings &settings)
{
    if (s.kind() != GeneratingKind::type1) throw Error(ErrorKind::argument, "equilibrium transform needs a type I generator");
    if (s.dim() != sys.dim()) throw Error(ErrorKind::dimension, "generator and system dimensions differ");
    const auto traj = flow_reference(sys, z0, t_end, dt);
    EquilibriumReport out;
    std::optional<Vec> warm;
    const std::size_t n = s.dim();
    for (const auto &sample : traj.samples) {
        const double t = sample.t;
        const Vec a = solve_parameters(s, t, sample.z.q, sample.z.p, warm, settings);
        warm = a;
        const Vec b = -s.grad_b(t, sample.z.q, std::span<const double>(a.data(), n));
        out.t.push_back(t);
        out.alpha.push_back(to_std(a));
        out.beta.push_back(to_std(b));
        double da = 0.0;
        double db = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            da = std::max(da, std::abs(a(static_cast<Index>(i)) - out.alpha.front()[i]));
            db = std::max(db, std::abs(b(static_cast<Index>(i)) - out.beta.front()[i]));
        }
        out.max_var = std::max(out.max_var, da + db);
    }
    return out;
}

double flow_lagrangian_momentum_check(const HamiltonianSystem &sys, const TranslationAction &a, std::size_t samples,
                                      double t, double dt, std::uint64_t seed, double box)
{
    if (a.ambient_dim() != sys.dim()) throw Error(ErrorKind::dimension, "action and system dimensions differ");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-box, box);
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        PhasePoint z{std::vector<double>(sys.dim()), std::vector<double>(sys.dim()), std::nullopt};
        for (auto &v : z.q) v = u(rng);
        for (auto &v : z.p) v = u(rng);
        if (t == 0.0) continue;
        const auto traj = flow_reference(sys, z, t, dt);
        const auto j0 = a.momentum(z);
        const auto j1 = a.momentum(traj.samples.back().z);
        for (std::size_t c = 0; c < j0.size(); ++c) worst = std::max(worst, std::abs(j1[c] - j0[c]));
    }
    return worst;
}

namespace {

Expr random_polynomial(std::mt19937_64 &rng, const std::vector<std::string> &vars)
{
    std::uniform_int_distribution<int> terms(2, 5);
    std::uniform_int_distribution<int> degree(2, 3);
    std::uniform_int_distribution<std::size_t> pick(0, vars.size() - 1);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    Expr p;
    const int m = terms(rng);
    for (int k = 0; k < m; ++k) {
        Expr mono = coeff(rng);
        const int d = degree(rng);
        for (int j = 0; j < d; ++j) mono = mono * Expr::variable(vars[pick(rng)]);
        p = p + mono;
    }
    return p;
}

} // namespace

GeneratorAudit random_generator_audit(std::size_t trials, std::uint64_t seed, double max_condition)
{
    GeneratorAudit out;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dims(1, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double eps = 0.3;
    for (std::size_t attempt = 0; attempt < 50 * trials && out.accepted < trials; ++attempt) {
        ++out.trials;
        const auto n = static_cast<std::size_t>(dims(rng));
        std::vector<std::string> qn, bn, all;
        for (std::size_t i = 1; i <= n; ++i) {
            qn.push_back(fmt::format("q{}", i));
            bn.push_back(fmt::format("b{}", i));
        }
        all = qn;
        all.insert(all.end(), bn.begin(), bn.end());
        Expr s;
        for (std::size_t i = 0; i < n; ++i) s = s + Expr::variable(qn[i]) * Expr::variable(bn[i]);
        const SymbolicGeneratingFunction first(GeneratingKind::type2, s + eps * random_polynomial(rng, all), qn, bn);
        const SymbolicGeneratingFunction second(GeneratingKind::type2, s + eps * random_polynomial(rng, all), qn, bn);
        PhasePoint z{std::vector<double>(n), std::vector<double>(n), std::nullopt};
        for (auto &v : z.q) v = u(rng);
        for (auto &v : z.p) v = u(rng);
        try {
            const Vec b1 = solve_parameters(first, 0.0, z.q, z.p);
            const std::span<const double> b1s(b1.data(), n);
            const double c1 = condition_number(first.hess_qb(0.0, z.q, b1s));
            if (!(c1 < max_condition)) continue;
            const Mat m1 = map_jacobian(first, z.q, b1s, 0.0);
            const PhasePoint z1{to_std(first.grad_b(0.0, z.q, b1s)), to_std(b1), std::nullopt};
            const Vec b2 = solve_parameters(second, 0.0, z1.q, z1.p);
            const std::span<const double> b2s(b2.data(), n);
            const double c2 = condition_number(second.hess_qb(0.0, z1.q, b2s));
            if (!(c2 < max_condition)) continue;
            const Mat m2 = map_jacobian(second, z1.q, b2s, 0.0);
            out.max_defect = std::max(out.max_defect, symplecticity_defect(m1));
            out.max_composed_defect = std::max(out.max_composed_defect, symplecticity_defect(m2 * m1));
            out.max_condition = std::max({out.max_condition, c1, c2});
            ++out.accepted;
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::numeric && e.kind() != ErrorKind::domain) throw;
        }
    }
    return out;
}

} // namespace hjr
