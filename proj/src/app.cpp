#include "hjr/app.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "json.hpp"

#include "hjr/audit.hpp"
#include "hjr/error.hpp"
#include "hjr/hj.hpp"
#include "hjr/integrators.hpp"
#include "hjr/io.hpp"
#include "hjr/reconstruction.hpp"
#include "hjr/reduction.hpp"
#include "hjr/scenario.hpp"

namespace hjr {
namespace {

using json = nlohmann::ordered_json;

// Fixed thresholds that are properties of the method rather than residuals.
constexpr double difference_quotient_tol = 1e-6;
constexpr double nondegeneracy_tol = 1e-6;
constexpr double energy_constant_bound = 10.0;
constexpr double secular_growth_bound = 1.5;

class Report {
public:
    json results = json::object();

    void check(const std::string &name, double value, double threshold, std::string_view relation = "le")
    {
        bool ok = false;
        if (relation == "le") ok = value <= threshold;
        else if (relation == "ge") ok = value >= threshold;
        else if (relation == "gt") ok = value > threshold;
        else if (relation == "lt") ok = value < threshold;
        checks_.push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"relation", relation}, {"passed", ok}});
        passed_ = passed_ && ok;
    }

    // A failed precondition with its witness.
    void violation(const std::string &name, const PreconditionError &e)
    {
        checks_.push_back({{"name", name}, {"value", nullptr}, {"threshold", nullptr}, {"relation", "holds"},
                           {"passed", false}, {"message", e.what()}, {"witness", e.witness()}});
        passed_ = false;
    }

    bool passed() const noexcept { return passed_; }
    const json &checks() const noexcept { return checks_; }

private:
    json checks_ = json::array();
    bool passed_ = true;
};

json matrix_json(const Mat &m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

json two_form_json(const TwoForm &beta)
{
    json out = json::array();
    for (std::size_t i = 0; i < beta.dim(); ++i) {
        for (std::size_t j = i + 1; j < beta.dim(); ++j) {
            out.push_back({{"i", beta.base()[i]}, {"j", beta.base()[j]}, {"value", to_string(beta.component(i, j))}});
        }
    }
    return out;
}

// Keeps at most `keep` evenly spaced entries, always including the last.
std::vector<double> decimate(const std::vector<double> &v, std::size_t keep)
{
    if (v.size() <= keep) return v;
    std::vector<double> out;
    const double stride = static_cast<double>(v.size() - 1) / static_cast<double>(keep - 1);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(v[static_cast<std::size_t>(std::llround(stride * static_cast<double>(i)))]);
    return out;
}

struct Context {
    const Scenario &sc;
    const RunFlags &flags;
    HamiltonianSystem sys;
    SamplingOptions opts;
    std::vector<std::filesystem::path> files;

    Context(const Scenario &s, const RunFlags &f)
        : sc(s), flags(f), sys(s.coords, s.momenta, s.hamiltonian, s.time)
    {
        opts.tol = f.tol;
        opts.seed = f.seed.value_or(s.seed);
    }

    std::uint64_t seed() const { return opts.seed; }

    std::filesystem::path artifact(const std::string &suffix) const { return flags.out / (sc.name + suffix); }

    void write(const std::filesystem::path &path, const std::string &text)
    {
        write_file_atomic(path, text);
        files.push_back(path);
    }

    const SymmetrySpec &symmetry(const char *command) const
    {
        if (!sc.symmetry) throw SchemaError("/symmetry", std::string("required by ") + command);
        return *sc.symmetry;
    }

    TranslationAction action() const { return TranslationAction::from_generators(sc.coords.size(), sc.symmetry->generators); }

    std::optional<OneForm> connection() const
    {
        if (!sc.connection) return std::nullopt;
        return OneForm(sc.coords, *sc.connection);
    }

    std::size_t grid_points(std::size_t fallback) const
    {
        if (flags.grid) return *flags.grid;
        return sc.grid ? sc.grid->points : fallback;
    }

    const GridSpec &grid(const char *command) const
    {
        if (!sc.grid) throw SchemaError("/grid", std::string("required by ") + command);
        return *sc.grid;
    }

    PointSet reduced_grid(std::size_t points) const
    {
        const auto &g = *sc.grid;
        const std::vector<std::size_t> counts(g.reduced.size(), points);
        return tensor_grid(g.reduced, counts);
    }

    // Points in q over the reduced and fibre ranges.
    PointSet q_grid(const QuotientChart &chart, std::size_t points) const
    {
        const auto &g = *sc.grid;
        std::vector<Range> all = g.reduced;
        all.insert(all.end(), g.fibre.begin(), g.fibre.end());
        const std::vector<std::size_t> counts(all.size(), points);
        const auto m = g.reduced.size();
        PointSet out;
        for (const auto &yx : tensor_grid(all, counts)) {
            const std::span<const double> s(yx);
            out.push_back(chart.lift_point(s.first(m), s.subspan(m)));
        }
        return out;
    }

    const HjSpec &hj(const char *command) const
    {
        if (!sc.hj) throw SchemaError("/hj", std::string("required by ") + command);
        return *sc.hj;
    }

    Reduced1dOptions hj_options() const
    {
        const auto &h = *sc.hj;
        Reduced1dOptions o;
        o.energy = h.energy;
        o.y_lo = h.range.first;
        o.y_hi = h.range.second;
        o.branch = h.branch;
        o.nodes = h.nodes;
        return o;
    }

    double t_end(double fallback) const { return flags.t_end.value_or(fallback); }
    double dt(double fallback) const { return flags.dt.value_or(fallback); }
};

PhasePoint phase_point(const std::vector<double> &z, std::size_t n)
{
    return PhasePoint{{z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n)}, {z.begin() + static_cast<std::ptrdiff_t>(n), z.end()}, std::nullopt};
}

json point_json(const PhasePoint &z) { return {{"q", z.q}, {"p", z.p}}; }

// min over the nodes of E − h̃(y, 0): positive means no turning point.
double turning_gap(const Expr &h, const std::string &y, const std::string &p, const Reduced1dOptions &o)
{
    const CompiledExpr f(h, std::vector<std::string>{y, p});
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < o.nodes; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(o.nodes - 1);
        const std::array<double, 2> x{o.y_lo + (o.y_hi - o.y_lo) * t, 0.0};
        gap = std::min(gap, o.energy - f(x, singularity_guard));
    }
    return gap;
}

struct Pipeline {
    ReducedSystem red;
    Reduced1dSolution sol;
    OneForm reduced_gamma;
    OneForm gamma;
};

Pipeline run_pipeline(Context &ctx, Report &report)
{
    const auto &sym = *ctx.sc.symmetry;
    const auto a = ctx.action();
    const auto conn = ctx.connection();
    auto red = reduce(ctx.sys, a, sym.mu, ctx.sc.reduced, ctx.opts, conn);
    report.check("reduced_x_dependence", red.x_dependence, ctx.flags.tol);
    auto sol = solve_reduced_1d(red.hamiltonian, ctx.sc.reduced.coords[0], ctx.sc.reduced.momenta[0], ctx.hj_options());
    report.check("reduced_node_residual", sol.node_residual(), ctx.flags.tol);
    auto rg = sol.one_form();
    auto gamma = lift_solution(rg, red.chart, sym.mu, ctx.sc.coords, conn);
    return Pipeline{std::move(red), std::move(sol), std::move(rg), std::move(gamma)};
}

// HJ residual and momentum of the lifted solution on the q grid.
void lifted_checks(Context &ctx, Report &report, const Pipeline &pl)
{
    const auto a = ctx.action();
    const auto grid = ctx.q_grid(pl.red.chart, ctx.grid_points(50));
    const auto res = hj_residual(ctx.sys, pl.gamma, grid);
    report.results["lift"] = {{"grid_points", grid.size()}, {"energy", res.energy}, {"hj_max_dev", res.max_dev},
                              {"worst_point", res.worst_point}};
    report.check("hj_max_dev", res.max_dev, ctx.flags.tol);
    report.check("hj_energy_error", std::abs(res.energy - ctx.sc.hj->energy), ctx.flags.tol);
    double jerr = 0.0;
    for (const auto &q : grid) {
        const auto j = a.momentum(pl.gamma(q));
        for (std::size_t c = 0; c < j.size(); ++c) jerr = std::max(jerr, std::abs(j[c] - ctx.sc.symmetry->mu[c]));
    }
    report.results["lift"]["momentum_error"] = jerr;
    report.check("momentum_error", jerr, ctx.flags.tol);
}

void cmd_reduce(Context &ctx, Report &report)
{
    const auto &sym = ctx.symmetry("reduce");
    const auto a = ctx.action();
    const auto inv = check_invariance(a, ctx.sc.hamiltonian, ctx.sys, ctx.opts);
    report.results["invariance"] = {{"max_violation", inv.max_violation}, {"witness", inv.witness}};
    report.check("hamiltonian_invariance", inv.max_violation, ctx.flags.tol);
    if (!inv.invariant) return;
    const auto conn = ctx.connection();
    if (conn && ctx.sc.grid) {
        try {
            check_connection_form(build_chart(a), *conn, sym.mu, ctx.reduced_grid(ctx.grid_points(10)), ctx.opts);
            report.check("connection_form", 0.0, 0.0);
        } catch (const PreconditionError &e) {
            report.violation("connection_form", e);
            return;
        }
    }
    const auto red = reduce(ctx.sys, a, sym.mu, ctx.sc.reduced, ctx.opts, conn);
    report.check("reduced_x_dependence", red.x_dependence, ctx.flags.tol);
    const auto text = to_string(red.hamiltonian);
    report.results["reduced"] = {{"coords", red.names.coords},
                                 {"momenta", red.names.momenta},
                                 {"hamiltonian", text},
                                 {"mu", red.mu},
                                 {"magnetic", two_form_json(red.magnetic)},
                                 {"chart", {{"y", matrix_json(red.chart.y_block())}, {"x", matrix_json(red.chart.x_block())}}}};
    json reduced_scenario = {{"name", ctx.sc.name + "_reduced"},
                             {"coords", red.names.coords},
                             {"momenta", red.names.momenta},
                             {"hamiltonian", text}};
    ctx.write(ctx.artifact(".reduced.json"), reduced_scenario.dump(2) + "\n");
}

void cmd_solve_hj(Context &ctx, Report &report)
{
    const auto &h = ctx.hj("solve-hj");
    const auto o = ctx.hj_options();
    if (h.cyclic) {
        const auto ans = cyclic_ansatz(ctx.sys, h.cyclic->coords, h.cyclic->values, ctx.opts);
        const auto y = ctx.sc.coords[ans.rest[0]];
        const auto p = ctx.sc.momenta[ans.rest[0]];
        const double gap = turning_gap(ans.reduced, y, p, o);
        report.results["turning_gap"] = gap;
        report.check("turning_gap", gap, 0.0, "gt");
        if (!(gap > 0.0)) return;
        const auto cs = solve_cyclic(ctx.sys, ans, o);
        report.results["template"] = ans.template_text;
        report.results["reduced_hamiltonian"] = to_string(ans.reduced);
        report.results["node_residual"] = cs.v.node_residual();
        report.check("node_residual", cs.v.node_residual(), ctx.flags.tol);

        // Off-node points of the full space with the cyclic coordinates at 0.
        const std::size_t checks = 401;
        PointSet pts;
        double min_det = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < checks; ++i) {
            std::vector<double> q(ctx.sc.coords.size(), 0.0);
            q[ans.rest[0]] = o.y_lo + (o.y_hi - o.y_lo) * (static_cast<double>(i) + 0.37) / static_cast<double>(checks);
            min_det = std::min(min_det, std::abs(cyclic_mixed_hessian(ctx.sys, cs, q).determinant()));
            pts.push_back(std::move(q));
        }
        const auto res = hj_residual(ctx.sys, OneForm::exact(ctx.sc.coords, cs.w), pts);
        report.results["hj_max_dev"] = res.max_dev;
        report.results["hj_energy"] = res.energy;
        report.results["min_abs_det"] = min_det;
        report.check("hj_max_dev", res.max_dev, ctx.flags.tol);
        report.check("hj_energy_error", std::abs(res.energy - o.energy), ctx.flags.tol);
        report.check("nondegeneracy", min_det, nondegeneracy_tol, "ge");
        const auto path = ctx.artifact(".W.csv");
        cs.v.write_csv(path);
        ctx.files.push_back(path);
        return;
    }
    Expr h1 = ctx.sc.hamiltonian;
    std::string y = ctx.sc.coords[0];
    std::string p = ctx.sc.momenta[0];
    if (ctx.sc.symmetry) {
        const auto red = reduce(ctx.sys, ctx.action(), ctx.sc.symmetry->mu, ctx.sc.reduced, ctx.opts, ctx.connection());
        report.check("reduced_x_dependence", red.x_dependence, ctx.flags.tol);
        h1 = red.hamiltonian;
        y = ctx.sc.reduced.coords[0];
        p = ctx.sc.reduced.momenta[0];
    }
    report.results["hamiltonian"] = to_string(h1);
    const double gap = turning_gap(h1, y, p, o);
    report.results["turning_gap"] = gap;
    const auto sol = solve_reduced_1d(h1, y, p, o);
    report.results["energy"] = o.energy;
    report.results["range"] = {o.y_lo, o.y_hi};
    report.results["nodes"] = o.nodes;
    report.results["node_residual"] = sol.node_residual();
    report.results["W_end"] = sol.values().back();
    report.check("node_residual", sol.node_residual(), ctx.flags.tol);
    const auto path = ctx.artifact(".W.csv");
    sol.write_csv(path);
    ctx.files.push_back(path);
}

void cmd_reconstruct(Context &ctx, Report &report)
{
    ctx.symmetry("reconstruct");
    ctx.hj("reconstruct");
    ctx.grid("reconstruct");
    if (!ctx.sc.reconstruct) throw SchemaError("/reconstruct", "required by reconstruct");
    if (ctx.sc.hj->cyclic) throw SchemaError("/hj/cyclic", "reconstruct needs a reduced solution");
    const auto pl = run_pipeline(ctx, report);
    lifted_checks(ctx, report, pl);

    const auto &r = *ctx.sc.reconstruct;
    const double t_end = ctx.t_end(r.t_end);
    const double dt = ctx.dt(r.dt);
    const auto rec = reconstruct_trajectory(ctx.sys, pl.red, pl.reduced_gamma, pl.gamma, r.y0, t_end, dt, r.x0);
    const auto &first = rec.trajectory.samples.front().z;
    const auto direct = projected_flow(ctx.sys, pl.gamma, first.q, t_end, rec.trajectory.dt);
    const double sup = sup_distance(rec.trajectory, direct);
    const double rel = gamma_relatedness(ctx.sys, pl.gamma, first.q, t_end, rec.trajectory.dt);
    report.results["trajectory"] = {{"samples", rec.trajectory.samples.size()},
                                    {"dt", rec.trajectory.dt},
                                    {"start", point_json(first)},
                                    {"end", point_json(rec.trajectory.samples.back().z)},
                                    {"group_end", rec.group.back()},
                                    {"sup_distance", sup},
                                    {"gamma_relatedness", rel}};
    report.check("reconstruction_vs_flow", sup, ctx.flags.tol);
    report.check("gamma_relatedness", rel, ctx.flags.tol);
    const auto path = ctx.artifact(".reconstruct.csv");
    ctx.write(path, trajectory_csv(rec.trajectory, ctx.sc.coords, ctx.sc.momenta));
}

void cmd_simulate(Context &ctx, Report &report)
{
    if (!ctx.sc.simulate) throw SchemaError("/simulate", "required by simulate");
    const auto &s = *ctx.sc.simulate;
    auto z0 = phase_point(s.z0, ctx.sc.coords.size());
    if (ctx.sys.time_dependent()) z0.t = 0.0;
    const auto traj = flow_reference(ctx.sys, z0, ctx.t_end(s.t_end), ctx.dt(s.dt));
    report.results["samples"] = traj.samples.size();
    report.results["end"] = point_json(traj.samples.back().z);
    if (!ctx.sys.time_dependent()) {
        const double e0 = ctx.sys.energy(z0);
        double drift = 0.0;
        for (const auto &smp : traj.samples) drift = std::max(drift, std::abs(ctx.sys.energy(smp.z) - e0));
        report.results["energy_drift"] = drift;
    }
    if (ctx.sc.symmetry) {
        const auto a = ctx.action();
        const auto j0 = a.momentum(z0);
        double drift = 0.0;
        for (const auto &smp : traj.samples) {
            const auto j = a.momentum(smp.z);
            for (std::size_t c = 0; c < j.size(); ++c) drift = std::max(drift, std::abs(j[c] - j0[c]));
        }
        report.results["momentum_drift"] = drift;
    }
    ctx.write(ctx.artifact(".simulate.csv"), trajectory_csv(traj, ctx.sc.coords, ctx.sc.momenta));
}

// Random finite doubles across the exponent range plus a few edge cases.
Trajectory random_table(std::size_t n, std::size_t rows, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mant(0.5, 1.0);
    std::uniform_int_distribution<int> expo(-1070, 1023);
    std::bernoulli_distribution neg(0.5);
    const double edge[] = {0.0, -0.0, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
                           std::numeric_limits<double>::min(), 0.1, -1.0 / 3.0};
    std::size_t e = 0;
    auto next = [&] {
        if (e < std::size(edge)) return edge[e++];
        const double v = std::ldexp(mant(rng), expo(rng));
        return neg(rng) ? -v : v;
    };
    Trajectory t;
    for (std::size_t r = 0; r < rows; ++r) {
        TrajectorySample s;
        s.t = next();
        for (std::size_t i = 0; i < n; ++i) s.z.q.push_back(next());
        for (std::size_t i = 0; i < n; ++i) s.z.p.push_back(next());
        t.samples.push_back(std::move(s));
    }
    return t;
}

std::size_t csv_mismatches(const Trajectory &a, const Trajectory &b)
{
    auto same = [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); };
    if (a.samples.size() != b.samples.size()) return std::max(a.samples.size(), b.samples.size());
    std::size_t bad = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const auto &x = a.samples[i];
        const auto &y = b.samples[i];
        bool ok = same(x.t, y.t) && x.z.q.size() == y.z.q.size() && x.z.p.size() == y.z.p.size();
        for (std::size_t j = 0; ok && j < x.z.q.size(); ++j) ok = same(x.z.q[j], y.z.q[j]) && same(x.z.p[j], y.z.p[j]);
        if (!ok) ++bad;
    }
    return bad;
}

bool wants(const Scenario &sc, std::string_view suite, bool applicable)
{
    if (sc.verify.suites.empty()) return applicable;
    const bool listed = std::find(sc.verify.suites.begin(), sc.verify.suites.end(), suite) != sc.verify.suites.end();
    if (listed && !applicable) throw SchemaError("/verify/suites", "suite '" + std::string(suite) + "' lacks the data it needs");
    return listed;
}

void cmd_verify(Context &ctx, Report &report)
{
    const auto &sc = ctx.sc;
    const bool sym = sc.symmetry.has_value();
    const bool reduced_hj = sym && sc.hj && !sc.hj->cyclic && sc.grid;
    std::vector<std::string> ran;

    if (wants(sc, "invariance", sym)) {
        ran.emplace_back("invariance");
        const auto inv = check_invariance(ctx.action(), sc.hamiltonian, ctx.sys, ctx.opts);
        report.results["invariance"] = {{"max_violation", inv.max_violation}, {"witness", inv.witness}};
        report.check("hamiltonian_invariance", inv.max_violation, ctx.flags.tol);
    }
    if (wants(sc, "pipeline", reduced_hj)) {
        ran.emplace_back("pipeline");
        const auto pl = run_pipeline(ctx, report);
        lifted_checks(ctx, report, pl);
        try {
            const auto pr = project_lagrangian(pl.gamma, pl.red.chart, sc.symmetry->mu, sc.reduced.coords,
                                               ctx.reduced_grid(ctx.grid_points(50)), ctx.opts, ctx.connection(),
                                               pl.red.magnetic);
            report.results["projection"] = {{"closedness", pr.report.closedness},
                                            {"invariance", pr.report.invariance},
                                            {"momentum", pr.report.momentum},
                                            {"lagrangian", pr.report.lagrangian}};
            report.check("projection_lagrangian", pr.report.lagrangian, ctx.flags.tol);
        } catch (const PreconditionError &e) {
            report.violation("projection_preconditions", e);
        }
    }
    if (wants(sc, "lemma", sym && sc.grid)) {
        ran.emplace_back("lemma");
        const auto a = ctx.action();
        const auto grid = ctx.q_grid(build_chart(a), std::min<std::size_t>(ctx.grid_points(12), 12));
        const auto ls = lemma_suite(a, sc.symmetry->mu, sc.coords, grid, sc.verify.lemma_count,
                                    sc.verify.lemma_amplitude, ctx.flags.tol, ctx.seed());
        report.results["lemma"] = {{"count", ls.count},
                                   {"amplitude", sc.verify.lemma_amplitude},
                                   {"max_invariant_spread", ls.max_invariant_spread},
                                   {"min_perturbed_spread", ls.min_perturbed_spread},
                                   {"inconsistent", ls.inconsistent},
                                   {"rejected", ls.rejected}};
        report.check("lemma_invariant_spread", ls.max_invariant_spread, ctx.flags.tol);
        report.check("lemma_perturbed_spread", ls.min_perturbed_spread, sc.verify.lemma_min_spread, "ge");
        report.check("lemma_inconsistent", static_cast<double>(ls.inconsistent), 0.0);
    }
    if (wants(sc, "magnetic", sym && sc.grid && !sc.verify.magnetic.empty())) {
        ran.emplace_back("magnetic");
        const auto chart = build_chart(ctx.action());
        std::optional<TwoForm> beta;
        if (const auto conn = ctx.connection()) beta = magnetic_term(chart, *conn, sc.reduced.coords);
        report.results["magnetic"] = {{"beta", beta ? two_form_json(*beta) : json::array()}, {"candidates", json::array()}};
        const auto grid = ctx.reduced_grid(ctx.grid_points(10));
        for (const auto &c : sc.verify.magnetic) {
            const double r = magnetic_lagrangian_residual(OneForm(sc.reduced.coords, c.components), beta, grid);
            report.results["magnetic"]["candidates"].push_back(
                {{"name", c.name}, {"residual", r}, {"expect", c.expect_lagrangian ? "lagrangian" : "not_lagrangian"}});
            report.check("magnetic_" + c.name, r, ctx.flags.tol, c.expect_lagrangian ? "le" : "gt");
        }
    }
    if (wants(sc, "split", sym && sc.grid && sc.verify.split)) {
        ran.emplace_back("split");
        const auto chart = build_chart(ctx.action());
        const auto grid = ctx.q_grid(chart, ctx.grid_points(10));
        const auto &sp = *sc.verify.split;
        const auto ok = additive_split_check(sp.exact, sc.coords, chart, sc.symmetry->mu, sc.reduced.coords, grid, ctx.flags.tol);
        report.results["split"] = {{"s_m", to_string(ok.s_m)}, {"s_g", to_string(ok.s_g)}, {"c", ok.c}, {"residual", ok.residual}};
        report.check("split_residual", ok.residual, ctx.flags.tol);
        try {
            const auto bad = additive_split_check(sp.perturbed, sc.coords, chart, sc.symmetry->mu, sc.reduced.coords, grid,
                                                  ctx.flags.tol);
            report.results["split"]["perturbed"] = {{"rejected", false}, {"residual", bad.residual}};
            report.check("split_perturbed_rejected", 0.0, 1.0, "ge");
        } catch (const PreconditionError &e) {
            report.results["split"]["perturbed"] = {{"rejected", true}, {"message", e.what()}, {"witness", e.witness()}};
            report.check("split_perturbed_rejected", 1.0, 1.0, "ge");
        }
    }
    if (wants(sc, "audit", true)) {
        ran.emplace_back("audit");
        const auto au = derivative_audit(sc.verify.audit_expressions, ctx.seed());
        const auto table = random_table(sc.coords.size(), 200, ctx.seed());
        const auto back = parse_trajectory_csv(trajectory_csv(table, sc.coords, sc.momenta));
        const auto bad = csv_mismatches(table, back.trajectory);
        report.results["audit"] = {{"expressions", au.expressions},  {"points", au.checked},
                                   {"skipped", au.skipped},          {"max_rel_error", au.max_rel_error},
                                   {"worst", au.worst_expression},   {"print_parse_mismatches", au.roundtrip_mismatches},
                                   {"csv_rows", table.samples.size()}, {"csv_mismatches", bad}};
        report.check("derivative_vs_differences", au.max_rel_error, difference_quotient_tol);
        report.check("print_parse_mismatches", static_cast<double>(au.roundtrip_mismatches), 0.0);
        report.check("csv_roundtrip_mismatches", static_cast<double>(bad), 0.0);
    }
    if (wants(sc, "flow", sym)) {
        ran.emplace_back("flow");
        const double d = flow_lagrangian_momentum_check(ctx.sys, ctx.action(), sc.verify.flow_samples,
                                                        ctx.t_end(sc.verify.flow_t), ctx.dt(sc.verify.flow_dt), ctx.seed());
        report.results["flow"] = {{"max_momentum_change", d}};
        report.check("flow_momentum", d, ctx.flags.tol);
    }
    report.results["suites"] = ran;
}

void cmd_integrate(Context &ctx, Report &report)
{
    if (!ctx.sc.integrator) throw SchemaError("/integrator", "required by integrate");
    const auto &is = *ctx.sc.integrator;
    const auto n = ctx.sc.coords.size();
    const auto z0 = phase_point(is.z0, n);
    const auto scheme = first_order_scheme(ctx.sys, is.tau);
    report.results["settings"] = {{"tau", is.tau}, {"steps", is.steps}, {"S", to_string(scheme->expr())}};

    const Vec b = solve_parameters(*scheme, 0.0, z0.q, z0.p);
    const Mat m = map_jacobian(*scheme, z0.q, to_std(b), 0.0);
    const double defect = symplecticity_defect(m);
    report.results["first_step"] = {{"image", point_json(apply_type2(*scheme, z0, 0.0))}, {"jacobian", matrix_json(m)},
                                    {"defect", defect}};
    report.check("symplecticity_defect", defect, ctx.flags.tol);

    ImplicitMap step(scheme);
    Trajectory traj;
    traj.dt = is.tau;
    traj.samples.push_back({0.0, z0});
    const double e0 = ctx.sys.energy(z0);
    std::vector<double> energy_drift;
    PhasePoint z = z0;
    for (std::size_t k = 1; k <= is.steps; ++k) {
        z = step.apply(z);
        traj.samples.push_back({static_cast<double>(k) * is.tau, z});
        energy_drift.push_back(std::abs(ctx.sys.energy(z) - e0));
    }
    const auto half = energy_drift.begin() + static_cast<std::ptrdiff_t>(energy_drift.size() / 2);
    const double first = half == energy_drift.begin() ? 0.0 : *std::max_element(energy_drift.begin(), half);
    const double second = *std::max_element(half, energy_drift.end());
    const double drift = std::max(first, second);
    const double constant = drift / (is.tau * is.tau);
    report.results["energy"] = {{"max_drift", drift},
                                {"constant", constant},
                                {"first_half", first},
                                {"second_half", second},
                                {"drift", decimate(energy_drift, 101)}};
    if (ctx.sc.symmetry) {
        const auto a = ctx.action();
        try {
            const auto mr = momentum_preservation_check(*scheme, a, ctx.sys, z0, is.steps, ctx.opts);
            report.results["momentum"] = {{"drift", mr.drift}, {"precondition_violation", mr.precondition.max_violation}};
            report.check("momentum_drift", mr.drift, ctx.flags.tol);
        } catch (const PreconditionError &e) {
            report.violation("scheme_invariance", e);
        }
        if (is.control) {
            const auto ctl = first_order_scheme(ctx.sys, is.tau, *is.control);
            const auto cr = momentum_preservation_check(*ctl, a, ctx.sys, z0, is.steps, ctx.opts, false);
            report.results["control"] = {{"extra", to_string(*is.control)},
                                         {"invariant", cr.precondition.invariant},
                                         {"precondition_violation", cr.precondition.max_violation},
                                         {"drift", cr.drift}};
            report.check("control_drift", cr.drift, is.control_min_drift, "ge");
        }
    } else {
        // Bounded energy error without secular growth.
        report.check("energy_constant", constant, energy_constant_bound, "lt");
        if (first > 0.0) report.check("energy_growth", second / first, secular_growth_bound);
    }
    if (is.audit > 0) {
        const auto au = random_generator_audit(is.audit, ctx.seed());
        report.results["generator_audit"] = {{"trials", au.trials},
                                             {"accepted", au.accepted},
                                             {"max_defect", au.max_defect},
                                             {"max_composed_defect", au.max_composed_defect},
                                             {"max_condition", au.max_condition}};
        report.check("audit_accepted", static_cast<double>(au.accepted), static_cast<double>(is.audit), "ge");
        report.check("audit_defect", au.max_defect, ctx.flags.tol);
        report.check("audit_composed_defect", au.max_composed_defect, ctx.flags.tol);
    }
    ctx.write(ctx.artifact(".integrate.csv"), trajectory_csv(traj, ctx.sc.coords, ctx.sc.momenta));
}

void cmd_equilibrium(Context &ctx, Report &report)
{
    if (!ctx.sc.equilibrium) throw SchemaError("/equilibrium", "required by equilibrium");
    const auto &es = *ctx.sc.equilibrium;
    const auto n = ctx.sc.coords.size();
    std::unique_ptr<GeneratingFunction> gf;
    std::vector<std::string> alpha_names;
    if (es.kind == EquilibriumSpec::Kind::symbolic) {
        gf = std::make_unique<SymbolicGeneratingFunction>(GeneratingKind::type1, es.s, ctx.sc.coords, es.parameters, es.time);
        alpha_names = es.parameters;
        report.results["S"] = to_string(es.s);
    } else {
        gf = std::make_unique<QuadratureCompleteSolution>(ctx.sys, es.q0, es.branch);
        alpha_names = {"E"};
        report.results["S"] = "quadrature";
    }
    const auto z0 = phase_point(es.z0, n);
    const double t_end = ctx.t_end(es.t_end);
    const double dt = ctx.dt(es.dt);
    const auto eq = transform_to_equilibrium(*gf, ctx.sys, z0, t_end, dt);
    report.results["alpha"] = {{"start", eq.alpha.front()}, {"end", eq.alpha.back()}};
    report.results["beta"] = {{"start", eq.beta.front()}, {"end", eq.beta.back()}};
    report.results["max_variation"] = eq.max_var;
    report.check("parameter_variation", eq.max_var, ctx.flags.tol);

    // Completeness along the same run: (t, q(t), α).
    const auto flow = flow_reference(ctx.sys, z0, t_end, dt);
    PointSet pts;
    const std::size_t stride = std::max<std::size_t>(1, flow.samples.size() / 50);
    for (std::size_t i = 0; i < flow.samples.size() && i < eq.alpha.size(); i += stride) {
        std::vector<double> pt{flow.samples[i].t};
        pt.insert(pt.end(), flow.samples[i].z.q.begin(), flow.samples[i].z.q.end());
        pt.insert(pt.end(), eq.alpha[i].begin(), eq.alpha[i].end());
        pts.push_back(std::move(pt));
    }
    const auto cr = check_complete(*gf, ctx.sys, pts);
    report.results["complete"] = {{"hj_max_dev", cr.hj_max_dev}, {"min_abs_det", cr.min_abs_det}, {"worst_point", cr.worst_point}};
    report.check("complete_hj", cr.hj_max_dev, ctx.flags.tol);
    report.check("complete_nondegeneracy", cr.min_abs_det, nondegeneracy_tol, "ge");

    Trajectory table;
    table.dt = dt;
    for (std::size_t i = 0; i < eq.t.size(); ++i) table.samples.push_back({eq.t[i], PhasePoint{eq.alpha[i], eq.beta[i], std::nullopt}});
    std::vector<std::string> beta_names;
    for (const auto &a : alpha_names) beta_names.push_back("beta_" + a);
    ctx.write(ctx.artifact(".equilibrium.csv"), trajectory_csv(table, alpha_names, beta_names));
}

const char *kind_name(ErrorKind k)
{
    switch (k) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::parse: return "parse";
    case ErrorKind::unbound_variable: return "unbound_variable";
    case ErrorKind::domain: return "domain";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::schema: return "schema";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

int exit_for(ErrorKind k)
{
    switch (k) {
    case ErrorKind::schema:
    case ErrorKind::argument: return exit_schema;
    case ErrorKind::precondition: return exit_residual;
    default: return exit_numeric;
    }
}

} // namespace

RunResult run_command(const std::string &command, const std::filesystem::path &scenario_path, const RunFlags &flags)
{
    RunResult out;
    json report = {{"command", command}, {"scenario", scenario_path.string()}};
    std::optional<Scenario> sc;
    auto fail = [&](int code, const std::string &kind, const std::string &msg, json extra = json::object()) {
        out.exit_code = code;
        out.message = msg;
        report["passed"] = false;
        json err = {{"kind", kind}, {"message", msg}};
        err.update(extra);
        report["error"] = err;
    };
    try {
        if (std::find_if(std::begin(commands), std::end(commands), [&](const char *c) { return command == c; }) ==
            std::end(commands))
            throw Error(ErrorKind::argument, "unknown command '" + command + "'");
        if (!(flags.tol > 0.0)) throw Error(ErrorKind::argument, "--tol must be positive");
        if (flags.grid && *flags.grid < 2) throw Error(ErrorKind::argument, "--grid must be at least 2");
        if (flags.dt && !(*flags.dt > 0.0)) throw Error(ErrorKind::argument, "--dt must be positive");
        if (flags.t_end && !(*flags.t_end > 0.0)) throw Error(ErrorKind::argument, "--t-end must be positive");
        std::string text;
        try {
            text = read_file(scenario_path);
        } catch (const Error &e) {
            throw Error(ErrorKind::argument, e.what());
        }
        sc = parse_scenario(text);
        report["name"] = sc->name;
        report["tol"] = flags.tol;
        report["seed"] = flags.seed.value_or(sc->seed);
        Context ctx(*sc, flags);
        Report r;
        if (command == "reduce") cmd_reduce(ctx, r);
        else if (command == "solve-hj") cmd_solve_hj(ctx, r);
        else if (command == "reconstruct") cmd_reconstruct(ctx, r);
        else if (command == "simulate") cmd_simulate(ctx, r);
        else if (command == "verify") cmd_verify(ctx, r);
        else if (command == "integrate") cmd_integrate(ctx, r);
        else cmd_equilibrium(ctx, r);
        report["passed"] = r.passed();
        report["checks"] = r.checks();
        report["results"] = r.results;
        out.files = ctx.files;
        if (!r.passed()) {
            std::string names;
            for (const auto &c : r.checks()) {
                if (!c["passed"].get<bool>()) names += (names.empty() ? "" : ", ") + c["name"].get<std::string>();
            }
            out.exit_code = exit_residual;
            out.message = "checks failed: " + names;
        }
    } catch (const SchemaError &e) {
        fail(exit_schema, "schema", e.what(), {{"path", e.path()}});
    } catch (const PreconditionError &e) {
        fail(exit_residual, "precondition", e.what(), {{"witness", e.witness()}});
    } catch (const DomainError &e) {
        fail(exit_numeric, "domain", e.what(), {{"subexpression", e.subexpression()}});
    } catch (const Error &e) {
        fail(exit_for(e.kind()), kind_name(e.kind()), e.what());
    } catch (const std::exception &e) {
        fail(exit_numeric, "internal", e.what());
    }
    out.report = report.dump(2) + "\n";
    if (sc) {
        const auto path = flags.out / (sc->name + "." + command + ".json");
        try {
            write_file_atomic(path, out.report);
            out.files.push_back(path);
        } catch (const std::exception &e) {
            out.exit_code = exit_numeric;
            out.message = e.what();
        }
    }
    return out;
}

} // namespace hjr
