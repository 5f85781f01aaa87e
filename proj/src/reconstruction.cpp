#include "hjr/reconstruction.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "hjr/error.hpp"

namespace hjr {

OneForm lift_solution(const OneForm &reduced, const QuotientChart &chart, const MomentumValue &mu,
                      const std::vector<std::string> &q_names, const std::optional<OneForm> &connection)
{
    if (reduced.dim() != chart.reduced_dim()) throw Error(ErrorKind::dimension, "reduced 1-form has wrong dimension");
    if (q_names.size() != chart.ambient_dim()) throw Error(ErrorKind::dimension, "wrong number of coordinate names");
    const OneForm alpha = connection ? *connection : flat_connection_form(chart, q_names, mu);
    if (alpha.dim() != chart.ambient_dim()) throw Error(ErrorKind::dimension, "connection form has wrong dimension");

    std::map<std::string, Expr, std::less<>> subs;
    const auto y_expr = chart.reduced_from_coords(q_names);
    for (std::size_t j = 0; j < reduced.dim(); ++j) subs[reduced.base()[j]] = y_expr[j];
    std::vector<Expr> pulled;
    for (const auto &c : reduced.components()) pulled.push_back(substitute(c, subs));

    std::vector<Expr> comps;
    for (std::size_t i = 0; i < chart.ambient_dim(); ++i) {
        Expr acc;
        for (std::size_t j = 0; j < reduced.dim(); ++j) {
            const double c = chart.y_block()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
            if (c != 0.0) acc = acc + c * pulled[j];
        }
        comps.push_back(acc + alpha.components()[i]);
    }
    std::optional<Expr> potential;
    if (reduced.potential() && alpha.potential()) potential = substitute(*reduced.potential(), subs) + *alpha.potential();
    return OneForm(q_names, std::move(comps), std::move(potential));
}

std::vector<double> projected_vector_field(const HamiltonianSystem &sys, const OneForm &gamma, std::span<const double> q)
{
    if (gamma.dim() != sys.dim()) throw Error(ErrorKind::dimension, "1-form and system dimensions differ");
    const PhasePoint z{{q.begin(), q.end()}, gamma(q), std::nullopt};
    return sys.velocity(z);
}

Reconstruction reconstruct_trajectory(const HamiltonianSystem &sys, const ReducedSystem &red, const OneForm &reduced_gamma,
                                      const OneForm &gamma, std::span<const double> y0, double t_end, double dt,
                                      std::span<const double> x0)
{
    const auto &chart = red.chart;
    const std::size_t m = chart.reduced_dim();
    const std::size_t k = chart.group_dim();
    if (y0.size() != m || reduced_gamma.dim() != m) throw Error(ErrorKind::dimension, "reduced data has wrong dimension");
    if (!x0.empty() && x0.size() != k) throw Error(ErrorKind::dimension, "initial group point has wrong dimension");
    if (!(dt > 0.0) || t_end < 0.0) throw Error(ErrorKind::argument, "need dt > 0 and t_end >= 0");

    std::vector<std::string> slots = red.names.coords;
    slots.insert(slots.end(), red.names.momenta.begin(), red.names.momenta.end());
    std::vector<CompiledExpr> dh;
    for (const auto &p : red.names.momenta) dh.emplace_back(differentiate(red.hamiltonian, p), slots);

    auto field = [&](double, std::span<const double> y) {
        std::vector<double> x(y.begin(), y.end());
        const auto g = reduced_gamma(y);
        x.insert(x.end(), g.begin(), g.end());
        std::vector<double> out(m);
        for (std::size_t j = 0; j < m; ++j) out[j] = dh[j](x, singularity_guard);
        return out;
    };

    const auto steps = static_cast<std::size_t>(std::max(0.0, std::ceil(t_end / dt - 1e-9)));
    const double h = steps == 0 ? 0.0 : t_end / static_cast<double>(steps);
    OdeSolution c;
    if (steps == 0) {
        c.t = {0.0};
        c.x = {std::vector<double>(y0.begin(), y0.end())};
    } else {
        c = rk4(field, {y0.begin(), y0.end()}, 0.0, t_end, 0.5 * h);
    }
    if (c.x.size() != 2 * steps + 1) throw Error(ErrorKind::numeric, "half-step grid does not align with the step grid");

    std::vector<std::vector<double>> v(c.x.size());
    std::vector<std::vector<double>> d(c.x.size());
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        d[i] = chart.lift_point(c.x[i]);
        const Vec w = to_vec(projected_vector_field(sys, gamma, d[i]));
        v[i] = k == 0 ? std::vector<double>{} : to_std(chart.x_block() * w);
    }

    Reconstruction out;
    out.trajectory.dt = h;
    std::vector<double> g = x0.empty() ? std::vector<double>(k, 0.0) : std::vector<double>(x0.begin(), x0.end());
    for (std::size_t s = 0; s <= steps; ++s) {
        if (s > 0) {
            for (std::size_t a = 0; a < k; ++a) {
                g[a] += h / 6.0 * (v[2 * s - 2][a] + 4.0 * v[2 * s - 1][a] + v[2 * s][a]);
            }
        }
        std::vector<double> q = d[2 * s];
        if (k > 0) {
            const Vec shift = chart.generators() * to_vec(g);
            for (std::size_t i = 0; i < q.size(); ++i) q[i] += shift(static_cast<Eigen::Index>(i));
        }
        PhasePoint z{q, gamma(q), std::nullopt};
        out.trajectory.samples.push_back({c.t[2 * s], std::move(z)});
        out.reduced.push_back(c.x[2 * s]);
        out.group.push_back(g);
    }
    return out;
}

Trajectory projected_flow(const HamiltonianSystem &sys, const OneForm &gamma, std::span<const double> q0, double t_end,
                          double dt)
{
    auto field = [&](double, std::span<const double> q) { return projected_vector_field(sys, gamma, q); };
    const auto sol = rk4(field, {q0.begin(), q0.end()}, 0.0, t_end, dt);
    Trajectory out;
    out.dt = dt;
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        out.samples.push_back({sol.t[i], PhasePoint{sol.x[i], gamma(sol.x[i]), std::nullopt}});
    }
    return out;
}

double sup_distance(const Trajectory &a, const Trajectory &b)
{
    if (a.samples.size() != b.samples.size()) {
        throw Error(ErrorKind::dimension,
                    fmt::format("trajectories have {} and {} samples", a.samples.size(), b.samples.size()));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const auto &za = a.samples[i].z;
        const auto &zb = b.samples[i].z;
        if (za.q.size() != zb.q.size()) throw Error(ErrorKind::dimension, "trajectory dimensions differ");
        for (std::size_t j = 0; j < za.q.size(); ++j) {
            worst = std::max({worst, std::abs(za.q[j] - zb.q[j]), std::abs(za.p[j] - zb.p[j])});
        }
    }
    return worst;
}

double gamma_relatedness(const HamiltonianSystem &sys, const OneForm &gamma, std::span<const double> q0, double t_end,
                         double dt)
{
    const auto base = projected_flow(sys, gamma, q0, t_end, dt);
    const PhasePoint z0{{q0.begin(), q0.end()}, gamma(q0), std::nullopt};
    const auto full = flow_reference(sys, z0, t_end, dt);
    return sup_distance(base, full);
}

} // namespace hjr
