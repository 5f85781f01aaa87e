#include <cmath>

#include "doctest.h"
#include "hjr/hj.hpp"
#include "hjr/reconstruction.hpp"

using namespace hjr;

TEST_SUITE("reconstruction") {

TEST_CASE("lifted Calogero-Moser solution")
{
    const HamiltonianSystem sys({"q1", "q2"}, {"p1", "p2"}, parse("0.5*(p1^2 + p2^2) + 1/(q1 - q2)^2"));
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    const auto red = reduce(sys, a, {0.0}, ReducedNames{{"q"}, {"p"}});
    Reduced1dOptions o;
    o.energy = 2.0;
    o.y_lo = 0.8;
    o.y_hi = 5.0;
    const auto sol = solve_reduced_1d(red.hamiltonian, "q", "p", o);
    const auto gamma = lift_solution(sol.one_form(), red.chart, {0.0}, {"q1", "q2"});

    PointSet grid;
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
            const double y = 1.0 + 4.0 * i / 49.0;
            const double x = -2.0 + 4.0 * j / 49.0;
            grid.push_back(red.chart.lift_point(std::vector<double>{y}, std::vector<double>{x}));
        }
    }
    const auto res = hj_residual(sys, gamma, grid);
    CHECK(res.max_dev <= 1e-8);
    CHECK(res.energy == doctest::Approx(2.0).epsilon(1e-10));
    double j = 0.0;
    for (const auto &q : grid) j = std::max(j, std::abs(a.momentum(gamma(q))[0]));
    CHECK(j <= 1e-12);

    const auto rec = reconstruct_trajectory(sys, red, sol.one_form(), gamma, std::vector<double>{2.0}, 1.0, 1e-3);
    const auto &z0 = rec.trajectory.samples.front().z;
    CHECK(z0.q[0] == doctest::Approx(1.0));
    CHECK(z0.q[1] == doctest::Approx(-1.0));
    const auto direct = projected_flow(sys, gamma, z0.q, 1.0, rec.trajectory.dt);
    CHECK(sup_distance(rec.trajectory, direct) <= 1e-6);
    CHECK(gamma_relatedness(sys, gamma, z0.q, 1.0, 1e-3) <= 1e-6);
    // μ = 0: the centre of mass stays put.
    for (const auto &g : rec.group) CHECK(std::abs(g[0]) <= 1e-12);
}

TEST_CASE("free particle reconstruction is a straight line")
{
    const HamiltonianSystem sys({"q1", "q2"}, {"p1", "p2"}, parse("(p1^2 + p2^2)/2"));
    const auto a = TranslationAction::from_generators(2, {{0.0, 1.0}});
    const auto red = reduce(sys, a, {0.5}, default_reduced_names(1));
    Reduced1dOptions o;
    o.energy = 1.0;
    o.y_lo = -2.0;
    o.y_hi = 2.0;
    o.nodes = 401;
    const auto sol = solve_reduced_1d(red.hamiltonian, "y1", "py1", o);
    const auto gamma = lift_solution(sol.one_form(), red.chart, {0.5}, {"q1", "q2"});
    const auto rec = reconstruct_trajectory(sys, red, sol.one_form(), gamma, std::vector<double>{0.0}, 1.0, 0.01);
    const auto &end = rec.trajectory.samples.back();
    const double p1 = std::sqrt(2.0 - 0.25);
    CHECK(end.t == doctest::Approx(1.0));
    CHECK(end.z.q[0] == doctest::Approx(p1).epsilon(1e-12));
    CHECK(end.z.q[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(end.z.p[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("step is shrunk to divide t_end")
{
    const HamiltonianSystem sys({"q1", "q2"}, {"p1", "p2"}, parse("(p1^2 + p2^2)/2"));
    const auto a = TranslationAction::from_generators(2, {{0.0, 1.0}});
    const auto red = reduce(sys, a, {0.0}, default_reduced_names(1));
    Reduced1dOptions o;
    o.energy = 1.0;
    o.y_lo = -2.0;
    o.y_hi = 2.0;
    o.nodes = 101;
    const auto sol = solve_reduced_1d(red.hamiltonian, "y1", "py1", o);
    const auto gamma = lift_solution(sol.one_form(), red.chart, {0.0}, {"q1", "q2"});
    const auto rec = reconstruct_trajectory(sys, red, sol.one_form(), gamma, std::vector<double>{0.0}, 1.0, 0.3);
    CHECK(rec.trajectory.samples.size() == 5);
    CHECK(rec.trajectory.dt == doctest::Approx(0.25));
}

}
