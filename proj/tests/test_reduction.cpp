#include <cmath>
#include <random>

#include "doctest.h"
#include "hjr/error.hpp"
#include "hjr/reduction.hpp"

using namespace hjr;

namespace {

HamiltonianSystem calogero()
{
    return HamiltonianSystem({"q1", "q2"}, {"p1", "p2"}, parse("0.5*(p1^2 + p2^2) + 1/(q1 - q2)^2"));
}

} // namespace

TEST_SUITE("reduction") {

TEST_CASE("chart of the diagonal translation")
{
    const auto chart = build_chart(TranslationAction::from_generators(2, {{1.0, 1.0}}));
    CHECK(chart.y_block()(0, 0) == 1.0);
    CHECK(chart.y_block()(0, 1) == -1.0);
    CHECK(chart.x_block()(0, 0) == 0.5);
    CHECK(chart.x_block()(0, 1) == 0.5);
    const std::vector<double> q{3.0, 1.0};
    CHECK(chart.reduce_point(q)[0] == 2.0);
    CHECK(chart.group_part(q)[0] == 2.0);
}

TEST_CASE("covector split round trip")
{
    const auto chart = build_chart(TranslationAction::from_generators(3, {{1.0, 2.0, 0.0}}));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> p{u(rng), u(rng), u(rng)};
        const auto [py, px] = chart.split_covector(p);
        const auto back = chart.join_covector(py, px);
        for (int j = 0; j < 3; ++j) CHECK(back[j] == doctest::Approx(p[j]).epsilon(1e-14));
        CHECK(px[0] == doctest::Approx(p[0] + 2.0 * p[1]).epsilon(1e-14));
    }
}

TEST_CASE("Calogero-Moser reduces to p^2 + 1/q^2")
{
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    const auto red = reduce(calogero(), a, {0.0}, ReducedNames{{"q"}, {"p"}});
    CHECK(to_string(red.hamiltonian) == "p^2 + 1/q^2");
    CHECK(red.x_dependence <= 1e-12);
    CHECK(red.magnetic.is_zero());
    const auto shifted = reduce(calogero(), a, {2.0}, ReducedNames{{"q"}, {"p"}});
    CHECK(to_string(shifted.hamiltonian) == "p^2 + 1/q^2 + 1");
}

TEST_CASE("non-invariant Hamiltonian is refused")
{
    const HamiltonianSystem sys({"q1", "q2"}, {"p1", "p2"}, parse("0.5*(p1^2 + p2^2) + q1^2"));
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    CHECK_THROWS_AS(reduce(sys, a, {0.0}, default_reduced_names(1)), PreconditionError);
}

TEST_CASE("synthetic connection gives beta = dy1 ^ dy2")
{
    const auto a = TranslationAction::from_generators(3, {{0.0, 0.0, 1.0}});
    const auto chart = build_chart(a);
    const OneForm alpha({"q1", "q2", "q3"}, {Expr(0.0), parse("q1"), Expr(1.0)});
    const auto beta = magnetic_term(chart, alpha, {"y1", "y2"});
    CHECK(beta.component(0, 1).is_constant(1.0));
    CHECK(beta.component(1, 0).is_constant(-1.0));
    const PointSet grid = tensor_grid(std::vector<std::pair<double, double>>{{-1, 1}, {-1, 1}}, std::vector<std::size_t>{5, 5});
    const OneForm corrected({"y1", "y2"}, {parse("2*y1*y2"), parse("y1^2 + cos(y2) - y1")});
    const OneForm exact({"y1", "y2"}, {parse("2*y1*y2"), parse("y1^2 + cos(y2)")});
    CHECK(magnetic_lagrangian_residual(corrected, beta, grid) <= 1e-12);
    CHECK(magnetic_lagrangian_residual(exact, beta, grid) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_NOTHROW(check_connection_form(chart, alpha, {1.0}, grid, {}));
    CHECK_THROWS_AS(check_connection_form(chart, alpha, {2.0}, grid, {}), PreconditionError);
}

TEST_CASE("projection of a lifted invariant graph")
{
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    const auto chart = build_chart(a);
    const auto gamma = OneForm::exact({"q1", "q2"}, parse("(q1 - q2)^3 + 0.5*(q1 + q2)"));
    const PointSet grid = tensor_grid(std::vector<std::pair<double, double>>{{-1, 1}}, std::vector<std::size_t>{9});
    const auto pr = project_lagrangian(gamma, chart, {1.0}, {"y"}, grid);
    CHECK(pr.report.lagrangian == 0.0);
    const std::vector<double> y{0.5};
    CHECK(pr.reduced(y)[0] == doctest::Approx(3 * 0.25).epsilon(1e-14));
    CHECK_THROWS_AS(project_lagrangian(gamma, chart, {0.0}, {"y"}, grid), PreconditionError);
}

}
