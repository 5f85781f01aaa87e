#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hjr/error.hpp"
#include "hjr/hj.hpp"

using namespace hjr;

namespace {

// Antiderivative of sqrt(E - 1/q^2).
double w_closed(double q, double e)
{
    const double u = std::sqrt(e * q * q - 1.0);
    return u - std::atan(u);
}

} // namespace

TEST_SUITE("hj") {

TEST_CASE("reduced Calogero-Moser quadrature")
{
    Reduced1dOptions o;
    o.energy = 2.0;
    o.y_lo = 0.8;
    o.y_hi = 5.0;
    const auto sol = solve_reduced_1d(parse("p^2 + 1/q^2"), "q", "p", o);
    CHECK(sol.node_residual() <= 1e-10);
    for (double q : {0.8, 1.0, 2.0, 3.3, 5.0}) {
        CHECK(sol.momentum(q) == doctest::Approx(std::sqrt(2.0 - 1.0 / (q * q))).epsilon(1e-12));
        CHECK(sol.antiderivative(q) - (w_closed(q, 2.0) - w_closed(0.8, 2.0)) == doctest::Approx(0.0).epsilon(1e-9));
    }
    CHECK(sol.momentum(2.0) == doctest::Approx(1.3228756555322954).epsilon(1e-14));
    CHECK_THROWS_AS((void)sol.antiderivative(6.0), DomainError);
}

TEST_CASE("turning points are numeric errors")
{
    Reduced1dOptions o;
    o.energy = 2.0;
    o.y_lo = 0.6;
    o.y_hi = 5.0;
    try {
        (void)solve_reduced_1d(parse("p^2 + 1/q^2"), "q", "p", o);
        FAIL("expected a turning point");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::numeric);
    }
}

TEST_CASE("negative branch")
{
    const BranchRoot r(parse("p^2 + 1/q^2"), "q", "p", -1);
    CHECK(r.solve(2.0, 2.0) == doctest::Approx(-std::sqrt(1.75)).epsilon(1e-13));
}

TEST_CASE("time extension solves the time-dependent equation")
{
    const HamiltonianSystem osc({"q"}, {"p"}, parse("0.5*(p^2 + q^2)"));
    Reduced1dOptions o;
    o.energy = 0.5;
    o.y_lo = -0.9;
    o.y_hi = 0.9;
    o.nodes = 401;
    const auto sol = solve_reduced_1d(osc.hamiltonian(), "q", "p", o);
    const Expr s = time_extension(sol.antiderivative_expr(Expr::variable("q")), 0.5, "t");
    const PointSet grid{{-0.5}, {0.0}, {0.7}};
    const std::vector<double> times{0.0, 1.0, 2.5};
    CHECK(time_dependent_residual(osc, s, "t", grid, times) <= 1e-10);
}

TEST_CASE("heavy top")
{
    HeavyTopParams p;
    p.beta2 = 0.3;
    p.beta3 = 0.2;
    p.energy = 3.0;
    p.theta_lo = std::numbers::pi / 6;
    p.theta_hi = 5 * std::numbers::pi / 6;
    const auto r = solve_heavy_top(p);
    CHECK(r.min_radicand > 0.0);
    CHECK(r.equation_residual <= 1e-8);
    CHECK(r.min_abs_det >= 1e-6);
    CHECK(r.solution.ansatz.template_text == "0.3*phi + 0.2*psi + V(theta)");
}

TEST_CASE("cyclic ansatz rejects non-cyclic coordinates")
{
    const HamiltonianSystem sys({"x", "y"}, {"px", "py"}, parse("0.5*(px^2 + py^2) + x^2"));
    CHECK_THROWS_AS(cyclic_ansatz(sys, {"x"}, {0.1}), PreconditionError);
    const auto ans = cyclic_ansatz(sys, {"y"}, {0.5});
    CHECK(ans.rest == std::vector<std::size_t>{0});
    CHECK(eval(ans.reduced, {{"x", 1.0}, {"px", 2.0}}) == doctest::Approx(0.5 * (4.0 + 0.25) + 1.0));
}

TEST_CASE("additive split")
{
    const auto a = TranslationAction::from_generators(2, {{0.0, 1.0}});
    const auto chart = build_chart(a);
    const PointSet grid = tensor_grid(std::vector<std::pair<double, double>>{{-2, 2}, {-2, 2}}, std::vector<std::size_t>{6, 6});
    const auto s = additive_split_check(parse("q1^2 + sin(q1) + 0.5*q2 + 3"), {"q1", "q2"}, chart, {0.5}, {"y1"}, grid);
    CHECK(s.residual <= 1e-12);
    CHECK(s.c == 3.0);
    CHECK(eval(s.s_g, {{"q1", 1.0}, {"q2", 4.0}}) == 2.0);
    try {
        (void)additive_split_check(parse("q1^2 + 0.5*q2 + 0.1*sin(q2)"), {"q1", "q2"}, chart, {0.5}, {"y1"}, grid);
        FAIL("expected a precondition failure");
    } catch (const PreconditionError &e) {
        CHECK(e.witness().size() >= 2);
    }
}

TEST_CASE("quadrature complete solution of the oscillator")
{
    const HamiltonianSystem osc({"q"}, {"p"}, parse("0.5*(p^2 + q^2)"));
    const QuadratureCompleteSolution s(osc, 0.0, 1);
    const std::vector<double> q{0.5};
    const std::vector<double> e{0.5};
    // ∂S/∂q = sqrt(2E - q^2).
    CHECK(s.grad_q(0.0, q, e)(0) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
    // ∂S/∂E = -t + asin(q/sqrt(2E)).
    CHECK(s.grad_b(0.3, q, e)(0) == doctest::Approx(-0.3 + std::asin(0.5)).epsilon(1e-10));
    PointSet pts{{0.0, 0.1, 0.5}, {0.5, 0.4, 0.7}};
    const auto c = check_complete(s, osc, pts);
    CHECK(c.hj_max_dev <= 1e-10);
    CHECK(c.min_abs_det >= 1e-6);
}

}
