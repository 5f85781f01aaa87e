#include <cmath>

#include "doctest.h"
#include "hjr/error.hpp"
#include "hjr/integrators.hpp"

using namespace hjr;

TEST_SUITE("integrators") {

TEST_CASE("oscillator step has the hand-computed Jacobian")
{
    const HamiltonianSystem osc({"q"}, {"p"}, parse("0.5*(p^2 + q^2)"));
    const auto s = first_order_scheme(osc, 0.1);
    const PhasePoint z{{1.0}, {0.0}, std::nullopt};
    const auto z1 = apply_type2(*s, z, 0.0);
    CHECK(z1.q[0] == doctest::Approx(0.99).epsilon(1e-15));
    CHECK(z1.p[0] == doctest::Approx(-0.1).epsilon(1e-15));
    const Vec b = solve_parameters(*s, 0.0, z.q, z.p);
    const Mat m = map_jacobian(*s, z.q, to_std(b), 0.0);
    CHECK(m(0, 0) == doctest::Approx(0.99).epsilon(1e-14));
    CHECK(m(0, 1) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(m(1, 0) == doctest::Approx(-0.1).epsilon(1e-14));
    CHECK(m(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(symplecticity_defect(m) <= 1e-12);
}

TEST_CASE("defect of a non-symplectic matrix")
{
    Mat m = Mat::Identity(2, 2);
    m(0, 0) = 2.0;
    CHECK(symplecticity_defect(m) == doctest::Approx(1.0));
}

TEST_CASE("random generators are symplectic")
{
    const auto au = random_generator_audit(30, 5);
    CHECK(au.accepted == 30);
    CHECK(au.max_defect <= 1e-9);
    CHECK(au.max_composed_defect <= 1e-9);
}

TEST_CASE("invariant scheme preserves momentum, the control does not")
{
    const HamiltonianSystem cm({"q1", "q2"}, {"p1", "p2"}, parse("0.5*(p1^2 + p2^2) + 1/(q1 - q2)^2"));
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    const PhasePoint z0{{0.0, 2.0}, {1.0, -1.0}, std::nullopt};
    const auto good = momentum_preservation_check(*first_order_scheme(cm, 1e-2), a, cm, z0, 300);
    CHECK(good.drift <= 1e-10);
    const auto ctl = first_order_scheme(cm, 1e-2, parse("q1^2"));
    CHECK_THROWS_AS(momentum_preservation_check(*ctl, a, cm, z0, 10), PreconditionError);
    const auto bad = momentum_preservation_check(*ctl, a, cm, z0, 300, {}, false);
    CHECK(bad.drift >= 1e-4);
    CHECK_FALSE(bad.precondition.invariant);
}

TEST_CASE("oscillator energy error stays O(tau^2)")
{
    const HamiltonianSystem osc({"q"}, {"p"}, parse("0.5*(p^2 + q^2)"));
    ImplicitMap step(first_order_scheme(osc, 0.1));
    PhasePoint z{{1.0}, {0.0}, std::nullopt};
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        z = step.apply(z);
        worst = std::max(worst, std::abs(osc.energy(z) - 0.5));
    }
    CHECK(worst / 0.01 < 10.0);
}

TEST_CASE("free particle equilibrium")
{
    const HamiltonianSystem free({"q"}, {"p"}, parse("p^2/2"));
    const SymbolicGeneratingFunction s(GeneratingKind::type1, parse("q*a - t*a^2/2"), {"q"}, {"a"}, "t");
    const auto r = transform_to_equilibrium(s, free, PhasePoint{{2.0}, {3.0}, std::nullopt}, 1.0, 1e-3);
    CHECK(r.max_var <= 1e-8);
    CHECK(r.alpha.back()[0] == doctest::Approx(3.0));
    CHECK(r.beta.back()[0] == doctest::Approx(-2.0));
}

TEST_CASE("flow of an invariant system preserves momentum")
{
    const HamiltonianSystem cm({"q1", "q2"}, {"p1", "p2"}, parse("0.5*(p1^2 + p2^2) + 1/(q1 - q2)^2"));
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    CHECK(flow_lagrangian_momentum_check(cm, a, 5, 0.5, 1e-3) <= 1e-12);
}

TEST_CASE("diagonal invariance of the first-order scheme")
{
    const HamiltonianSystem cm({"q1", "q2"}, {"p1", "p2"}, parse("0.5*(p1^2 + p2^2) + 1/(q1 - q2)^2"));
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    CHECK(check_diagonal_invariance(*first_order_scheme(cm, 0.01), a, {}).invariant);
    CHECK_FALSE(check_diagonal_invariance(*first_order_scheme(cm, 0.01, parse("q1^2")), a, {}).invariant);
}

}
