#include <cmath>

#include "doctest.h"
#include "hjr/error.hpp"
#include "hjr/symmetry.hpp"

using namespace hjr;

namespace {

HamiltonianSystem calogero()
{
    return HamiltonianSystem({"q1", "q2"}, {"p1", "p2"}, parse("0.5*(p1^2 + p2^2) + 1/(q1 - q2)^2"));
}

} // namespace

TEST_SUITE("symmetry") {

TEST_CASE("momentum map is G^T p")
{
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    const std::vector<double> p{0.3, -1.2};
    CHECK(a.momentum(p)[0] == doctest::Approx(-0.9));
    const PhasePoint z{{1.0, 2.0}, {0.3, -1.2}, std::nullopt};
    const auto moved = cotangent_lift(a, std::vector<double>{0.5}, z);
    CHECK(moved.q[0] == 1.5);
    CHECK(moved.q[1] == 2.5);
    CHECK(moved.p == z.p);
}

TEST_CASE("rank-deficient generators are rejected")
{
    CHECK_THROWS_AS(TranslationAction::from_generators(2, {{1.0, 1.0}, {2.0, 2.0}}), Error);
}

TEST_CASE("Calogero-Moser is invariant, a confining wall is not")
{
    const auto sys = calogero();
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    CHECK(is_invariant(a, sys.hamiltonian(), sys, {}));
    const auto bad = check_invariance(a, parse("0.5*(p1^2 + p2^2) + q1^2"), sys, {});
    CHECK_FALSE(bad.invariant);
    CHECK(bad.witness.size() == 5);
    CHECK(bad.max_violation > 1e-3);
}

TEST_CASE("time translation")
{
    const auto a = TranslationAction::time_translation(2);
    CHECK(a.ambient_dim() == 3);
    CHECK(a.generators()(0, 0) == 1.0);
    CHECK(a.generators()(1, 0) == 0.0);
}

TEST_CASE("invariant closed forms have constant momentum")
{
    const auto a = TranslationAction::from_generators(2, {{1.0, 1.0}});
    const PointSet grid = tensor_grid(std::vector<std::pair<double, double>>{{-2, 2}, {-2, 2}}, std::vector<std::size_t>{7, 7});
    const auto inv = check_invariance_lemma(a, OneForm::exact({"q1", "q2"}, parse("sin(q1 - q2) + 0.25*(q1 + q2)")), grid, 1e-10);
    CHECK(inv.j_spread <= 1e-12);
    CHECK(inv.invariant);
    CHECK(inv.consistent);
    const auto pert = check_invariance_lemma(a, OneForm::exact({"q1", "q2"}, parse("sin(q1 - q2) + 0.1*sin(q1)")), grid, 1e-10);
    CHECK(pert.j_spread >= 1e-3);
    CHECK_FALSE(pert.invariant);
    CHECK(pert.consistent);
}

}
