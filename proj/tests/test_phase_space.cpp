#include <cmath>

#include "doctest.h"
#include "hjr/phase_space.hpp"

using namespace hjr;

TEST_SUITE("phase_space") {

TEST_CASE("vector field of the oscillator")
{
    const HamiltonianSystem osc({"q"}, {"p"}, parse("0.5*(p^2 + q^2)"));
    const auto v = osc.vector_field(PhasePoint{{2.0}, {3.0}, std::nullopt});
    CHECK(v[0] == 3.0);
    CHECK(v[1] == -2.0);
    CHECK(osc.energy(PhasePoint{{2.0}, {3.0}, std::nullopt}) == 6.5);
}

TEST_CASE("free flow is exact")
{
    const HamiltonianSystem free({"q1", "q2"}, {"p1", "p2"}, parse("(p1^2 + p2^2)/2"));
    const auto traj = flow_reference(free, PhasePoint{{0.0, 1.0}, {1.0, -0.5}, std::nullopt}, 1.0, 0.1);
    REQUIRE(traj.samples.size() == 11);
    const auto &end = traj.samples.back();
    CHECK(end.t == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(end.z.q[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(end.z.q[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(end.z.p[1] == -0.5);
}

TEST_CASE("last step lands on t_end")
{
    const HamiltonianSystem osc({"q"}, {"p"}, parse("0.5*(p^2 + q^2)"));
    const auto traj = flow_reference(osc, PhasePoint{{1.0}, {0.0}, std::nullopt}, 0.25, 0.1);
    REQUIRE(traj.samples.size() == 4);
    CHECK(traj.samples.back().t == 0.25);
}

TEST_CASE("oscillator energy drift is at least fourth order in dt")
{
    const HamiltonianSystem osc({"q"}, {"p"}, parse("0.5*(p^2 + q^2)"));
    auto drift = [&](double dt) {
        const auto traj = flow_reference(osc, PhasePoint{{1.0}, {0.0}, std::nullopt}, 10.0, dt);
        double d = 0.0;
        for (const auto &s : traj.samples) d = std::max(d, std::abs(osc.energy(s.z) - 0.5));
        return d;
    };
    const double d1 = drift(0.1);
    const double d2 = drift(0.05);
    CHECK(d1 < 1e-4);
    CHECK(d1 / d2 >= 0.85 * 16.0);
    // Exact solution q = cos t.
    const auto traj = flow_reference(osc, PhasePoint{{1.0}, {0.0}, std::nullopt}, 1.0, 1e-3);
    CHECK(traj.samples.back().z.q[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
}

TEST_CASE("time-dependent systems carry t")
{
    const HamiltonianSystem forced({"q"}, {"p"}, parse("p^2/2 - q*t"), "t");
    const auto traj = flow_reference(forced, PhasePoint{{0.0}, {0.0}, 0.0}, 1.0, 0.01);
    // ṗ = t, q̇ = p: q(1) = 1/6.
    CHECK(traj.samples.back().z.q[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("symplectic pairing")
{
    const std::vector<double> u{1.0, 0.0, 0.0, 0.0};
    const std::vector<double> v{0.0, 0.0, 1.0, 0.0};
    CHECK(symplectic_pairing(u, v) == 1.0);
    CHECK(symplectic_pairing(v, u) == -1.0);
}

TEST_CASE("dimension mismatch")
{
    const HamiltonianSystem osc({"q"}, {"p"}, parse("0.5*(p^2 + q^2)"));
    CHECK_THROWS((void)osc.energy(PhasePoint{{1.0, 2.0}, {0.0}, std::nullopt}));
}

}
