#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "hjr/app.hpp"
#include "hjr/error.hpp"
#include "hjr/hjr.h"
#include "hjr/io.hpp"
#include "hjr/scenario.hpp"
#include "json.hpp"

using namespace hjr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name)
{
    const auto dir = fs::temp_directory_path() / ("hjr_unit_" + std::to_string(::getpid())) / name;
    fs::create_directories(dir);
    return dir;
}

const char *minimal = R"j({
  "name": "osc",
  "coords": ["q"],
  "momenta": ["p"],
  "hamiltonian": "0.5*(p^2 + k*q^2)",
  "parameters": {"k": 1},
  "simulate": {"z0": [1, 0], "t_end": 0.2, "dt": 0.1}
})j";

std::string schema_path(const std::string &text)
{
    try {
        (void)parse_scenario(text);
    } catch (const SchemaError &e) {
        return e.path();
    }
    return "<valid>";
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("empty trajectory gives a header-only file")
{
    CHECK(trajectory_csv(Trajectory{}, {"q1", "q2"}, {"p1", "p2"}) == "t,q1,q2,p1,p2\n");
}

TEST_CASE("three-sample free particle run")
{
    const HamiltonianSystem free({"q"}, {"p"}, parse("p^2/2"));
    const auto traj = flow_reference(free, PhasePoint{{0.0}, {1.0}, std::nullopt}, 0.2, 0.1);
    const auto text = trajectory_csv(traj, {"q"}, {"p"});
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(text.find('\r') == std::string::npos);
    const auto back = parse_trajectory_csv(text);
    REQUIRE(back.trajectory.samples.size() == 3);
    const double q0 = back.trajectory.samples[0].z.q[0];
    const double q1 = back.trajectory.samples[1].z.q[0];
    const double q2 = back.trajectory.samples[2].z.q[0];
    CHECK(q2 - q1 == doctest::Approx(q1 - q0).epsilon(1e-15));
}

TEST_CASE("CSV round trip is bit-exact")
{
    std::mt19937_64 rng(11);
    Trajectory t;
    for (int i = 0; i < 500; ++i) {
        auto bits = [&] {
            double v;
            do v = std::bit_cast<double>(rng());
            while (!std::isfinite(v));
            return v;
        };
        t.samples.push_back({bits(), PhasePoint{{bits(), bits()}, {bits(), bits()}, std::nullopt}});
    }
    const auto back = parse_trajectory_csv(trajectory_csv(t, {"a", "b"}, {"pa", "pb"}));
    REQUIRE(back.trajectory.samples.size() == t.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        CHECK(std::bit_cast<std::uint64_t>(back.trajectory.samples[i].t) == std::bit_cast<std::uint64_t>(t.samples[i].t));
        for (int j = 0; j < 2; ++j) {
            CHECK(std::bit_cast<std::uint64_t>(back.trajectory.samples[i].z.q[j]) ==
                  std::bit_cast<std::uint64_t>(t.samples[i].z.q[j]));
            CHECK(std::bit_cast<std::uint64_t>(back.trajectory.samples[i].z.p[j]) ==
                  std::bit_cast<std::uint64_t>(t.samples[i].z.p[j]));
        }
    }
    CHECK(back.coords == std::vector<std::string>{"a", "b"});
}

TEST_CASE("malformed CSV")
{
    CHECK_THROWS_AS(parse_trajectory_csv("t,q,p\n0,1\n"), Error);
    CHECK_THROWS_AS(parse_trajectory_csv("t,q,p\n0,1,x\n"), Error);
    CHECK_THROWS_AS(parse_trajectory_csv("t,q\n"), Error);
}

TEST_CASE("scenario validation reports JSON pointers")
{
    CHECK(schema_path(minimal) == "<valid>");
    CHECK(schema_path(R"j({"name": "a", "coords": ["q"], "momenta": ["p"]})j") == "/hamiltonian");
    CHECK(schema_path(R"j({"name": "a", "coords": ["q"], "momenta": ["p"], "hamiltonian": "p^2 + z"})j") == "/hamiltonian");
    CHECK(schema_path(R"j({"name": "a", "coords": ["q"], "momenta": ["p"], "hamiltonian": "p^2 +"})j") == "/hamiltonian");
    CHECK(schema_path(R"j({"name": "a", "coords": ["q"], "momenta": ["p", "r"], "hamiltonian": "p^2"})j") == "/momenta");
    CHECK(schema_path(R"j({"name": "a", "coords": ["q"], "momenta": ["q"], "hamiltonian": "q^2"})j") == "/momenta/0");
    CHECK(schema_path(R"j({"name": "a", "coords": ["q"], "momenta": ["p"], "hamiltonian": "p^2", "extra": 1})j") == "/extra");
    CHECK(schema_path(R"j({"name": "a", "coords": ["q1", "q2"], "momenta": ["p1", "p2"], "hamiltonian": "p1^2",
                          "symmetry": {"generators": [[1, 1, 0]]}})j") == "/symmetry/generators/0");
    CHECK(schema_path(R"j({"name": "a", "coords": ["q"], "momenta": ["p"], "hamiltonian": "p^2",
                          "hj": {"energy": 1, "range": [2, 1]}})j") == "/hj/range");
    CHECK(schema_path("{not json") == "");
}

TEST_CASE("parameters are substituted")
{
    const auto sc = parse_scenario(minimal);
    CHECK(eval(sc.hamiltonian, {{"q", 2.0}, {"p", 0.0}}) == 2.0);
    CHECK(sc.seed == 42);
}

TEST_CASE("missing hamiltonian exits with 2 and the schema path")
{
    const auto dir = scratch("schema");
    const auto file = dir / "bad.json";
    std::ofstream(file) << R"j({"name": "bad", "coords": ["q"], "momenta": ["p"]})j";
    const auto r = run_command("reduce", file, RunFlags{});
    CHECK(r.exit_code == exit_schema);
    const auto report = nlohmann::json::parse(r.report);
    CHECK(report["error"]["path"] == "/hamiltonian");
}

TEST_CASE("runs are deterministic and written atomically")
{
    const auto dir = scratch("determinism");
    const auto file = dir / "osc.json";
    std::ofstream(file) << minimal;
    RunFlags f;
    f.out = dir / "out";
    const auto a = run_command("simulate", file, f);
    REQUIRE(a.exit_code == 0);
    const auto first = read_file(dir / "out" / "osc.simulate.csv");
    const auto b = run_command("simulate", file, f);
    CHECK(b.report == a.report);
    CHECK(read_file(dir / "out" / "osc.simulate.csv") == first);
    for (const auto &e : fs::directory_iterator(dir / "out")) CHECK(e.path().string().find(".tmp") == std::string::npos);
}

TEST_CASE("residual failures exit with 1")
{
    const auto dir = scratch("residual");
    const auto file = dir / "wall.json";
    std::ofstream(file) << R"j({"name": "wall", "coords": ["q1", "q2"], "momenta": ["p1", "p2"],
        "hamiltonian": "0.5*(p1^2 + p2^2) + q1^2", "symmetry": {"generators": [[1, 1]]}})j";
    RunFlags f;
    f.out = dir;
    const auto r = run_command("reduce", file, f);
    CHECK(r.exit_code == exit_residual);
}

TEST_CASE("turning points exit with 3")
{
    const auto dir = scratch("numeric");
    const auto file = dir / "cm.json";
    std::ofstream(file) << R"j({"name": "cm", "coords": ["q"], "momenta": ["p"], "hamiltonian": "p^2 + 1/q^2",
        "hj": {"energy": 2, "range": [0.6, 5]}})j";
    RunFlags f;
    f.out = dir;
    CHECK(run_command("solve-hj", file, f).exit_code == exit_numeric);
}

TEST_CASE("reduced system output is itself a valid scenario")
{
    const auto dir = scratch("reduced");
    const auto file = dir / "cm.json";
    std::ofstream(file) << R"j({"name": "cm", "coords": ["q1", "q2"], "momenta": ["p1", "p2"],
        "hamiltonian": "0.5*(p1^2 + p2^2) + 1/(q1 - q2)^2", "symmetry": {"generators": [[1, 1]], "mu": [0]},
        "reduced": {"coords": ["q"], "momenta": ["p"]}})j";
    RunFlags f;
    f.out = dir;
    REQUIRE(run_command("reduce", file, f).exit_code == 0);
    const auto red = load_scenario(dir / "cm.reduced.json");
    CHECK(to_string(red.hamiltonian) == "p^2 + 1/q^2");
}

TEST_CASE("C interface")
{
    hjr_expr *e = nullptr;
    REQUIRE(hjr_expr_parse("x^2 + 1", &e) == HJR_OK);
    hjr_expr *d = nullptr;
    REQUIRE(hjr_expr_diff(e, "x", &d) == HJR_OK);
    const char *names[] = {"x"};
    const double values[] = {3.0};
    double v = 0.0;
    CHECK(hjr_expr_eval(d, names, values, 1, &v) == HJR_OK);
    CHECK(v == 6.0);
    CHECK(hjr_expr_eval(e, nullptr, nullptr, 0, &v) == HJR_ERR_UNBOUND);
    CHECK(std::string(hjr_last_error()).find('x') != std::string::npos);
    char *s = nullptr;
    REQUIRE(hjr_expr_to_string(e, &s) == HJR_OK);
    CHECK(std::string(s) == "x^2 + 1");
    hjr_string_free(s);
    hjr_expr_free(d);
    hjr_expr_free(e);

    hjr_expr *bad = nullptr;
    CHECK(hjr_expr_parse("x +", &bad) == HJR_ERR_PARSE);
    CHECK(bad == nullptr);
    CHECK(hjr_expr_parse(nullptr, &bad) == HJR_ERR_ARGUMENT);

    const char *q[] = {"q"};
    const char *p[] = {"p"};
    hjr_system *sys = nullptr;
    REQUIRE(hjr_system_create(q, p, 1, "p^2/2", &sys) == HJR_OK);
    const double q0 = 0.0;
    const double p0 = 1.0;
    hjr_trajectory *t = nullptr;
    REQUIRE(hjr_system_flow(sys, &q0, &p0, 0.2, 0.1, &t) == HJR_OK);
    CHECK(hjr_trajectory_size(t) == 3);
    const auto path = (scratch("capi") / "free.csv").string();
    REQUIRE(hjr_trajectory_write_csv(t, path.c_str()) == HJR_OK);
    hjr_trajectory *back = nullptr;
    REQUIRE(hjr_trajectory_read_csv(path.c_str(), &back) == HJR_OK);
    double ta = 0, tb = 0, qa = 0, qb = 0;
    hjr_trajectory_sample(t, 2, &ta, &qa, nullptr);
    hjr_trajectory_sample(back, 2, &tb, &qb, nullptr);
    CHECK(ta == tb);
    CHECK(qa == qb);
    CHECK(hjr_trajectory_sample(back, 3, nullptr, nullptr, nullptr) == HJR_ERR_ARGUMENT);
    hjr_trajectory_free(back);
    hjr_trajectory_free(t);
    hjr_system_free(sys);

    int code = -1;
    char *report = nullptr;
    CHECK(hjr_run("frobnicate", "x.json", nullptr, &code, &report) == HJR_OK);
    CHECK(code == 2);
    hjr_string_free(report);
}

}
