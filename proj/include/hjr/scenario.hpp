#pragma once

// Scenario files: JSON descriptions of a system, its symmetry and the
// settings of each command. Validated completely before anything runs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hjr/expr.hpp"
#include "hjr/reduction.hpp"
#include "hjr/symmetry.hpp"

namespace hjr {

using Range = std::pair<double, double>;

struct SymmetrySpec {
    // Generator vectors, each of length n.
    std::vector<std::vector<double>> generators;
    MomentumValue mu;
};

struct CyclicSpec {
    std::vector<std::string> coords;
    std::vector<double> values;
};

struct HjSpec {
    double energy = 0.0;
    Range range{0.0, 1.0};
    int branch = 1;
    std::size_t nodes = 2001;
    std::optional<CyclicSpec> cyclic;
};

struct GridSpec {
    std::size_t points = 50;
    std::vector<Range> reduced;
    std::vector<Range> fibre;
};

struct ReconstructSpec {
    std::vector<double> y0;
    std::vector<double> x0;
    double t_end = 1.0;
    double dt = 1e-3;
};

struct SimulateSpec {
    std::vector<double> z0;
    double t_end = 1.0;
    double dt = 1e-3;
};

struct IntegratorSpec {
    double tau = 0.01;
    std::size_t steps = 1000;
    std::vector<double> z0;
    // Extra term added to h in the control scheme.
    std::optional<Expr> control;
    double control_min_drift = 1e-4;
    // Random generators checked for symplecticity; 0 skips the audit.
    std::size_t audit = 0;
};

struct EquilibriumSpec {
    enum class Kind { symbolic, quadrature };
    Kind kind = Kind::symbolic;
    Expr s;
    std::vector<std::string> parameters;
    std::string time = "t";
    double q0 = 0.0;
    int branch = 1;
    std::vector<double> z0;
    double t_end = 1.0;
    double dt = 1e-3;
};

struct MagneticCandidate {
    std::string name;
    std::vector<Expr> components;
    bool expect_lagrangian = true;
};

struct SplitSpec {
    Expr exact;
    Expr perturbed;
};

struct VerifySpec {
    // Empty means every suite the scenario has data for.
    std::vector<std::string> suites;
    std::size_t lemma_count = 50;
    double lemma_amplitude = 0.1;
    double lemma_min_spread = 1e-3;
    std::vector<MagneticCandidate> magnetic;
    std::optional<SplitSpec> split;
    std::size_t audit_expressions = 1000;
    std::size_t flow_samples = 20;
    double flow_t = 1.0;
    double flow_dt = 1e-3;
};

struct Scenario {
    std::string name;
    std::vector<std::string> coords;
    std::vector<std::string> momenta;
    std::string time;
    std::vector<std::pair<std::string, double>> parameters;
    Expr hamiltonian;
    std::uint64_t seed = 42;
    std::optional<SymmetrySpec> symmetry;
    ReducedNames reduced;
    std::optional<std::vector<Expr>> connection;
    std::optional<HjSpec> hj;
    std::optional<GridSpec> grid;
    std::optional<ReconstructSpec> reconstruct;
    std::optional<SimulateSpec> simulate;
    std::optional<IntegratorSpec> integrator;
    std::optional<EquilibriumSpec> equilibrium;
    VerifySpec verify;
};

inline constexpr const char *verify_suites[] = {"invariance", "pipeline", "lemma", "magnetic",
                                                "split",      "audit",    "flow"};

// Throws SchemaError with the JSON pointer of the first problem.
Scenario parse_scenario(const std::string &json_text);
Scenario load_scenario(const std::filesystem::path &path);

} // namespace hjr
