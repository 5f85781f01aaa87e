#pragma once

// Randomized self-checks of the expression engine.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hjr/expr.hpp"
#include "hjr/one_form.hpp"
#include "hjr/reduction.hpp"
#include "hjr/symmetry.hpp"

namespace hjr {

// Random tree over `vars` with at most `depth` levels of operators.
Expr random_expression(std::mt19937_64 &rng, const std::vector<std::string> &vars, int depth);

struct DerivativeAudit {
    std::size_t expressions = 0;
    std::size_t checked = 0;
    // Points rejected because the function was undefined nearby or the
    // difference quotients disagreed with each other.
    std::size_t skipped = 0;
    double max_rel_error = 0.0;
    std::string worst_expression;
    std::size_t roundtrip_mismatches = 0;
};

// Compares differentiate() with Richardson-extrapolated central differences
// at one admissible random point per (expression, variable), and checks that
// parse(to_string(e)) evaluates bit-identically.
DerivativeAudit derivative_audit(std::size_t expressions, std::uint64_t seed, int depth = 4);

// S = f(Y·q) + μᵀX·q with f random over the reduced coordinates; dS is a
// closed invariant 1-form with J∘dS ≡ μ.
Expr random_invariant_potential(std::mt19937_64 &rng, const QuotientChart &chart,
                                const std::vector<std::string> &q_names, const MomentumValue &mu, int depth = 3);

struct LemmaSuite {
    std::size_t count = 0;
    double max_invariant_spread = 0.0;
    double min_perturbed_spread = 0.0;
    // Cases where the sampled invariance disagreed with the momentum spread.
    std::size_t inconsistent = 0;
    // Random potentials discarded for being undefined or huge on the grid.
    std::size_t rejected = 0;
};

// `count` random invariant potentials and as many perturbed copies
// S + amplitude·sin(c·qʲ + d), c ∈ [0.5, 2], where qʲ is moved by the first
// generator. Spreads are of J∘dS over `grid` (points in q).
LemmaSuite lemma_suite(const TranslationAction &a, const MomentumValue &mu, const std::vector<std::string> &q_names,
                       const PointSet &grid, std::size_t count, double amplitude, double tol, std::uint64_t seed);

} // namespace hjr
