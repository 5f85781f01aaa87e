#pragma once

// Abelian translation actions q ↦ q + G·g on Rⁿ, their cotangent lifts and
// momentum maps, and sampled invariance checks.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hjr/expr.hpp"
#include "hjr/linalg.hpp"
#include "hjr/one_form.hpp"
#include "hjr/phase_space.hpp"

namespace hjr {

// μ ∈ 𝔤* ≅ Rᵏ. The group is abelian so every value is a coadjoint fixed point.
using MomentumValue = std::vector<double>;

class TranslationAction {
public:
    // Columns of `generators` are the directions; rank must equal the column
    // count so that the action is free.
    explicit TranslationAction(Mat generators);

    static TranslationAction from_generators(std::size_t n, const std::vector<std::vector<double>> &generators);
    // R acting on (t, q¹..qⁿ) by t ↦ t + r; its momentum map is the conjugate e.
    static TranslationAction time_translation(std::size_t n);

    std::size_t ambient_dim() const noexcept { return static_cast<std::size_t>(g_.rows()); }
    std::size_t group_dim() const noexcept { return static_cast<std::size_t>(g_.cols()); }
    const Mat &generators() const noexcept { return g_; }

    std::vector<double> translate(std::span<const double> g, std::span<const double> q) const;
    // (q, p) ↦ (q + G·g, p).
    PhasePoint lift(std::span<const double> g, const PhasePoint &z) const;
    // μ = Gᵀ·p.
    MomentumValue momentum(std::span<const double> p) const;
    MomentumValue momentum(const PhasePoint &z) const { return momentum(z.p); }

private:
    void check_group_element(std::span<const double> g) const;

    Mat g_;
};

PhasePoint cotangent_lift(const TranslationAction &a, std::span<const double> g, const PhasePoint &z);
MomentumValue momentum_map(const TranslationAction &a, const PhasePoint &z);

struct SamplingOptions {
    std::size_t samples = 64;
    double tol = 1e-9;
    std::uint64_t seed = 42;
    // Phase points are drawn from [-box, box] in every coordinate, group
    // elements from [-group_box, group_box].
    double box = 2.0;
    double group_box = 2.0;
};

struct InvarianceResult {
    bool invariant = true;
    double max_violation = 0.0;
    // Phase point (q, p) followed by the group element of the worst sample.
    std::vector<double> witness;
};

// Randomized check |f(lift(g, z)) − f(z)| ≤ tol·(1 + |f(z)|) over (g, z).
// `f` is an expression over the system's coordinates and momenta.
InvarianceResult check_invariance(const TranslationAction &a, const Expr &f, const HamiltonianSystem &names,
                                  const SamplingOptions &opts);

bool is_invariant(const TranslationAction &a, const Expr &f, const HamiltonianSystem &names,
                  const SamplingOptions &opts);

struct LemmaReport {
    // max − min of each momentum component of J∘γ over the grid (max over components).
    double j_spread = 0.0;
    bool invariant = true;
    // (j_spread ≤ tol) ⇔ invariant.
    bool consistent = true;
    double max_violation = 0.0;
};

// Sampled check that J is constant along Im(γ) exactly when Im(γ) is invariant.
LemmaReport check_invariance_lemma(const TranslationAction &a, const OneForm &gamma, const PointSet &grid, double tol,
                                   std::uint64_t seed = 42);

} // namespace hjr
