#pragma once

// Generating functions S(t, q, b) of type I (b = α) or type II (b = β), with
// the first and second partials needed by implicit canonical maps.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjr/expr.hpp"
#include "hjr/linalg.hpp"

namespace hjr {

enum class GeneratingKind { type1, type2 };

class GeneratingFunction {
public:
    virtual ~GeneratingFunction() = default;

    virtual GeneratingKind kind() const = 0;
    virtual std::size_t dim() const = 0;

    virtual double value(double t, std::span<const double> q, std::span<const double> b) const = 0;
    virtual Vec grad_q(double t, std::span<const double> q, std::span<const double> b) const = 0;
    virtual Vec grad_b(double t, std::span<const double> q, std::span<const double> b) const = 0;
    virtual double time_derivative(double t, std::span<const double> q, std::span<const double> b) const = 0;
    virtual Mat hess_qq(double t, std::span<const double> q, std::span<const double> b) const = 0;
    // (i, j) entry is ∂²S/∂qⁱ∂bʲ.
    virtual Mat hess_qb(double t, std::span<const double> q, std::span<const double> b) const = 0;
    virtual Mat hess_bb(double t, std::span<const double> q, std::span<const double> b) const = 0;

    // Starting point for solving ∂S/∂q = p; empty means b = p.
    virtual std::optional<Vec> initial_guess(double, std::span<const double>, std::span<const double>) const
    {
        return std::nullopt;
    }
};

class SymbolicGeneratingFunction final : public GeneratingFunction {
public:
    // `time_var` may be empty for autonomous S.
    SymbolicGeneratingFunction(GeneratingKind kind, Expr s, std::vector<std::string> q_names,
                               std::vector<std::string> b_names, std::string time_var = {});

    GeneratingKind kind() const override { return kind_; }
    std::size_t dim() const override { return q_names_.size(); }
    const Expr &expr() const noexcept { return s_; }
    const std::vector<std::string> &q_names() const noexcept { return q_names_; }
    const std::vector<std::string> &b_names() const noexcept { return b_names_; }
    const std::string &time_var() const noexcept { return time_var_; }

    double value(double t, std::span<const double> q, std::span<const double> b) const override;
    Vec grad_q(double t, std::span<const double> q, std::span<const double> b) const override;
    Vec grad_b(double t, std::span<const double> q, std::span<const double> b) const override;
    double time_derivative(double t, std::span<const double> q, std::span<const double> b) const override;
    Mat hess_qq(double t, std::span<const double> q, std::span<const double> b) const override;
    Mat hess_qb(double t, std::span<const double> q, std::span<const double> b) const override;
    Mat hess_bb(double t, std::span<const double> q, std::span<const double> b) const override;

private:
    std::vector<double> pack(double t, std::span<const double> q, std::span<const double> b) const;
    Mat eval_block(const std::vector<CompiledExpr> &block, std::size_t cols, const std::vector<double> &x) const;

    GeneratingKind kind_;
    Expr s_;
    std::vector<std::string> q_names_;
    std::vector<std::string> b_names_;
    std::string time_var_;
    std::vector<std::string> slots_;
    CompiledExpr value_;
    CompiledExpr dt_;
    std::vector<CompiledExpr> dq_;
    std::vector<CompiledExpr> db_;
    std::vector<CompiledExpr> dqq_;
    std::vector<CompiledExpr> dqb_;
    std::vector<CompiledExpr> dbb_;
};

} // namespace hjr
