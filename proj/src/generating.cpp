#include "hjr/generating.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "hjr/error.hpp"
#include "hjr/phase_space.hpp"

namespace hjr {

SymbolicGeneratingFunction::SymbolicGeneratingFunction(GeneratingKind kind, Expr s, std::vector<std::string> q_names,
                                                       std::vector<std::string> b_names, std::string time_var)
    : kind_(kind), s_(std::move(s)), q_names_(std::move(q_names)), b_names_(std::move(b_names)),
      time_var_(std::move(time_var))
{
    if (q_names_.empty()) throw Error(ErrorKind::argument, "generating function needs at least one coordinate");
    if (q_names_.size() != b_names_.size()) {
        throw Error(ErrorKind::dimension,
                    fmt::format("{} coordinates but {} parameters in generating function", q_names_.size(), b_names_.size()));
    }
    slots_ = q_names_;
    slots_.insert(slots_.end(), b_names_.begin(), b_names_.end());
    // The time slot always exists so that packing is uniform.
    slots_.push_back(time_var_.empty() ? std::string("\x01t") : time_var_);
    for (const auto &v : free_variables(s_)) {
        if (std::find(slots_.begin(), slots_.end(), v) == slots_.end()) {
            throw Error(ErrorKind::unbound_variable, fmt::format("generating function uses undeclared variable '{}'", v));
        }
    }
    value_ = CompiledExpr(s_, slots_);
    dt_ = CompiledExpr(time_var_.empty() ? Expr(0.0) : differentiate(s_, time_var_), slots_);
    std::vector<Expr> sq;
    std::vector<Expr> sb;
    for (const auto &q : q_names_) sq.push_back(differentiate(s_, q));
    for (const auto &b : b_names_) sb.push_back(differentiate(s_, b));
    for (std::size_t i = 0; i < dim(); ++i) {
        dq_.emplace_back(sq[i], slots_);
        db_.emplace_back(sb[i], slots_);
        for (std::size_t j = 0; j < dim(); ++j) {
            dqq_.emplace_back(differentiate(sq[i], q_names_[j]), slots_);
            dqb_.emplace_back(differentiate(sq[i], b_names_[j]), slots_);
            dbb_.emplace_back(differentiate(sb[i], b_names_[j]), slots_);
        }
    }
}

std::vector<double> SymbolicGeneratingFunction::pack(double t, std::span<const double> q, std::span<const double> b) const
{
    if (q.size() != dim() || b.size() != dim()) throw Error(ErrorKind::dimension, "generating function arguments have wrong dimension");
    std::vector<double> x(q.begin(), q.end());
    x.insert(x.end(), b.begin(), b.end());
    x.push_back(t);
    return x;
}

Mat SymbolicGeneratingFunction::eval_block(const std::vector<CompiledExpr> &block, std::size_t cols,
                                           const std::vector<double> &x) const
{
    const auto rows = static_cast<Eigen::Index>(block.size() / cols);
    Mat out(rows, static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            out(i, j) = block[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j)](x, singularity_guard);
        }
    }
    return out;
}

double SymbolicGeneratingFunction::value(double t, std::span<const double> q, std::span<const double> b) const
{
    return value_(pack(t, q, b), singularity_guard);
}

Vec SymbolicGeneratingFunction::grad_q(double t, std::span<const double> q, std::span<const double> b) const
{
    return eval_block(dq_, 1, pack(t, q, b));
}

Vec SymbolicGeneratingFunction::grad_b(double t, std::span<const double> q, std::span<const double> b) const
{
    return eval_block(db_, 1, pack(t, q, b));
}

double SymbolicGeneratingFunction::time_derivative(double t, std::span<const double> q, std::span<const double> b) const
{
    return dt_(pack(t, q, b), singularity_guard);
}

Mat SymbolicGeneratingFunction::hess_qq(double t, std::span<const double> q, std::span<const double> b) const
{
    return eval_block(dqq_, dim(), pack(t, q, b));
}

Mat SymbolicGeneratingFunction::hess_qb(double t, std::span<const double> q, std::span<const double> b) const
{
    return eval_block(dqb_, dim(), pack(t, q, b));
}

Mat SymbolicGeneratingFunction::hess_bb(double t, std::span<const double> q, std::span<const double> b) const
{
    return eval_block(dbb_, dim(), pack(t, q, b));
}

} // namespace hjr
