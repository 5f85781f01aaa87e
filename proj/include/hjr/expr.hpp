#pragma once

// Scalar expressions over named real variables: parsing, printing, evaluation
// and exact symbolic differentiation.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hjr {

enum class Op : std::uint8_t {
    constant,
    variable,
    add,
    sub,
    mul,
    div,
    pow,
    neg,
    sin,
    cos,
    tan,
    atan,
    sqrt,
    exp,
    log,
    call,
};

class Expr;

// A unary real function supplied by the library (e.g. a tabulated quadrature)
// that can appear inside expressions. The derivative is given as an expression
// of the argument so that differentiation stays exact through the call.
struct ScalarFunction {
    std::string name;
    std::function<double(double)> value;
    std::function<Expr(const Expr &)> derivative;
};

class Expr {
public:
    struct Node;

    // The zero constant.
    Expr();
    Expr(double c); // NOLINT(google-explicit-constructor)

    static Expr variable(std::string name);
    static Expr unary(Op op, Expr arg);
    static Expr binary(Op op, Expr lhs, Expr rhs);
    static Expr call(std::shared_ptr<const ScalarFunction> fn, Expr arg);

    Op op() const noexcept;
    // Only meaningful for constants.
    double constant() const noexcept;
    // Only meaningful for variables.
    const std::string &name() const noexcept;
    std::size_t arity() const noexcept;
    const Expr &operand(std::size_t i) const;
    const ScalarFunction &function() const;
    const std::shared_ptr<const ScalarFunction> &function_ptr() const;

    bool is_constant() const noexcept { return op() == Op::constant; }
    bool is_constant(double c) const noexcept { return is_constant() && constant() == c; }

    // Structural identity of the underlying node.
    bool same_node(const Expr &other) const noexcept { return node_ == other.node_; }

private:
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;
};

// Smart constructors: fold constants and drop neutral elements.
Expr operator+(const Expr &a, const Expr &b);
Expr operator-(const Expr &a, const Expr &b);
Expr operator*(const Expr &a, const Expr &b);
Expr operator/(const Expr &a, const Expr &b);
Expr operator-(const Expr &a);
Expr pow(const Expr &base, const Expr &exponent);
Expr sin(const Expr &a);
Expr cos(const Expr &a);
Expr tan(const Expr &a);
Expr atan(const Expr &a);
Expr sqrt(const Expr &a);
Expr exp(const Expr &a);
Expr log(const Expr &a);

// Grammar: standard infix precedence, ^ right-associative and binding tighter
// than unary minus, which binds tighter than * and /. Throws ParseError.
Expr parse(std::string_view text);

// Re-parseable text; preserves the tree shape so that parse(to_string(e))
// evaluates bit-identically to e.
std::string to_string(const Expr &e);

using Bindings = std::map<std::string, double, std::less<>>;

// Throws Error(unbound_variable) or DomainError.
double eval(const Expr &e, const Bindings &b);

Expr differentiate(const Expr &e, std::string_view var);

Expr substitute(const Expr &e, const std::map<std::string, Expr, std::less<>> &replacements);

// Canonical sum-of-monomials form with constant folding and collected like
// terms. Best effort: non-polynomial pieces are kept as opaque atoms.
Expr simplify(const Expr &e);

std::set<std::string, std::less<>> free_variables(const Expr &e);

// Expression compiled against a fixed ordering of variables. Evaluation is a
// postfix program over a value stack.
class CompiledExpr {
public:
    CompiledExpr() = default;
    // Throws Error(unbound_variable) if a free variable is missing from slots.
    CompiledExpr(const Expr &e, std::span<const std::string> slots);

    // Division by a denominator with |d| <= denominator_guard and non-finite
    // results raise DomainError.
    double operator()(std::span<const double> values, double denominator_guard = 0.0) const;

    const Expr &expr() const noexcept { return expr_; }

private:
    struct Instr {
        Op op;
        std::uint32_t slot;
        double value;
        const ScalarFunction *fn;
    };

    Expr expr_;
    std::vector<Instr> program_;
    // Node of each instruction, for error messages.
    std::vector<Expr> nodes_;
    std::size_t max_stack_ = 0;
};

} // namespace hjr
