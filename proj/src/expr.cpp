#include "hjr/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include <fmt/core.h>

#include "hjr/error.hpp"

namespace hjr {

struct Expr::Node {
    Op op = Op::constant;
    double value = 0.0;
    std::string name;
    std::vector<Expr> args;
    std::shared_ptr<const ScalarFunction> fn;
};

namespace {

std::shared_ptr<const Expr::Node> make_constant(double c)
{
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::constant;
    n->value = c;
    return n;
}

bool is_function(Op op)
{
    switch (op) {
        case Op::sin:
        case Op::cos:
        case Op::tan:
        case Op::atan:
        case Op::sqrt:
        case Op::exp:
        case Op::log:
            return true;
        default:
            return false;
    }
}

const char *function_name(Op op)
{
    switch (op) {
        case Op::sin:
            return "sin";
        case Op::cos:
            return "cos";
        case Op::tan:
            return "tan";
        case Op::atan:
            return "arctan";
        case Op::sqrt:
            return "sqrt";
        case Op::exp:
            return "exp";
        case Op::log:
            return "log";
        default:
            return "?";
    }
}

std::optional<Op> function_from_name(std::string_view name)
{
    if (name == "sin") return Op::sin;
    if (name == "cos") return Op::cos;
    if (name == "tan") return Op::tan;
    if (name == "arctan" || name == "atan") return Op::atan;
    if (name == "sqrt") return Op::sqrt;
    if (name == "exp") return Op::exp;
    if (name == "log") return Op::log;
    return std::nullopt;
}

// Shared numeric kernels; `where` is only rendered on failure.
double apply_unary(Op op, double x, const Expr &where)
{
    double r = 0.0;
    switch (op) {
        case Op::neg:
            return -x;
        case Op::sin:
            r = std::sin(x);
            break;
        case Op::cos:
            r = std::cos(x);
            break;
        case Op::tan:
            r = std::tan(x);
            break;
        case Op::atan:
            r = std::atan(x);
            break;
        case Op::sqrt:
            if (x < 0.0) {
                throw DomainError(to_string(where), fmt::format("square root of negative value {}", x));
            }
            r = std::sqrt(x);
            break;
        case Op::exp:
            r = std::exp(x);
            break;
        case Op::log:
            if (x <= 0.0) {
                throw DomainError(to_string(where), fmt::format("logarithm of non-positive value {}", x));
            }
            r = std::log(x);
            break;
        default:
            throw std::logic_error("apply_unary: not a unary op");
    }
    if (!std::isfinite(r)) {
        throw DomainError(to_string(where), "non-finite result");
    }
    return r;
}

double apply_binary(Op op, double a, double b, const Expr &where, double guard)
{
    double r = 0.0;
    switch (op) {
        case Op::add:
            r = a + b;
            break;
        case Op::sub:
            r = a - b;
            break;
        case Op::mul:
            r = a * b;
            break;
        case Op::div:
            if (std::abs(b) <= guard) {
                throw DomainError(to_string(where), fmt::format("division by (near) zero denominator {}", b));
            }
            r = a / b;
            break;
        case Op::pow:
            if (b < 0.0 && std::abs(a) <= guard) {
                throw DomainError(to_string(where), fmt::format("negative power of (near) zero base {}", a));
            }
            if (a < 0.0 && b != std::round(b)) {
                throw DomainError(to_string(where), "non-integer power of negative base");
            }
            r = std::pow(a, b);
            break;
        default:
            throw std::logic_error("apply_binary: not a binary op");
    }
    if (!std::isfinite(r)) {
        throw DomainError(to_string(where), "non-finite result");
    }
    return r;
}

double apply_call(const ScalarFunction &fn, double x, const Expr &where)
{
    const double r = fn.value(x);
    if (!std::isfinite(r)) {
        throw DomainError(to_string(where), "non-finite result");
    }
    return r;
}

bool depends_on(const Expr &e, std::string_view var)
{
    if (e.op() == Op::variable) return e.name() == var;
    for (std::size_t i = 0; i < e.arity(); ++i) {
        if (depends_on(e.operand(i), var)) return true;
    }
    return false;
}

} // namespace

// ---------------------------------------------------------------------------
// Construction

Expr::Expr() : node_(make_constant(0.0)) {}

Expr::Expr(double c) : node_(make_constant(c)) {}

Expr Expr::variable(std::string name)
{
    auto n = std::make_shared<Node>();
    n->op = Op::variable;
    n->name = std::move(name);
    return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr arg)
{
    if (op != Op::neg && !is_function(op)) {
        throw std::invalid_argument("Expr::unary: not a unary operator");
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args.push_back(std::move(arg));
    return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs)
{
    if (op != Op::add && op != Op::sub && op != Op::mul && op != Op::div && op != Op::pow) {
        throw std::invalid_argument("Expr::binary: not a binary operator");
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args.push_back(std::move(lhs));
    n->args.push_back(std::move(rhs));
    return Expr(std::move(n));
}

Expr Expr::call(std::shared_ptr<const ScalarFunction> fn, Expr arg)
{
    if (!fn || !fn->value || !fn->derivative) {
        throw std::invalid_argument("Expr::call: incomplete function");
    }
    auto n = std::make_shared<Node>();
    n->op = Op::call;
    n->fn = std::move(fn);
    n->args.push_back(std::move(arg));
    return Expr(std::move(n));
}

Op Expr::op() const noexcept { return node_->op; }

double Expr::constant() const noexcept { return node_->value; }

const std::string &Expr::name() const noexcept { return node_->name; }

std::size_t Expr::arity() const noexcept { return node_->args.size(); }

const Expr &Expr::operand(std::size_t i) const { return node_->args.at(i); }

const ScalarFunction &Expr::function() const
{
    if (!node_->fn) throw std::logic_error("Expr::function on a non-call node");
    return *node_->fn;
}

const std::shared_ptr<const ScalarFunction> &Expr::function_ptr() const { return node_->fn; }

namespace {

std::optional<double> fold(double r)
{
    if (std::isfinite(r)) return r;
    return std::nullopt;
}

} // namespace

Expr operator+(const Expr &a, const Expr &b)
{
    if (a.is_constant() && b.is_constant()) {
        if (auto r = fold(a.constant() + b.constant())) return Expr(*r);
    }
    if (a.is_constant(0.0)) return b;
    if (b.is_constant(0.0)) return a;
    return Expr::binary(Op::add, a, b);
}

Expr operator-(const Expr &a, const Expr &b)
{
    if (a.is_constant() && b.is_constant()) {
        if (auto r = fold(a.constant() - b.constant())) return Expr(*r);
    }
    if (b.is_constant(0.0)) return a;
    if (a.is_constant(0.0)) return -b;
    return Expr::binary(Op::sub, a, b);
}

Expr operator*(const Expr &a, const Expr &b)
{
    if (a.is_constant() && b.is_constant()) {
        if (auto r = fold(a.constant() * b.constant())) return Expr(*r);
    }
    if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr(0.0);
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    if (a.is_constant(-1.0)) return -b;
    if (b.is_constant(-1.0)) return -a;
    return Expr::binary(Op::mul, a, b);
}

Expr operator/(const Expr &a, const Expr &b)
{
    if (a.is_constant() && b.is_constant() && b.constant() != 0.0) {
        if (auto r = fold(a.constant() / b.constant())) return Expr(*r);
    }
    if (b.is_constant(1.0)) return a;
    return Expr::binary(Op::div, a, b);
}

Expr operator-(const Expr &a)
{
    if (a.is_constant()) return Expr(-a.constant());
    if (a.op() == Op::neg) return a.operand(0);
    return Expr::unary(Op::neg, a);
}

Expr pow(const Expr &base, const Expr &exponent)
{
    if (base.is_constant() && exponent.is_constant()) {
        const double b = base.constant();
        const double e = exponent.constant();
        if (!(b == 0.0 && e < 0.0) && !(b < 0.0 && e != std::round(e))) {
            if (auto r = fold(std::pow(b, e))) return Expr(*r);
        }
    }
    if (exponent.is_constant(1.0)) return base;
    if (exponent.is_constant(0.0)) return Expr(1.0);
    return Expr::binary(Op::pow, base, exponent);
}

namespace {

Expr function_node(Op op, const Expr &a)
{
    if (a.is_constant()) {
        try {
            return Expr(apply_unary(op, a.constant(), a));
        } catch (const DomainError &) {
            // Keep the node; evaluation reports the domain error.
        }
    }
    return Expr::unary(op, a);
}

} // namespace

Expr sin(const Expr &a) { return function_node(Op::sin, a); }
Expr cos(const Expr &a) { return function_node(Op::cos, a); }
Expr tan(const Expr &a) { return function_node(Op::tan, a); }
Expr atan(const Expr &a) { return function_node(Op::atan, a); }
Expr sqrt(const Expr &a) { return function_node(Op::sqrt, a); }
Expr exp(const Expr &a) { return function_node(Op::exp, a); }
Expr log(const Expr &a) { return function_node(Op::log, a); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr parse_all()
    {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) {
            throw ParseError(pos_, fmt::format("unexpected character '{}'", text_[pos_]));
        }
        return e;
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                       text_[pos_] == '\r')) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_sum()
    {
        Expr lhs = parse_product();
        while (true) {
            if (accept('+')) {
                lhs = Expr::binary(Op::add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = Expr::binary(Op::sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_product()
    {
        Expr lhs = parse_unary();
        while (true) {
            if (accept('*')) {
                lhs = Expr::binary(Op::mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = Expr::binary(Op::div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary()
    {
        if (accept('-')) return Expr::unary(Op::neg, parse_unary());
        return parse_power();
    }

    Expr parse_power()
    {
        Expr base = parse_primary();
        if (accept('^')) return Expr::binary(Op::pow, base, parse_unary());
        return base;
    }

    Expr parse_primary()
    {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError(pos_, "unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = parse_sum();
            if (!accept(')')) throw ParseError(pos_, "expected ')'");
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return parse_identifier();
        throw ParseError(pos_, fmt::format("unexpected character '{}'", c));
    }

    Expr parse_number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) throw ParseError(start, "malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            const std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;
        }
        double value = 0.0;
        const auto *first = text_.data() + start;
        const auto *last = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) throw ParseError(start, "malformed number");
        return Expr(value);
    }

    Expr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_') {
                ++pos_;
            } else {
                break;
            }
        }
        const std::string_view ident = text_.substr(start, pos_ - start);
        const std::size_t after = pos_;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            const auto op = function_from_name(ident);
            if (!op) throw ParseError(start, fmt::format("unknown function '{}'", ident));
            ++pos_;
            Expr arg = parse_sum();
            if (!accept(')')) throw ParseError(pos_, "expected ')'");
            return Expr::unary(*op, arg);
        }
        pos_ = after;
        if (function_from_name(ident)) {
            throw ParseError(pos_, fmt::format("expected '(' after function '{}'", ident));
        }
        return Expr::variable(std::string(ident));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr &e)
{
    switch (e.op()) {
        case Op::constant:
            return e.constant() < 0.0 || std::signbit(e.constant()) ? 3 : 5;
        case Op::add:
        case Op::sub:
            return 1;
        case Op::mul:
        case Op::div:
            return 2;
        case Op::neg:
            return 3;
        case Op::pow:
            return 4;
        default:
            return 5;
    }
}

std::string format_number(double v)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("format_number failed");
    return std::string(buf.data(), ptr);
}

void print(const Expr &e, std::string &out);

void print_wrapped(const Expr &e, bool wrap, std::string &out)
{
    if (wrap) out.push_back('(');
    print(e, out);
    if (wrap) out.push_back(')');
}

void print(const Expr &e, std::string &out)
{
    switch (e.op()) {
        case Op::constant:
            out += format_number(e.constant());
            return;
        case Op::variable:
            out += e.name();
            return;
        case Op::add:
        case Op::sub:
            print(e.operand(0), out);
            out += e.op() == Op::add ? " + " : " - ";
            print_wrapped(e.operand(1), precedence(e.operand(1)) <= 1, out);
            return;
        case Op::mul:
        case Op::div:
            print_wrapped(e.operand(0), precedence(e.operand(0)) < 2, out);
            out.push_back(e.op() == Op::mul ? '*' : '/');
            print_wrapped(e.operand(1), precedence(e.operand(1)) <= 2, out);
            return;
        case Op::neg:
            out.push_back('-');
            print_wrapped(e.operand(0), precedence(e.operand(0)) <= 3, out);
            return;
        case Op::pow:
            print_wrapped(e.operand(0), precedence(e.operand(0)) <= 4, out);
            out.push_back('^');
            print_wrapped(e.operand(1), precedence(e.operand(1)) < 3, out);
            return;
        case Op::call:
            out += e.function().name;
            out.push_back('(');
            print(e.operand(0), out);
            out.push_back(')');
            return;
        default:
            out += function_name(e.op());
            out.push_back('(');
            print(e.operand(0), out);
            out.push_back(')');
            return;
    }
}

} // namespace

std::string to_string(const Expr &e)
{
    std::string out;
    print(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double eval_tree(const Expr &e, const Bindings &b)
{
    switch (e.op()) {
        case Op::constant:
            return e.constant();
        case Op::variable: {
            auto it = b.find(e.name());
            if (it == b.end()) {
                throw Error(ErrorKind::unbound_variable, fmt::format("unbound variable '{}'", e.name()));
            }
            return it->second;
        }
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
        case Op::pow:
            return apply_binary(e.op(), eval_tree(e.operand(0), b), eval_tree(e.operand(1), b), e, 0.0);
        case Op::call:
            return apply_call(e.function(), eval_tree(e.operand(0), b), e);
        default:
            return apply_unary(e.op(), eval_tree(e.operand(0), b), e);
    }
}

} // namespace

double eval(const Expr &e, const Bindings &b) { return eval_tree(e, b); }

CompiledExpr::CompiledExpr(const Expr &e, std::span<const std::string> slots) : expr_(e)
{
    std::size_t depth = 0;
    auto emit = [&](auto &self, const Expr &x) -> void {
        for (std::size_t i = 0; i < x.arity(); ++i) self(self, x.operand(i));
        Instr ins{x.op(), 0, 0.0, nullptr};
        switch (x.op()) {
            case Op::constant:
                ins.value = x.constant();
                ++depth;
                break;
            case Op::variable: {
                auto it = std::find(slots.begin(), slots.end(), x.name());
                if (it == slots.end()) {
                    throw Error(ErrorKind::unbound_variable, fmt::format("unbound variable '{}'", x.name()));
                }
                ins.slot = static_cast<std::uint32_t>(it - slots.begin());
                ++depth;
                break;
            }
            case Op::add:
            case Op::sub:
            case Op::mul:
            case Op::div:
            case Op::pow:
                --depth;
                break;
            case Op::call:
                ins.fn = &x.function();
                break;
            default:
                break;
        }
        max_stack_ = std::max(max_stack_, depth);
        program_.push_back(ins);
        nodes_.push_back(x);
    };
    emit(emit, e);
}

double CompiledExpr::operator()(std::span<const double> values, double denominator_guard) const
{
    constexpr std::size_t inline_capacity = 64;
    std::array<double, inline_capacity> inline_stack{};
    std::vector<double> heap_stack;
    double *stack = inline_stack.data();
    if (max_stack_ > inline_capacity) {
        heap_stack.resize(max_stack_);
        stack = heap_stack.data();
    }
    std::size_t top = 0;
    for (std::size_t pc = 0; pc < program_.size(); ++pc) {
        const Instr &ins = program_[pc];
        switch (ins.op) {
            case Op::constant:
                stack[top++] = ins.value;
                break;
            case Op::variable:
                stack[top++] = values[ins.slot];
                break;
            case Op::add:
                --top;
                stack[top - 1] = stack[top - 1] + stack[top];
                break;
            case Op::sub:
                --top;
                stack[top - 1] = stack[top - 1] - stack[top];
                break;
            case Op::mul:
                --top;
                stack[top - 1] = stack[top - 1] * stack[top];
                break;
            case Op::div:
            case Op::pow:
                --top;
                stack[top - 1] = apply_binary(ins.op, stack[top - 1], stack[top], nodes_[pc], denominator_guard);
                break;
            case Op::neg:
                stack[top - 1] = -stack[top - 1];
                break;
            case Op::call:
                stack[top - 1] = apply_call(*ins.fn, stack[top - 1], nodes_[pc]);
                break;
            default:
                stack[top - 1] = apply_unary(ins.op, stack[top - 1], nodes_[pc]);
                break;
        }
    }
    const double r = stack[0];
    if (!std::isfinite(r)) throw DomainError(to_string(expr_), "non-finite result");
    return r;
}

// ---------------------------------------------------------------------------
// Differentiation and substitution

Expr differentiate(const Expr &e, std::string_view var)
{
    if (!depends_on(e, var)) return Expr(0.0);
    switch (e.op()) {
        case Op::constant:
            return Expr(0.0);
        case Op::variable:
            return Expr(e.name() == var ? 1.0 : 0.0);
        case Op::add:
            return differentiate(e.operand(0), var) + differentiate(e.operand(1), var);
        case Op::sub:
            return differentiate(e.operand(0), var) - differentiate(e.operand(1), var);
        case Op::mul: {
            const Expr &u = e.operand(0);
            const Expr &v = e.operand(1);
            return differentiate(u, var) * v + u * differentiate(v, var);
        }
        case Op::div: {
            const Expr &u = e.operand(0);
            const Expr &v = e.operand(1);
            const Expr du = differentiate(u, var);
            const Expr dv = differentiate(v, var);
            if (dv.is_constant(0.0)) return du / v;
            if (du.is_constant(0.0)) return -(u * dv) / pow(v, Expr(2.0));
            return (du * v - u * dv) / pow(v, Expr(2.0));
        }
        case Op::pow: {
            const Expr &u = e.operand(0);
            const Expr &v = e.operand(1);
            const Expr du = differentiate(u, var);
            const Expr dv = differentiate(v, var);
            if (dv.is_constant(0.0)) {
                return v * pow(u, v - Expr(1.0)) * du;
            }
            if (du.is_constant(0.0)) {
                return e * log(u) * dv;
            }
            return e * (dv * log(u) + v * du / u);
        }
        case Op::neg:
            return -differentiate(e.operand(0), var);
        case Op::sin: {
            const Expr &u = e.operand(0);
            return cos(u) * differentiate(u, var);
        }
        case Op::cos: {
            const Expr &u = e.operand(0);
            return -(sin(u) * differentiate(u, var));
        }
        case Op::tan: {
            const Expr &u = e.operand(0);
            return differentiate(u, var) / pow(cos(u), Expr(2.0));
        }
        case Op::atan: {
            const Expr &u = e.operand(0);
            return differentiate(u, var) / (Expr(1.0) + pow(u, Expr(2.0)));
        }
        case Op::sqrt: {
            const Expr &u = e.operand(0);
            return differentiate(u, var) / (Expr(2.0) * e);
        }
        case Op::exp: {
            const Expr &u = e.operand(0);
            return e * differentiate(u, var);
        }
        case Op::log: {
            const Expr &u = e.operand(0);
            return differentiate(u, var) / u;
        }
        case Op::call: {
            const Expr &u = e.operand(0);
            return e.function().derivative(u) * differentiate(u, var);
        }
    }
    throw std::logic_error("differentiate: unhandled op");
}

namespace {

Expr rebuild_with(const Expr &e, std::vector<Expr> args)
{
    switch (e.op()) {
        case Op::add:
            return args[0] + args[1];
        case Op::sub:
            return args[0] - args[1];
        case Op::mul:
            return args[0] * args[1];
        case Op::div:
            return args[0] / args[1];
        case Op::pow:
            return pow(args[0], args[1]);
        case Op::neg:
            return -args[0];
        case Op::call:
            return Expr::call(e.function_ptr(), args[0]);
        case Op::sin:
            return sin(args[0]);
        case Op::cos:
            return cos(args[0]);
        case Op::tan:
            return tan(args[0]);
        case Op::atan:
            return atan(args[0]);
        case Op::sqrt:
            return sqrt(args[0]);
        case Op::exp:
            return exp(args[0]);
        case Op::log:
            return log(args[0]);
        default:
            return e;
    }
}

} // namespace

Expr substitute(const Expr &e, const std::map<std::string, Expr, std::less<>> &replacements)
{
    if (e.op() == Op::variable) {
        auto it = replacements.find(e.name());
        return it == replacements.end() ? e : it->second;
    }
    if (e.arity() == 0) return e;
    std::vector<Expr> args;
    args.reserve(e.arity());
    for (std::size_t i = 0; i < e.arity(); ++i) args.push_back(substitute(e.operand(i), replacements));
    return rebuild_with(e, std::move(args));
}

std::set<std::string, std::less<>> free_variables(const Expr &e)
{
    std::set<std::string, std::less<>> out;
    auto walk = [&](auto &self, const Expr &x) -> void {
        if (x.op() == Op::variable) out.insert(x.name());
        for (std::size_t i = 0; i < x.arity(); ++i) self(self, x.operand(i));
    };
    walk(walk, e);
    return out;
}

// ---------------------------------------------------------------------------
// Canonical form

namespace {

struct Atom {
    Expr expr;
    int exponent = 1;
};

// Keyed by the printed atom so that equal atoms merge.
using Monomial = std::map<std::string, Atom>;

struct Term {
    Monomial monomial;
    double coefficient = 0.0;
};

using Poly = std::map<std::string, Term>;

constexpr std::size_t max_expanded_terms = 64;
constexpr int max_expanded_power = 8;

std::string monomial_key(const Monomial &m)
{
    std::string key;
    for (const auto &[atom_key, atom] : m) {
        if (!key.empty()) key.push_back('*');
        key += atom_key;
        if (atom.exponent != 1) key += "^" + std::to_string(atom.exponent);
    }
    return key;
}

void add_term(Poly &p, const Monomial &m, double c)
{
    if (c == 0.0) return;
    const std::string key = monomial_key(m);
    auto it = p.find(key);
    if (it == p.end()) {
        p.emplace(key, Term{m, c});
        return;
    }
    it->second.coefficient += c;
    if (it->second.coefficient == 0.0) p.erase(it);
}

Poly constant_poly(double c)
{
    Poly p;
    add_term(p, {}, c);
    return p;
}

Poly atom_poly(const Expr &atom, int exponent)
{
    Monomial m;
    m.emplace(to_string(atom), Atom{atom, exponent});
    Poly p;
    add_term(p, m, 1.0);
    return p;
}

Poly scaled_sum(const Poly &a, const Poly &b, double scale)
{
    Poly out = a;
    for (const auto &[key, term] : b) add_term(out, term.monomial, scale * term.coefficient);
    return out;
}

Monomial multiply_monomials(const Monomial &a, const Monomial &b)
{
    Monomial out = a;
    for (const auto &[key, atom] : b) {
        auto it = out.find(key);
        if (it == out.end()) {
            out.emplace(key, atom);
        } else {
            it->second.exponent += atom.exponent;
            if (it->second.exponent == 0) out.erase(it);
        }
    }
    return out;
}

Expr rebuild(const Poly &p);

// Single monomial standing for the whole polynomial.
Poly atomize(const Poly &p)
{
    if (p.size() <= 1) return p;
    return atom_poly(rebuild(p), 1);
}

Poly multiply(const Poly &a, const Poly &b)
{
    if (a.size() * b.size() > max_expanded_terms) return multiply(atomize(a), atomize(b));
    Poly out;
    for (const auto &[ka, ta] : a) {
        for (const auto &[kb, tb] : b) {
            add_term(out, multiply_monomials(ta.monomial, tb.monomial), ta.coefficient * tb.coefficient);
        }
    }
    return out;
}

Poly integer_power(const Poly &p, int k)
{
    if (k == 0) return constant_poly(1.0);
    if (p.empty()) return k > 0 ? Poly{} : atom_poly(Expr(0.0), k);
    if (p.size() == 1) {
        const Term &t = p.begin()->second;
        Monomial m;
        for (const auto &[key, atom] : t.monomial) m.emplace(key, Atom{atom.expr, atom.exponent * k});
        Poly out;
        add_term(out, m, std::pow(t.coefficient, k));
        return out;
    }
    if (k < 0 || k > max_expanded_power) return atom_poly(rebuild(p), k);
    Poly out = p;
    for (int i = 1; i < k; ++i) out = multiply(out, p);
    return out;
}

std::optional<int> as_small_integer(const Poly &p)
{
    if (p.empty()) return 0;
    if (p.size() != 1 || !p.begin()->second.monomial.empty()) return std::nullopt;
    const double c = p.begin()->second.coefficient;
    if (c != std::round(c) || std::abs(c) > 64.0) return std::nullopt;
    return static_cast<int>(c);
}

Poly canon(const Expr &e)
{
    switch (e.op()) {
        case Op::constant:
            return constant_poly(e.constant());
        case Op::variable:
            return atom_poly(e, 1);
        case Op::add:
            return scaled_sum(canon(e.operand(0)), canon(e.operand(1)), 1.0);
        case Op::sub:
            return scaled_sum(canon(e.operand(0)), canon(e.operand(1)), -1.0);
        case Op::neg:
            return scaled_sum({}, canon(e.operand(0)), -1.0);
        case Op::mul:
            return multiply(canon(e.operand(0)), canon(e.operand(1)));
        case Op::div:
            return multiply(canon(e.operand(0)), integer_power(canon(e.operand(1)), -1));
        case Op::pow: {
            const Poly base = canon(e.operand(0));
            const Poly exponent = canon(e.operand(1));
            if (auto k = as_small_integer(exponent)) return integer_power(base, *k);
            const Expr rebuilt = pow(rebuild(base), rebuild(exponent));
            if (rebuilt.is_constant()) return constant_poly(rebuilt.constant());
            return atom_poly(rebuilt, 1);
        }
        case Op::call:
            return atom_poly(Expr::call(e.function_ptr(), rebuild(canon(e.operand(0)))), 1);
        default: {
            const Expr rebuilt = rebuild_with(e, {rebuild(canon(e.operand(0)))});
            if (rebuilt.is_constant()) return constant_poly(rebuilt.constant());
            return atom_poly(rebuilt, 1);
        }
    }
}

Expr factor_product(const std::vector<std::pair<Expr, int>> &factors)
{
    Expr out(1.0);
    for (const auto &[atom, exponent] : factors) {
        out = out * (exponent == 1 ? atom : Expr::binary(Op::pow, atom, Expr(static_cast<double>(exponent))));
    }
    return out;
}

Expr rebuild(const Poly &p)
{
    if (p.empty()) return Expr(0.0);
    std::vector<const Term *> order;
    const Term *constant_term = nullptr;
    for (const auto &[key, term] : p) {
        if (term.monomial.empty()) {
            constant_term = &term;
        } else {
            order.push_back(&term);
        }
    }
    if (constant_term) order.push_back(constant_term);

    std::optional<Expr> sum;
    for (const Term *t : order) {
        std::vector<std::pair<Expr, int>> num;
        std::vector<std::pair<Expr, int>> den;
        for (const auto &[key, atom] : t->monomial) {
            if (atom.exponent > 0) num.emplace_back(atom.expr, atom.exponent);
            if (atom.exponent < 0) den.emplace_back(atom.expr, -atom.exponent);
        }
        const double magnitude = std::abs(t->coefficient);
        Expr numerator = num.empty() ? Expr(magnitude)
                                     : (magnitude == 1.0 ? factor_product(num) : Expr(magnitude) * factor_product(num));
        Expr term = den.empty() ? numerator : Expr::binary(Op::div, numerator, factor_product(den));
        const bool negative = t->coefficient < 0.0;
        if (!sum) {
            sum = negative ? -term : term;
        } else {
            sum = Expr::binary(negative ? Op::sub : Op::add, *sum, term);
        }
    }
    return *sum;
}

} // namespace

Expr simplify(const Expr &e) { return rebuild(canon(e)); }

} // namespace hjr
