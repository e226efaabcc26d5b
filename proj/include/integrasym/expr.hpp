#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <integrasym/errors.hpp>

namespace integrasym
{

enum class expr_kind : std::uint8_t {
    constant,
    variable,
    neg,
    sin,
    cos,
    exp,
    ln,
    sqrt,
    add,
    sub,
    mul,
    div,
    pow
};

constexpr bool is_unary(expr_kind k) noexcept
{
    return k >= expr_kind::neg && k <= expr_kind::sqrt;
}

constexpr bool is_binary(expr_kind k) noexcept
{
    return k >= expr_kind::add;
}

// Immutable expression tree. Copies are cheap (shared, never mutated),
// which also makes concurrent evaluation of one tree safe.
class expr
{
public:
    struct node;

    // Default-constructed expression is the constant 0.
    expr();

    static expr constant(double v);
    static expr variable(std::string name);
    // Generic node builders. The only folding done here: negation of a
    // constant yields a constant, so a neg-of-constant node never exists
    // and printed negative literals round-trip structurally.
    static expr unary(expr_kind k, expr a);
    static expr binary(expr_kind k, expr a, expr b);

    static expr neg(expr a)
    {
        return unary(expr_kind::neg, std::move(a));
    }
    static expr sin(expr a)
    {
        return unary(expr_kind::sin, std::move(a));
    }
    static expr cos(expr a)
    {
        return unary(expr_kind::cos, std::move(a));
    }
    static expr exp(expr a)
    {
        return unary(expr_kind::exp, std::move(a));
    }
    static expr ln(expr a)
    {
        return unary(expr_kind::ln, std::move(a));
    }
    static expr sqrt(expr a)
    {
        return unary(expr_kind::sqrt, std::move(a));
    }
    static expr add(expr a, expr b)
    {
        return binary(expr_kind::add, std::move(a), std::move(b));
    }
    static expr sub(expr a, expr b)
    {
        return binary(expr_kind::sub, std::move(a), std::move(b));
    }
    static expr mul(expr a, expr b)
    {
        return binary(expr_kind::mul, std::move(a), std::move(b));
    }
    static expr div(expr a, expr b)
    {
        return binary(expr_kind::div, std::move(a), std::move(b));
    }
    static expr pow(expr a, expr b)
    {
        return binary(expr_kind::pow, std::move(a), std::move(b));
    }

    expr_kind kind() const noexcept;
    bool is_constant() const noexcept
    {
        return kind() == expr_kind::constant;
    }
    bool is_constant(double v) const noexcept;
    bool is_variable() const noexcept
    {
        return kind() == expr_kind::variable;
    }
    // Value of a constant node.
    double value() const;
    // Name of a variable node.
    const std::string &name() const;
    std::size_t arity() const noexcept;
    const expr &child(std::size_t i) const;

    // Identity of the underlying node, used as a fast equality path.
    const void *id() const noexcept
    {
        return m_node.get();
    }

private:
    explicit expr(std::shared_ptr<const node> n) : m_node(std::move(n))
    {
    }
    std::shared_ptr<const node> m_node;
};

struct expr::node
{
    expr_kind kind;
    double val = 0;
    std::string name;
    std::vector<expr> kids;
};

inline expr_kind expr::kind() const noexcept
{
    return m_node->kind;
}

inline std::size_t expr::arity() const noexcept
{
    return m_node->kids.size();
}

inline const expr &expr::child(std::size_t i) const
{
    return m_node->kids[i];
}

// Exact structural equality (constants compared bitwise-as-values,
// so constant(0.0) == constant(-0.0) but 1.0 != 1.0 + 1ulp).
bool structurally_equal(const expr &a, const expr &b) noexcept;

// Deterministic total order on trees: constants (by value) < variables
// (by name) < composites (by kind, then children lexicographically).
// Used to give simplification a platform-independent canonical form.
int expr_compare(const expr &a, const expr &b) noexcept;

struct expr_less {
    bool operator()(const expr &a, const expr &b) const noexcept
    {
        return expr_compare(a, b) < 0;
    }
};

// A named evaluation point.
struct point {
    std::vector<std::string> names;
    std::vector<double> coords;
};

// Borrowed name/value bindings for evaluation.
struct eval_context {
    std::span<const std::string> names;
    std::span<const double> values;
};

// Grammar (suggestive): expr := term (('+'|'-') term)*, term := factor
// (('*'|'/') factor)*, factor := '-' factor | base ('^' factor)?, base :=
// number | identifier | function '(' expr ')' | '(' expr ')'. '^' binds
// tighter than unary minus and associates right. Identifiers must appear
// in vars unless they are one of sin, cos, exp, ln, sqrt.
expr parse_expr(std::string_view text, std::span<const std::string> vars);

// Canonical printing: parse_expr(to_string(e)) is structurally equal to e
// for any tree over the grammar. Integer-valued constants print without
// a decimal point; everything else uses shortest round-trip form.
std::string to_string(const expr &e);
std::ostream &operator<<(std::ostream &os, const expr &e);

double eval_expr(const expr &e, const eval_context &ctx);
double eval_expr(const expr &e, const point &p);

// Partial derivative. The result is simplified.
expr diff_expr(const expr &e, std::string_view var);

// Gradient with respect to vars, in order.
std::vector<expr> grad(const expr &e, std::span<const std::string> vars);

// Value-preserving rewriting: constant folding, identity elimination,
// like-term and factor-exponent collection over +/- and */ chains (no
// distribution, no polynomial expansion). Idempotent; deterministic.
expr simplify(const expr &e);

// Replace variables by expressions, simultaneously. No simplification.
expr substitute(const expr &e, const std::map<std::string, expr> &repl);

void free_variables(const expr &e, std::set<std::string> &out);
std::set<std::string> free_variables(const expr &e);

} // namespace integrasym
