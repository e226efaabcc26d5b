#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include <integrasym/expr.hpp>

namespace integrasym
{

namespace
{

std::shared_ptr<const expr::node> make_constant_node(double v)
{
    auto n = std::make_shared<expr::node>();
    n->kind = expr_kind::constant;
    n->val = v;
    return n;
}

const std::shared_ptr<const expr::node> &zero_node()
{
    static const auto n = make_constant_node(0.);
    return n;
}

} // namespace

expr::expr() : m_node(zero_node())
{
}

expr expr::constant(double v)
{
    if (v == 0.) {
        return expr(zero_node());
    }
    return expr(make_constant_node(v));
}

expr expr::variable(std::string name)
{
    auto n = std::make_shared<node>();
    n->kind = expr_kind::variable;
    n->name = std::move(name);
    return expr(std::move(n));
}

expr expr::unary(expr_kind k, expr a)
{
    assert(is_unary(k));
    if (k == expr_kind::neg && a.is_constant()) {
        return constant(-a.value());
    }
    auto n = std::make_shared<node>();
    n->kind = k;
    n->kids.push_back(std::move(a));
    return expr(std::move(n));
}

expr expr::binary(expr_kind k, expr a, expr b)
{
    assert(is_binary(k));
    auto n = std::make_shared<node>();
    n->kind = k;
    n->kids.reserve(2);
    n->kids.push_back(std::move(a));
    n->kids.push_back(std::move(b));
    return expr(std::move(n));
}

bool expr::is_constant(double v) const noexcept
{
    return is_constant() && m_node->val == v;
}

double expr::value() const
{
    assert(is_constant());
    return m_node->val;
}

const std::string &expr::name() const
{
    assert(is_variable());
    return m_node->name;
}

bool structurally_equal(const expr &a, const expr &b) noexcept
{
    if (a.id() == b.id()) {
        return true;
    }
    if (a.kind() != b.kind()) {
        return false;
    }
    switch (a.kind()) {
        case expr_kind::constant:
            return a.value() == b.value();
        case expr_kind::variable:
            return a.name() == b.name();
        default:
            break;
    }
    const auto n = a.arity();
    if (n != b.arity()) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!structurally_equal(a.child(i), b.child(i))) {
            return false;
        }
    }
    return true;
}

int expr_compare(const expr &a, const expr &b) noexcept
{
    if (a.id() == b.id()) {
        return 0;
    }
    // Constants order first, then variables, then composites by kind.
    const auto rank = [](const expr &e) -> int {
        switch (e.kind()) {
            case expr_kind::constant:
                return 0;
            case expr_kind::variable:
                return 1;
            default:
                return 2 + static_cast<int>(e.kind());
        }
    };
    const int ra = rank(a), rb = rank(b);
    if (ra != rb) {
        return ra < rb ? -1 : 1;
    }
    switch (a.kind()) {
        case expr_kind::constant: {
            if (a.value() < b.value()) {
                return -1;
            }
            if (a.value() > b.value()) {
                return 1;
            }
            return 0;
        }
        case expr_kind::variable:
            return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
        default:
            break;
    }
    const auto na = a.arity(), nb = b.arity();
    if (na != nb) {
        return na < nb ? -1 : 1;
    }
    for (std::size_t i = 0; i < na; ++i) {
        if (const int c = expr_compare(a.child(i), b.child(i)); c != 0) {
            return c;
        }
    }
    return 0;
}

namespace
{

// Printing precedence levels. A node is parenthesized when its level is
// below the minimum its context demands.
constexpr int prec_add = 1;
constexpr int prec_mul = 2;
constexpr int prec_neg = 3;
constexpr int prec_pow = 4;
constexpr int prec_atom = 5;

int precedence(const expr &e)
{
    switch (e.kind()) {
        case expr_kind::add:
        case expr_kind::sub:
            return prec_add;
        case expr_kind::mul:
        case expr_kind::div:
            return prec_mul;
        case expr_kind::neg:
            return prec_neg;
        case expr_kind::constant:
            // Negative literals print with a leading '-', so they bind
            // like a unary minus.
            return e.value() < 0 ? prec_neg : prec_atom;
        case expr_kind::pow:
            return prec_pow;
        default:
            return prec_atom;
    }
}

void print_number(std::string &out, double v)
{
    // Integer-valued constants print exactly, without a decimal point,
    // so integer exponents survive print/parse round trips.
    if (v == 0.) {
        out += '0';
        return;
    }
    if (std::nearbyint(v) == v && std::abs(v) <= 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        out += buf;
        return;
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

const char *function_name(expr_kind k)
{
    switch (k) {
        case expr_kind::sin:
            return "sin";
        case expr_kind::cos:
            return "cos";
        case expr_kind::exp:
            return "exp";
        case expr_kind::ln:
            return "ln";
        case expr_kind::sqrt:
            return "sqrt";
        default:
            return "";
    }
}

void print_rec(std::string &out, const expr &e, int min_prec)
{
    const bool parens = precedence(e) < min_prec;
    if (parens) {
        out += '(';
    }
    switch (e.kind()) {
        case expr_kind::constant:
            print_number(out, e.value());
            break;
        case expr_kind::variable:
            out += e.name();
            break;
        case expr_kind::neg:
            out += '-';
            print_rec(out, e.child(0), prec_neg);
            break;
        case expr_kind::sin:
        case expr_kind::cos:
        case expr_kind::exp:
        case expr_kind::ln:
        case expr_kind::sqrt:
            out += function_name(e.kind());
            out += '(';
            print_rec(out, e.child(0), 0);
            out += ')';
            break;
        case expr_kind::add:
        case expr_kind::sub:
        case expr_kind::mul:
        case expr_kind::div: {
            // Left-associative: the right operand needs strictly higher
            // precedence or the reparse would rebalance the tree.
            const int p = precedence(e);
            print_rec(out, e.child(0), p);
            switch (e.kind()) {
                case expr_kind::add:
                    out += " + ";
                    break;
                case expr_kind::sub:
                    out += " - ";
                    break;
                case expr_kind::mul:
                    out += '*';
                    break;
                default:
                    out += '/';
                    break;
            }
            print_rec(out, e.child(1), p + 1);
            break;
        }
        case expr_kind::pow:
            // Right-associative, binds above unary minus: the base must be
            // an atom, the exponent may be any factor (including '-x').
            print_rec(out, e.child(0), prec_atom);
            out += '^';
            print_rec(out, e.child(1), prec_neg);
            break;
    }
    if (parens) {
        out += ')';
    }
}

} // namespace

std::string to_string(const expr &e)
{
    std::string out;
    print_rec(out, e, 0);
    return out;
}

std::ostream &operator<<(std::ostream &os, const expr &e)
{
    return os << to_string(e);
}

expr substitute(const expr &e, const std::map<std::string, expr> &repl)
{
    switch (e.kind()) {
        case expr_kind::constant:
            return e;
        case expr_kind::variable: {
            const auto it = repl.find(e.name());
            return it == repl.end() ? e : it->second;
        }
        default:
            break;
    }
    if (is_unary(e.kind())) {
        return expr::unary(e.kind(), substitute(e.child(0), repl));
    }
    return expr::binary(e.kind(), substitute(e.child(0), repl), substitute(e.child(1), repl));
}

void free_variables(const expr &e, std::set<std::string> &out)
{
    switch (e.kind()) {
        case expr_kind::constant:
            return;
        case expr_kind::variable:
            out.insert(e.name());
            return;
        default:
            for (std::size_t i = 0; i < e.arity(); ++i) {
                free_variables(e.child(i), out);
            }
    }
}

std::set<std::string> free_variables(const expr &e)
{
    std::set<std::string> out;
    free_variables(e, out);
    return out;
}

} // namespace integrasym
