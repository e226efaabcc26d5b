#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <integrasym/expr.hpp>

namespace integrasym
{

namespace
{

bool is_integral(double v)
{
    return std::nearbyint(v) == v && std::abs(v) <= 1e15;
}

// ---------------------------------------------------------------------
// Factor collection over */"/"-chains.
//
// A product node is flattened into coeff * prod(base_i ^ exp_i), merging
// constant exponents of structurally equal bases, folding constants into
// the coefficient, and pulling signs out of neg nodes. No distribution:
// sums stay opaque factors. Rebuilding sorts bases by expr_compare, so
// a*b and b*a normalize to the same tree.
// ---------------------------------------------------------------------

struct factor_list {
    double coeff = 1;
    bool ok = true;
    std::vector<std::pair<expr, double>> items;

    void push(const expr &base, double exp)
    {
        if (!std::isfinite(exp)) {
            ok = false;
            return;
        }
        for (auto &[b, e] : items) {
            if (structurally_equal(b, base)) {
                e += exp;
                if (!std::isfinite(e)) {
                    ok = false;
                }
                return;
            }
        }
        items.emplace_back(base, exp);
    }

    void scale(double f)
    {
        coeff *= f;
        if (!std::isfinite(coeff)) {
            ok = false;
        }
    }
};

void collect_factors(const expr &e, double m, factor_list &out)
{
    if (!out.ok) {
        return;
    }
    switch (e.kind()) {
        case expr_kind::mul:
            collect_factors(e.child(0), m, out);
            collect_factors(e.child(1), m, out);
            return;
        case expr_kind::div:
            collect_factors(e.child(0), m, out);
            collect_factors(e.child(1), -m, out);
            return;
        case expr_kind::neg:
            // (-a)^m = (-1)^m * a^m for integral m only.
            if (is_integral(m)) {
                if (std::fmod(m, 2.) != 0.) {
                    out.scale(-1);
                }
                collect_factors(e.child(0), m, out);
            } else {
                out.push(e, m);
            }
            return;
        case expr_kind::constant: {
            const double v = e.value();
            if (m == 0.) {
                return; // v^0 = 1, including 0^0 by pow convention
            }
            if (v == 0.) {
                if (m > 0.) {
                    out.scale(0);
                } else {
                    out.push(e, m); // keep x/0 unfolded
                }
                return;
            }
            if (v < 0. && !is_integral(m)) {
                out.push(e, m); // domain error preserved for eval to raise
                return;
            }
            const double f = std::pow(v, m);
            if (!std::isfinite(f)) {
                out.push(e, m);
                return;
            }
            out.scale(f);
            return;
        }
        case expr_kind::pow:
            if (e.child(1).is_constant()) {
                const double c = m * e.child(1).value();
                if (std::isfinite(c)) {
                    collect_factors(e.child(0), c, out);
                    return;
                }
            }
            out.push(e, m);
            return;
        default:
            out.push(e, m);
            return;
    }
}

expr make_pow(const expr &base, double exp)
{
    return exp == 1. ? base : expr::pow(base, expr::constant(exp));
}

expr rebuild_factors(factor_list &fl, const expr &original)
{
    if (!fl.ok) {
        return original;
    }
    if (fl.coeff == 0.) {
        return expr::constant(0.);
    }
    std::vector<std::pair<expr, double>> num, den;
    for (auto &[b, e] : fl.items) {
        if (e > 0.) {
            num.emplace_back(b, e);
        } else if (e < 0.) {
            den.emplace_back(b, -e);
        }
    }
    const auto by_base = [](const auto &x, const auto &y) { return expr_compare(x.first, y.first) < 0; };
    std::sort(num.begin(), num.end(), by_base);
    std::sort(den.begin(), den.end(), by_base);

    double c = fl.coeff;
    bool wrap_neg = false;
    if (c == -1. && !num.empty()) {
        wrap_neg = true;
        c = 1.;
    }
    expr acc;
    bool have = false;
    if (c != 1. || num.empty()) {
        acc = expr::constant(c);
        have = true;
    }
    for (const auto &[b, e] : num) {
        expr t = make_pow(b, e);
        acc = have ? expr::mul(std::move(acc), std::move(t)) : std::move(t);
        have = true;
    }
    if (!den.empty()) {
        expr dacc = make_pow(den[0].first, den[0].second);
        for (std::size_t i = 1; i < den.size(); ++i) {
            dacc = expr::mul(std::move(dacc), make_pow(den[i].first, den[i].second));
        }
        acc = expr::div(std::move(acc), std::move(dacc));
    }
    return wrap_neg ? expr::neg(std::move(acc)) : acc;
}

// ---------------------------------------------------------------------
// Term collection over +/- chains.
//
// A sum node is flattened into const + sum(coeff_i * key_i), where keys
// are term bodies with their leading numeric coefficient peeled off.
// Structurally equal keys combine, so x - x cancels exactly and
// 2*x + 3*x becomes 5*x. Keys sort by expr_compare on rebuild.
// ---------------------------------------------------------------------

struct term_list {
    double const_term = 0;
    bool ok = true;
    std::vector<std::pair<expr, double>> items;

    void push(const expr &key, double coeff)
    {
        if (!std::isfinite(coeff)) {
            ok = false;
            return;
        }
        for (auto &[k, c] : items) {
            if (structurally_equal(k, key)) {
                c += coeff;
                if (!std::isfinite(c)) {
                    ok = false;
                }
                return;
            }
        }
        items.emplace_back(key, coeff);
    }
};

// Splits a canonical term into (numeric coefficient, coefficient-free
// key). Canonical products carry their constant at the head of the left
// spine, so peeling only needs to walk spines, not whole trees.
std::pair<double, expr> peel_coeff(const expr &e)
{
    switch (e.kind()) {
        case expr_kind::constant:
            return {e.value(), expr::constant(1.)};
        case expr_kind::neg: {
            auto [c, k] = peel_coeff(e.child(0));
            return {-c, std::move(k)};
        }
        case expr_kind::mul: {
            auto [c, k] = peel_coeff(e.child(0));
            if (c == 1.) {
                return {1., e};
            }
            if (k.is_constant(1.)) {
                return {c, e.child(1)};
            }
            return {c, expr::mul(std::move(k), e.child(1))};
        }
        case expr_kind::div: {
            auto [c, k] = peel_coeff(e.child(0));
            if (c == 1.) {
                return {1., e};
            }
            return {c, expr::div(std::move(k), e.child(1))};
        }
        default:
            return {1., e};
    }
}

void collect_terms(const expr &e, double m, term_list &out)
{
    if (!out.ok) {
        return;
    }
    switch (e.kind()) {
        case expr_kind::add:
            collect_terms(e.child(0), m, out);
            collect_terms(e.child(1), m, out);
            return;
        case expr_kind::sub:
            collect_terms(e.child(0), m, out);
            collect_terms(e.child(1), -m, out);
            return;
        case expr_kind::neg:
            collect_terms(e.child(0), -m, out);
            return;
        case expr_kind::constant:
            out.const_term += m * e.value();
            if (!std::isfinite(out.const_term)) {
                out.ok = false;
            }
            return;
        default: {
            const auto [c, k] = peel_coeff(e);
            out.push(k, m * c);
            return;
        }
    }
}

expr rebuild_term(double coeff, const expr &key)
{
    if (coeff == 1.) {
        return key;
    }
    if (coeff == -1.) {
        return expr::neg(key);
    }
    // Route through factor normalization so coeff lands where the product
    // canonicalization would put it (head of the spine, or the numerator
    // of a quotient) and the result is a simplify fixpoint.
    factor_list fl;
    collect_factors(key, 1., fl);
    fl.scale(coeff);
    return rebuild_factors(fl, expr::mul(expr::constant(coeff), key));
}

expr rebuild_terms(term_list &tl, const expr &original)
{
    if (!tl.ok) {
        return original;
    }
    std::vector<std::pair<expr, double>> items;
    for (auto &[k, c] : tl.items) {
        if (c != 0.) {
            items.emplace_back(k, c);
        }
    }
    std::sort(items.begin(), items.end(),
              [](const auto &x, const auto &y) { return expr_compare(x.first, y.first) < 0; });

    expr acc;
    bool have = false;
    if (tl.const_term != 0. || items.empty()) {
        acc = expr::constant(tl.const_term);
        have = true;
    }
    for (const auto &[k, c] : items) {
        if (!have) {
            acc = rebuild_term(c, k);
            have = true;
        } else if (c < 0.) {
            acc = expr::sub(std::move(acc), rebuild_term(-c, k));
        } else {
            acc = expr::add(std::move(acc), rebuild_term(c, k));
        }
    }
    return acc;
}

// ---------------------------------------------------------------------

// Folds a unary function of a constant when the result is finite and the
// argument is inside the function's domain; otherwise keeps the node.
expr fold_function(const expr &e)
{
    const double a = e.child(0).value();
    double v = 0;
    switch (e.kind()) {
        case expr_kind::sin:
            v = std::sin(a);
            break;
        case expr_kind::cos:
            v = std::cos(a);
            break;
        case expr_kind::exp:
            v = std::exp(a);
            break;
        case expr_kind::ln:
            if (a <= 0.) {
                return e;
            }
            v = std::log(a);
            break;
        case expr_kind::sqrt:
            if (a < 0.) {
                return e;
            }
            v = std::sqrt(a);
            break;
        default:
            return e;
    }
    return std::isfinite(v) ? expr::constant(v) : e;
}

// Kids are already simplified; normalize this node.
expr simplify_node(const expr &e)
{
    switch (e.kind()) {
        case expr_kind::constant:
        case expr_kind::variable:
            return e;
        case expr_kind::sin:
        case expr_kind::cos:
        case expr_kind::exp:
        case expr_kind::ln:
        case expr_kind::sqrt:
            return e.child(0).is_constant() ? fold_function(e) : e;
        case expr_kind::neg:
        case expr_kind::add:
        case expr_kind::sub: {
            term_list tl;
            collect_terms(e, 1., tl);
            expr r = rebuild_terms(tl, e);
            return structurally_equal(r, e) ? e : r;
        }
        case expr_kind::mul:
        case expr_kind::div: {
            factor_list fl;
            collect_factors(e, 1., fl);
            expr r = rebuild_factors(fl, e);
            return structurally_equal(r, e) ? e : r;
        }
        case expr_kind::pow: {
            if (e.child(1).is_constant()) {
                factor_list fl;
                collect_factors(e, 1., fl);
                expr r = rebuild_factors(fl, e);
                return structurally_equal(r, e) ? e : r;
            }
            if (e.child(0).is_constant(1.)) {
                return expr::constant(1.);
            }
            return e;
        }
    }
    return e;
}

expr simplify_rec(const expr &e)
{
    if (e.is_constant() || e.is_variable()) {
        return e;
    }
    bool changed = false;
    std::vector<expr> kids;
    kids.reserve(e.arity());
    for (std::size_t i = 0; i < e.arity(); ++i) {
        kids.push_back(simplify_rec(e.child(i)));
        changed = changed || kids.back().id() != e.child(i).id();
    }
    expr base = e;
    if (changed) {
        base = is_unary(e.kind()) ? expr::unary(e.kind(), std::move(kids[0]))
                                  : expr::binary(e.kind(), std::move(kids[0]), std::move(kids[1]));
    }
    return simplify_node(base);
}

expr diff_raw(const expr &e, std::string_view var)
{
    switch (e.kind()) {
        case expr_kind::constant:
            return expr::constant(0.);
        case expr_kind::variable:
            return expr::constant(e.name() == var ? 1. : 0.);
        case expr_kind::neg:
            return expr::neg(diff_raw(e.child(0), var));
        case expr_kind::sin:
            return expr::mul(expr::cos(e.child(0)), diff_raw(e.child(0), var));
        case expr_kind::cos:
            return expr::neg(expr::mul(expr::sin(e.child(0)), diff_raw(e.child(0), var)));
        case expr_kind::exp:
            return expr::mul(e, diff_raw(e.child(0), var));
        case expr_kind::ln:
            return expr::div(diff_raw(e.child(0), var), e.child(0));
        case expr_kind::sqrt:
            return expr::div(diff_raw(e.child(0), var), expr::mul(expr::constant(2.), e));
        case expr_kind::add:
            return expr::add(diff_raw(e.child(0), var), diff_raw(e.child(1), var));
        case expr_kind::sub:
            return expr::sub(diff_raw(e.child(0), var), diff_raw(e.child(1), var));
        case expr_kind::mul:
            return expr::add(expr::mul(diff_raw(e.child(0), var), e.child(1)),
                             expr::mul(e.child(0), diff_raw(e.child(1), var)));
        case expr_kind::div:
            return expr::div(expr::sub(expr::mul(diff_raw(e.child(0), var), e.child(1)),
                                       expr::mul(e.child(0), diff_raw(e.child(1), var))),
                             expr::pow(e.child(1), expr::constant(2.)));
        case expr_kind::pow: {
            const expr &a = e.child(0);
            const expr &b = e.child(1);
            if (b.is_constant()) {
                // d(a^c) = c * a^(c-1) * a'
                return expr::mul(
                    expr::mul(b, expr::pow(a, expr::constant(b.value() - 1.))),
                    diff_raw(a, var));
            }
            if (a.is_constant()) {
                // d(c^b) = c^b * ln(c) * b'
                return expr::mul(e, expr::mul(expr::ln(a), diff_raw(b, var)));
            }
            // d(a^b) = a^b * (b' * ln(a) + b * a' / a)
            return expr::mul(e, expr::add(expr::mul(diff_raw(b, var), expr::ln(a)),
                                          expr::div(expr::mul(b, diff_raw(a, var)), a)));
        }
    }
    return expr::constant(0.);
}

} // namespace

expr simplify(const expr &e)
{
    return simplify_rec(e);
}

expr diff_expr(const expr &e, std::string_view var)
{
    return simplify(diff_raw(e, var));
}

std::vector<expr> grad(const expr &e, std::span<const std::string> vars)
{
    std::vector<expr> out;
    out.reserve(vars.size());
    for (const auto &v : vars) {
        out.push_back(diff_expr(e, v));
    }
    return out;
}

} // namespace integrasym
