#include <cmath>
#include <string>

#include <integrasym/expr.hpp>

namespace integrasym
{

namespace
{

// Guard against effective division by zero well below any meaningful
// magnitude for this domain.
constexpr double div_guard = 1e-300;

double eval_rec(const expr &e, const eval_context &ctx)
{
    switch (e.kind()) {
        case expr_kind::constant:
            return e.value();
        case expr_kind::variable: {
            // Linear scan: contexts here have a handful of names.
            for (std::size_t i = 0; i < ctx.names.size(); ++i) {
                if (ctx.names[i] == e.name()) {
                    return ctx.values[i];
                }
            }
            throw unbound_variable("unbound variable '" + e.name() + "'");
        }
        case expr_kind::neg:
            return -eval_rec(e.child(0), ctx);
        case expr_kind::sin:
            return std::sin(eval_rec(e.child(0), ctx));
        case expr_kind::cos:
            return std::cos(eval_rec(e.child(0), ctx));
        case expr_kind::exp: {
            const double v = std::exp(eval_rec(e.child(0), ctx));
            if (!std::isfinite(v)) {
                throw eval_error("exp overflow");
            }
            return v;
        }
        case expr_kind::ln: {
            const double a = eval_rec(e.child(0), ctx);
            if (a <= 0.) {
                throw math_domain_error("ln of non-positive value " + std::to_string(a));
            }
            return std::log(a);
        }
        case expr_kind::sqrt: {
            const double a = eval_rec(e.child(0), ctx);
            if (a < 0.) {
                throw math_domain_error("sqrt of negative value " + std::to_string(a));
            }
            return std::sqrt(a);
        }
        case expr_kind::add:
            return eval_rec(e.child(0), ctx) + eval_rec(e.child(1), ctx);
        case expr_kind::sub:
            return eval_rec(e.child(0), ctx) - eval_rec(e.child(1), ctx);
        case expr_kind::mul:
            return eval_rec(e.child(0), ctx) * eval_rec(e.child(1), ctx);
        case expr_kind::div: {
            const double num = eval_rec(e.child(0), ctx);
            const double den = eval_rec(e.child(1), ctx);
            if (std::abs(den) <= div_guard) {
                throw division_by_zero("division by zero");
            }
            return num / den;
        }
        case expr_kind::pow: {
            const double b = eval_rec(e.child(0), ctx);
            const double x = eval_rec(e.child(1), ctx);
            if (std::nearbyint(x) == x && std::abs(x) <= 1e9) {
                // Integral exponent: negative bases are fine.
                if (b == 0. && x < 0.) {
                    throw division_by_zero("zero base with negative exponent");
                }
                const double v = std::pow(b, x);
                if (!std::isfinite(v)) {
                    throw eval_error("pow overflow");
                }
                return v;
            }
            if (b < 0.) {
                throw math_domain_error("negative base with non-integral exponent");
            }
            if (b == 0. && x < 0.) {
                throw division_by_zero("zero base with negative exponent");
            }
            const double v = std::pow(b, x);
            if (!std::isfinite(v)) {
                throw eval_error("pow overflow");
            }
            return v;
        }
    }
    throw eval_error("corrupt expression node");
}

} // namespace

double eval_expr(const expr &e, const eval_context &ctx)
{
    return eval_rec(e, ctx);
}

double eval_expr(const expr &e, const point &p)
{
    return eval_rec(e, eval_context{p.names, p.coords});
}

} // namespace integrasym
