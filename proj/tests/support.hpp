#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <integrasym/detail/rng.hpp>
#include <integrasym/symgen.hpp>

namespace testsupport
{

using namespace integrasym;

// Central finite difference with step h = 1e-6 * (1 + |p_v|): the shared
// oracle for every derivative claim in the suite.
inline double central_fd(const expr &e, const std::string &var, const point &p)
{
    std::size_t idx = p.names.size();
    for (std::size_t i = 0; i < p.names.size(); ++i) {
        if (p.names[i] == var) {
            idx = i;
        }
    }
    point shifted = p;
    const double h = 1e-6 * (1. + std::abs(p.coords[idx]));
    shifted.coords[idx] = p.coords[idx] + h;
    const double fp = eval_expr(e, shifted);
    shifted.coords[idx] = p.coords[idx] - h;
    const double fm = eval_expr(e, shifted);
    return (fp - fm) / (2. * h);
}

// Random expressions that stay finite and pole-free on [0.5, 2]^n:
// denominators, ln and sqrt arguments come from a sign-definite
// sub-grammar, exp arguments are damped, pow exponents are small integers.
class expr_gen
{
public:
    expr_gen(std::vector<std::string> vars, std::uint64_t seed)
        : m_vars(std::move(vars)), m_eng(seed)
    {
    }

    expr next(int depth = 4)
    {
        return gen(depth);
    }

    point sample_point()
    {
        point p;
        p.names = m_vars;
        p.coords.reserve(m_vars.size());
        for (std::size_t i = 0; i < m_vars.size(); ++i) {
            p.coords.push_back(0.5 + 1.5 * detail::next_unit(m_eng));
        }
        return p;
    }

private:
    double unit()
    {
        return detail::next_unit(m_eng);
    }

    expr leaf()
    {
        if (unit() < 0.4) {
            return expr::constant(0.25 + 1.75 * unit());
        }
        return expr::variable(m_vars[static_cast<std::size_t>(unit() * 0.999
                                                              * static_cast<double>(m_vars.size()))]);
    }

    expr gen_positive(int depth)
    {
        if (depth <= 0) {
            return unit() < 0.5 ? expr::constant(0.5 + 1.5 * unit())
                                : expr::variable(m_vars[static_cast<std::size_t>(
                                      unit() * 0.999 * static_cast<double>(m_vars.size()))]);
        }
        const double r = unit();
        if (r < 0.30) {
            return expr::add(gen_positive(depth - 1), gen_positive(depth - 1));
        }
        if (r < 0.55) {
            return expr::mul(gen_positive(depth - 1), gen_positive(depth - 1));
        }
        if (r < 0.70) {
            return expr::div(gen_positive(depth - 1), gen_positive(depth - 1));
        }
        if (r < 0.80) {
            return expr::sqrt(gen_positive(depth - 1));
        }
        if (r < 0.90) {
            return expr::pow(gen_positive(depth - 1),
                             expr::constant(static_cast<double>(2 + (unit() < 0.5))));
        }
        return gen_positive(0);
    }

    expr gen(int depth)
    {
        if (depth <= 0) {
            return leaf();
        }
        const double r = unit();
        if (r < 0.15) {
            return expr::add(gen(depth - 1), gen(depth - 1));
        }
        if (r < 0.30) {
            return expr::sub(gen(depth - 1), gen(depth - 1));
        }
        if (r < 0.45) {
            return expr::mul(gen(depth - 1), gen(depth - 1));
        }
        if (r < 0.58) {
            return expr::div(gen(depth - 1), gen_positive(depth - 1));
        }
        if (r < 0.66) {
            return expr::sin(gen(depth - 1));
        }
        if (r < 0.74) {
            return expr::cos(gen(depth - 1));
        }
        if (r < 0.80) {
            return expr::exp(expr::mul(expr::constant(0.25), gen(depth - 2 > 0 ? depth - 2 : 0)));
        }
        if (r < 0.86) {
            return expr::ln(gen_positive(depth - 1));
        }
        if (r < 0.92) {
            return expr::sqrt(gen_positive(depth - 1));
        }
        if (r < 0.97) {
            return expr::pow(gen_positive(depth - 1),
                             expr::constant(static_cast<double>(2 + (unit() < 0.5))));
        }
        return expr::neg(gen(depth - 1));
    }

    std::vector<std::string> m_vars;
    std::mt19937_64 m_eng;
};

inline std::vector<std::string> vars2()
{
    return {"x1", "x2"};
}

inline std::vector<std::string> vars3()
{
    return {"x1", "x2", "x3"};
}

inline expr parse2(const std::string &text)
{
    const auto v = vars2();
    return parse_expr(text, v);
}

inline expr parse3(const std::string &text)
{
    const auto v = vars3();
    return parse_expr(text, v);
}

// X = (x1, x2), H = x2/x1, nu = x1^2: every point of the box is
// admissible and the chart is (1/x1^2, x2/x1^3).
inline integrable_system scaling2d()
{
    return make_system(vector_field(vars2(), {parse2("x1"), parse2("x2")}), {}, parse2("x2/x1"),
                       parse2("x1^2"), {{0.5, 2.}, {-1., 1.}}, {}, 42);
}

// X = (x1^2, x1*x2) = x1 * scaling2d, nu = x1^3: trajectories blow up in
// finite time, so the box keeps x1 small enough for a unit horizon.
inline integrable_system quadratic2d()
{
    return make_system(vector_field(vars2(), {parse2("x1^2"), parse2("x1*x2")}), {},
                       parse2("x2/x1"), parse2("x1^3"), {{0.5, 0.6}, {0.5, 2.}}, {}, 42);
}

// Divergence-free: X = (x2*x3, -2*x1*x3, x1*x2) with Casimir
// C = (x1^2+x2^2+x3^2)/2, H = x1^2 - x3^2, nu = 1/2. The chart
// construction degenerates everywhere (div X == 0, nu constant).
inline integrable_system rigidbody3d()
{
    return make_system(
        vector_field(vars3(), {parse3("x2*x3"), parse3("-2*x1*x3"), parse3("x1*x2")}),
        {parse3("0.5*(x1^2 + x2^2 + x3^2)")}, parse3("x1^2 - x3^2"), parse3("0.5"),
        {{0.5, 2.}, {0.5, 2.}, {0.5, 2.}}, {}, 42);
}

inline integrable_system rigidbody3d_rescaled()
{
    return apply_rescaling(rigidbody3d(), expr::variable("x1"));
}

} // namespace testsupport
