#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>

#include <integrasym/detail/rng.hpp>
#include <integrasym/linalg.hpp>
#include <integrasym/symgen.hpp>

namespace integrasym
{

using detail::next_unit;

namespace
{

std::vector<std::string> default_u_names(std::size_t n)
{
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        names.push_back("u" + std::to_string(i));
    }
    return names;
}

double inf_norm(std::span<const double> v)
{
    double m = 0;
    for (const double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

} // namespace

vector_field euler_field(std::vector<std::string> u_names)
{
    std::vector<expr> components;
    components.reserve(u_names.size());
    for (const auto &name : u_names) {
        components.push_back(expr::variable(name));
    }
    return vector_field(std::move(u_names), std::move(components));
}

vector_field euler_field(std::size_t n)
{
    return euler_field(default_u_names(n));
}

kernel_element kernel_linear(const std::vector<double> &a_row_major, std::vector<std::string> u_names)
{
    const std::size_t n = u_names.size();
    if (a_row_major.size() != n * n) {
        throw dimension_error("kernel_linear: matrix has " + std::to_string(a_row_major.size())
                              + " entries, expected " + std::to_string(n * n));
    }
    std::vector<expr> components;
    components.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        expr row = expr::constant(0.);
        for (std::size_t j = 0; j < n; ++j) {
            row = expr::add(std::move(row), expr::mul(expr::constant(a_row_major[i * n + j]),
                                                      expr::variable(u_names[j])));
        }
        components.push_back(simplify(row));
    }
    kernel_element el{vector_field(std::move(u_names), std::move(components)), a_row_major, 0.};

    // Linear fields commute with the Euler field identically; the symbolic
    // commutator must collapse to the zero field. Fall back to sampling
    // only if it somehow does not.
    const vector_field bracket = lie_bracket(euler_field(el.ybar.variables()), el.ybar);
    bool exact = true;
    for (const auto &c : bracket.components()) {
        exact = exact && c.is_constant(0.);
    }
    el.residual = exact ? 0. : kernel_verify(el.ybar);
    return el;
}

kernel_element kernel_linear(const std::vector<double> &a_row_major, std::size_t n)
{
    return kernel_linear(a_row_major, default_u_names(n));
}

kernel_element kernel_expressions(vector_field ybar)
{
    const double res = kernel_verify(ybar);
    return kernel_element{std::move(ybar), std::nullopt, res};
}

double kernel_verify(const vector_field &ybar, std::uint64_t seed)
{
    const vector_field bracket = lie_bracket(euler_field(ybar.variables()), ybar);
    const std::size_t n = ybar.dimension();
    std::mt19937_64 eng(seed);
    std::vector<double> u(n);
    double worst = 0;
    for (int k = 0; k < 200; ++k) {
        for (auto &v : u) {
            v = 0.5 + 1.5 * next_unit(eng);
        }
        const eval_context ctx{ybar.variables(), u};
        for (const auto &c : bracket.components()) {
            worst = std::max(worst, std::abs(eval_expr(c, ctx)));
        }
    }
    return worst;
}

pullback_field::pullback_field(linearizing_chart chart, vector_field ybar, double delta_det)
    : m_chart(std::move(chart)), m_ybar(std::move(ybar)), m_delta_det(delta_det)
{
    const std::size_t n = m_chart.dimension();
    if (m_ybar.dimension() != n) {
        throw dimension_error("pullback_field: kernel field dimension does not match the chart");
    }
    m_dybar = jacobian_matrix(m_ybar);
    m_hessians.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Hessian of Phi_i: entry (j,k) = d2 Phi_i / dx_j dx_k. Symmetric.
        expr_matrix &h = m_hessians.emplace_back(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = j; k < n; ++k) {
                h.at(j, k) = diff_expr(m_chart.jacobian.at(i, j), m_chart.x_names[k]);
                if (k != j) {
                    h.at(k, j) = h.at(j, k);
                }
            }
        }
    }
    if (n <= 4) {
        // Adjugate route: Y_i = sum_j (-1)^{i+j} det(minor_ji) Ybar_j(Phi) / det DPhi.
        std::map<std::string, expr> into_u;
        for (std::size_t k = 0; k < n; ++k) {
            into_u.emplace(m_chart.u_names[k], m_chart.components[k]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            expr acc = expr::constant(0.);
            for (std::size_t j = 0; j < n; ++j) {
                expr_matrix minor(n - 1, n - 1);
                std::size_t rr = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == j) {
                        continue;
                    }
                    std::size_t cc = 0;
                    for (std::size_t c = 0; c < n; ++c) {
                        if (c == i) {
                            continue;
                        }
                        minor.at(rr, cc++) = m_chart.jacobian.at(r, c);
                    }
                    ++rr;
                }
                expr term = expr::mul(det_symbolic(minor),
                                      substitute(m_ybar.component(j), into_u));
                if ((i + j) % 2 == 1) {
                    term = expr::neg(std::move(term));
                }
                acc = expr::add(std::move(acc), std::move(term));
            }
            m_symbolic.push_back(simplify(expr::div(std::move(acc), m_chart.jacobian_det)));
        }
    }
}

namespace
{

// LU of DPhi(x) with the degeneracy policy shared by all pullback
// evaluations: reject when |det| <= delta * (1 + Hadamard bound).
lu_factors chart_jacobian_lu(const linearizing_chart &chart, std::span<const double> x,
                             double delta_det)
{
    const std::size_t n = chart.dimension();
    const eval_context ctx{chart.x_names, x};
    std::vector<double> jac(n * n);
    double hadamard = 1;
    for (std::size_t i = 0; i < n; ++i) {
        double row2 = 0;
        for (std::size_t j = 0; j < n; ++j) {
            jac[i * n + j] = eval_expr(chart.jacobian.at(i, j), ctx);
            row2 += jac[i * n + j] * jac[i * n + j];
        }
        hadamard *= std::sqrt(row2);
    }
    lu_factors lu(std::move(jac), n);
    if (lu.singular() || std::abs(lu.det()) <= delta_det * (1. + hadamard)) {
        throw singular_jacobian("pullback_field: chart Jacobian degenerate at the queried point");
    }
    return lu;
}

} // namespace

std::vector<double> pullback_field::operator()(std::span<const double> x) const
{
    std::vector<double> y;
    eval(x, y, nullptr);
    return y;
}

void pullback_field::eval(std::span<const double> x, std::vector<double> &y,
                          std::vector<double> *dy) const
{
    const std::size_t n = m_chart.dimension();
    const eval_context xctx{m_chart.x_names, x};

    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = eval_expr(m_chart.components[i], xctx);
    }
    const eval_context uctx{m_chart.u_names, u};

    const lu_factors lu = chart_jacobian_lu(m_chart, x, m_delta_det);

    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = eval_expr(m_ybar.component(i), uctx);
    }
    lu.solve(y);

    if (dy == nullptr) {
        return;
    }

    // M = (DYbar o Phi) DPhi - S, then DY column-solves DPhi DY = M.
    std::vector<double> dphi(n * n), dybar(n * n);
    const eval_context ctx{m_chart.x_names, x};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            dphi[i * n + j] = eval_expr(m_chart.jacobian.at(i, j), ctx);
            dybar[i * n + j] = eval_expr(m_dybar.at(i, j), uctx);
        }
    }
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0;
            for (std::size_t k = 0; k < n; ++k) {
                v += dybar[i * n + k] * dphi[k * n + j];
            }
            for (std::size_t k = 0; k < n; ++k) {
                v -= eval_expr(m_hessians[i].at(j, k), ctx) * y[k];
            }
            m[i * n + j] = v;
        }
    }
    dy->assign(n * n, 0.);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = m[i * n + j];
        }
        lu.solve(col);
        for (std::size_t i = 0; i < n; ++i) {
            (*dy)[i * n + j] = col[i];
        }
    }
}

mu_evaluator::mu_evaluator(const integrable_system &sys, field_fn y, double div_guard)
    : m_vars(sys.variables()), m_div(divergence(sys.field)),
      m_div_grad(grad(m_div, sys.variables())), m_y(std::move(y)), m_guard(div_guard)
{
}

double mu_evaluator::operator()(std::span<const double> x) const
{
    const eval_context ctx{m_vars, x};
    const double d = eval_expr(m_div, ctx);
    if (std::abs(d) <= m_guard) {
        throw degenerate_point("mu_evaluator: div X vanishes at the queried point");
    }
    const std::vector<double> y = m_y(x);
    double num = 0;
    for (std::size_t i = 0; i < m_vars.size(); ++i) {
        num += eval_expr(m_div_grad[i], ctx) * y[i];
    }
    return -num / d;
}

mu_evaluator mu_factor(const integrable_system &sys, field_fn y, double div_guard)
{
    return mu_evaluator(sys, std::move(y), div_guard);
}

symmetry_report symmetry_check(const integrable_system &sys, const pullback_field &y,
                               const mu_evaluator &mu, std::span<const point> pts)
{
    const std::size_t n = sys.dimension();
    const expr_matrix dx = jacobian_matrix(sys.field);

    symmetry_report rep;
    rep.residual.points = pts.size();
    rep.mu_min = std::numeric_limits<double>::infinity();
    rep.mu_max = -std::numeric_limits<double>::infinity();
    double sum = 0;

    std::vector<double> yv, dyv, xv(n), fd_col(n);
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const point &pt = pts[p];
        const eval_context ctx{pt.names, pt.coords};
        for (std::size_t i = 0; i < n; ++i) {
            xv[i] = eval_expr(sys.field.component(i), ctx);
        }
        y.eval(pt.coords, yv, &dyv);
        const double muv = mu(pt.coords);
        if (!std::isfinite(muv)) {
            rep.mu_finite = false;
        } else {
            rep.mu_min = std::min(rep.mu_min, muv);
            rep.mu_max = std::max(rep.mu_max, muv);
        }

        // Exact bracket: [X,Y] = DY X - DX Y.
        std::vector<double> bracket(n, 0.);
        for (std::size_t i = 0; i < n; ++i) {
            double v = 0;
            for (std::size_t j = 0; j < n; ++j) {
                v += dyv[i * n + j] * xv[j] - eval_expr(dx.at(i, j), ctx) * yv[j];
            }
            bracket[i] = v;
        }
        const double xscale = 1. + inf_norm(xv);
        double res = 0;
        for (std::size_t i = 0; i < n; ++i) {
            res = std::max(res, std::abs(bracket[i] - muv * xv[i]));
        }
        res /= xscale;
        sum += res;
        if (res > rep.residual.max) {
            rep.residual.max = res;
            rep.residual.worst_index = p;
            rep.residual.worst = pt;
        }

        // Finite-difference DY as an independent route to the bracket.
        std::vector<double> fd_bracket(n, 0.);
        std::vector<double> xp(pt.coords.begin(), pt.coords.end());
        for (std::size_t j = 0; j < n; ++j) {
            const double h = 1e-6 * (1. + std::abs(pt.coords[j]));
            xp[j] = pt.coords[j] + h;
            const std::vector<double> yp = y(xp);
            xp[j] = pt.coords[j] - h;
            const std::vector<double> ym = y(xp);
            xp[j] = pt.coords[j];
            for (std::size_t i = 0; i < n; ++i) {
                fd_bracket[i] += (yp[i] - ym[i]) / (2. * h) * xv[j];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                fd_bracket[i] -= eval_expr(dx.at(i, j), ctx) * yv[j];
            }
            rep.dy_fd_deviation = std::max(
                rep.dy_fd_deviation, std::abs(bracket[i] - fd_bracket[i]) / (1. + std::abs(bracket[i])));
        }
    }
    if (pts.empty()) {
        rep.mu_min = rep.mu_max = 0;
    }
    rep.residual.mean = pts.empty() ? 0. : sum / static_cast<double>(pts.size());
    return rep;
}

symmetry_certificate symmetry_certificate_for(const integrable_system &sys,
                                              const linearizing_chart &chart,
                                              const kernel_element &kernel,
                                              const sample_plan &plan)
{
    const std::vector<point> pts = sample_admissible(sys, plan);

    pullback_field y(chart, kernel.ybar, plan.delta_det);
    mu_evaluator mu = mu_factor(sys, y);

    std::optional<expr> mu_symbolic;
    if (!y.symbolic().empty()) {
        const expr div_x = divergence(sys.field);
        const std::vector<expr> g = grad(div_x, sys.variables());
        expr num = expr::constant(0.);
        for (std::size_t i = 0; i < sys.dimension(); ++i) {
            num = expr::add(std::move(num), expr::mul(g[i], y.symbolic()[i]));
        }
        mu_symbolic = simplify(expr::neg(expr::div(std::move(num), div_x)));
    }

    symmetry_report report = symmetry_check(sys, y, mu, pts);
    const bool valid = kernel.residual <= sys.tol.kernel && report.mu_finite
                       && report.residual.max <= sys.tol.symmetry;

    return symmetry_certificate{kernel,
                                std::move(y),
                                std::move(mu),
                                std::move(mu_symbolic),
                                std::move(report),
                                valid,
                                plan.seed,
                                sys.tol.symmetry};
}

integrable_system apply_rescaling(const integrable_system &sys, const expr &m)
{
    std::vector<expr> components;
    components.reserve(sys.dimension());
    for (const auto &c : sys.field.components()) {
        components.push_back(simplify(expr::mul(m, c)));
    }
    return make_system(vector_field(sys.variables(), std::move(components)), sys.casimirs,
                       sys.hamiltonian, simplify(expr::mul(m, sys.nu)), sys.domain, sys.tol,
                       sys.seed);
}

orbit_report orbit_permutation_check(const integrable_system &sys, const field_fn &y,
                                     const flow_spec &spec)
{
    const point x0 = sample_admissible(sys, make_plan(sys, 1)).front();

    const field_fn x_field = [field = sys.field](std::span<const double> x) {
        return field.eval(x);
    };

    std::vector<expr> integrals = sys.casimirs;
    integrals.push_back(sys.hamiltonian);

    constexpr std::size_t checkpoints = 17;
    orbit_report rep;
    rep.checkpoints = checkpoints;
    rep.epsilon = spec.epsilon;
    rep.per_integral.assign(integrals.size(), 0.);

    std::vector<double> reference(integrals.size());
    point current = x0;
    const double dt = spec.horizon / static_cast<double>(checkpoints - 1);
    for (std::size_t k = 0; k < checkpoints; ++k) {
        if (k > 0) {
            current = flow(x_field, current, dt, spec);
        }
        const point mapped = flow(y, current, spec.epsilon, spec);
        const eval_context ctx{mapped.names, mapped.coords};
        for (std::size_t i = 0; i < integrals.size(); ++i) {
            const double v = eval_expr(integrals[i], ctx);
            if (k == 0) {
                reference[i] = v;
            } else {
                const double drift = std::abs(v - reference[i]) / (1. + std::abs(reference[i]));
                rep.per_integral[i] = std::max(rep.per_integral[i], drift);
                rep.drift_max = std::max(rep.drift_max, drift);
            }
        }
    }
    return rep;
}

orbit_report orbit_permutation_check(const integrable_system &sys,
                                     const symmetry_certificate &cert, const flow_spec &spec)
{
    const field_fn y = [f = cert.y](std::span<const double> x) { return f(x); };
    return orbit_permutation_check(sys, y, spec);
}

double mu_cross_check(const integrable_system &sys, const symmetry_certificate &cert,
                      std::span<const point> pts)
{
    const linearizing_chart &chart = cert.y.chart();
    const vector_field &ybar = cert.y.ybar();
    const expr div_x = divergence(sys.field);
    const std::size_t n = sys.dimension();

    double worst = 0;
    for (const point &pt : pts) {
        const point u = chart_apply(chart, pt);
        const eval_context uctx{u.names, u.coords};
        const double h = -eval_expr(div_x, eval_context{pt.names, pt.coords});

        // Ybar(h)(u) = sum_i Ybar_i(u) dh/du_i, derivatives by central
        // differences with chart inversion supplying h off the orbit.
        double ybar_h = 0;
        point up = u;
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = 1e-6 * (1. + std::abs(u.coords[i]));
            up.coords[i] = u.coords[i] + delta;
            const point xp = chart_invert(chart, up, pt, sys.tol.delta_det);
            up.coords[i] = u.coords[i] - delta;
            const point xm = chart_invert(chart, up, pt, sys.tol.delta_det);
            up.coords[i] = u.coords[i];
            const double hp = -eval_expr(div_x, eval_context{xp.names, xp.coords});
            const double hm = -eval_expr(div_x, eval_context{xm.names, xm.coords});
            ybar_h += eval_expr(ybar.component(i), uctx) * (hp - hm) / (2. * delta);
        }
        const double mu_u = -ybar_h / h;
        const double mu_x = cert.mu(pt.coords);
        worst = std::max(worst, std::abs(mu_u - mu_x) / (1. + std::abs(mu_x)));
    }
    return worst;
}

} // namespace integrasym
