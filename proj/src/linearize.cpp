#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include <integrasym/detail/rng.hpp>
#include <integrasym/linalg.hpp>
#include <integrasym/linearize.hpp>

namespace integrasym
{

using detail::next_unit;

namespace
{

std::vector<expr> chart_functions(const integrable_system &sys)
{
    std::vector<expr> fs;
    fs.reserve(sys.dimension());
    fs.push_back(simplify(expr::div(expr::constant(1.), sys.nu)));
    for (const auto &c : sys.casimirs) {
        fs.push_back(simplify(expr::div(c, sys.nu)));
    }
    fs.push_back(simplify(expr::div(sys.hamiltonian, sys.nu)));
    return fs;
}

} // namespace

std::vector<std::string> chart_target_names(const std::vector<std::string> &x_names,
                                            std::size_t n)
{
    std::string prefix = "u";
    for (bool collision = true; collision;) {
        collision = false;
        for (std::size_t i = 1; i <= n && !collision; ++i) {
            const std::string candidate = prefix + std::to_string(i);
            collision = std::find(x_names.begin(), x_names.end(), candidate) != x_names.end();
        }
        if (collision) {
            prefix += "u";
        }
    }
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        names.push_back(prefix + std::to_string(i));
    }
    return names;
}

sample_plan make_plan(const integrable_system &sys, std::size_t count)
{
    sample_plan plan;
    plan.count = count;
    plan.seed = sys.seed;
    plan.box = sys.domain;
    plan.delta_nu = sys.tol.delta_nu;
    plan.delta_oset = sys.tol.delta_oset;
    plan.delta_det = sys.tol.delta_det;
    return plan;
}

oset_form make_oset_form(const integrable_system &sys)
{
    oset_form form;
    form.div_x = divergence(sys.field);
    // Rows in chart-component order scaled back by nu: 1/nu, C_k, H.
    std::vector<expr> fs;
    fs.reserve(sys.dimension());
    fs.push_back(simplify(expr::div(expr::constant(1.), sys.nu)));
    for (const auto &c : sys.casimirs) {
        fs.push_back(c);
    }
    fs.push_back(sys.hamiltonian);
    form.jacobian = jacobian_matrix(fs, sys.variables());
    form.jacobian_det = det_symbolic(form.jacobian);
    return form;
}

double oset_value(const oset_form &form, const eval_context &ctx)
{
    return eval_expr(form.div_x, ctx) * eval_expr(form.jacobian_det, ctx);
}

double oset_value(const integrable_system &sys, const point &p)
{
    return oset_value(make_oset_form(sys), eval_context{p.names, p.coords});
}

double oset_scale(const oset_form &form, const eval_context &ctx)
{
    const std::size_t n = form.jacobian.rows();
    double hadamard = 1;
    for (std::size_t i = 0; i < n; ++i) {
        double row2 = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = eval_expr(form.jacobian.at(i, j), ctx);
            row2 += v * v;
        }
        hadamard *= std::sqrt(row2);
    }
    return 1. + std::abs(eval_expr(form.div_x, ctx)) * hadamard;
}

linearizing_chart build_chart(const integrable_system &sys)
{
    linearizing_chart chart;
    chart.x_names = sys.variables();
    chart.u_names = chart_target_names(chart.x_names, sys.dimension());
    chart.components = chart_functions(sys);
    chart.jacobian = jacobian_matrix(chart.components, chart.x_names);
    chart.jacobian_det = det_symbolic(chart.jacobian);
    return chart;
}

std::vector<point> sample_admissible(const integrable_system &sys, const sample_plan &plan,
                                     sample_diagnostics *diag)
{
    if (plan.count == 0) {
        throw error("sample_admissible: plan.count must be at least 1");
    }
    if (plan.box.size() != sys.dimension()) {
        throw dimension_error("sample_admissible: box dimension does not match the system");
    }
    if (!(plan.delta_nu > 0.) || !(plan.delta_oset > 0.) || !(plan.delta_det > 0.)) {
        throw error("sample_admissible: rejection thresholds must be positive");
    }

    const oset_form form = make_oset_form(sys);
    const linearizing_chart chart = build_chart(sys);

    sample_diagnostics local;
    sample_diagnostics &d = diag ? *diag : local;
    d = sample_diagnostics{};

    std::mt19937_64 eng(plan.seed);
    const std::size_t budget = 100 * plan.count;
    std::vector<point> accepted;
    accepted.reserve(plan.count);
    std::vector<double> x(sys.dimension());

    while (accepted.size() < plan.count && d.draws < budget) {
        ++d.draws;
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = plan.box[i].lo + (plan.box[i].hi - plan.box[i].lo) * next_unit(eng);
        }
        const eval_context ctx{chart.x_names, x};
        try {
            const double nu = eval_expr(sys.nu, ctx);
            if (std::abs(nu) <= plan.delta_nu) {
                ++d.rejected_nu;
                continue;
            }
            // Track extremes feeding the degeneracy diagnosis before the
            // accept/reject decision, so they cover every valid draw.
            const double div_x = eval_expr(form.div_x, ctx);
            const double jac_det = eval_expr(form.jacobian_det, ctx);
            d.max_abs_divergence = std::max(d.max_abs_divergence, std::abs(div_x));
            d.max_abs_jac_det = std::max(d.max_abs_jac_det, std::abs(jac_det));
            for (std::size_t j = 0; j < sys.dimension(); ++j) {
                d.max_abs_nu_gradient = std::max(
                    d.max_abs_nu_gradient, std::abs(eval_expr(form.jacobian.at(0, j), ctx)));
            }

            const double oset = div_x * jac_det;
            if (std::abs(oset) <= plan.delta_oset * oset_scale(form, ctx)) {
                ++d.rejected_oset;
                continue;
            }
            const double chart_det = eval_expr(chart.jacobian_det, ctx);
            double hadamard = 1;
            for (std::size_t i = 0; i < sys.dimension(); ++i) {
                double row2 = 0;
                for (std::size_t j = 0; j < sys.dimension(); ++j) {
                    const double v = eval_expr(chart.jacobian.at(i, j), ctx);
                    row2 += v * v;
                }
                hadamard *= std::sqrt(row2);
            }
            if (std::abs(chart_det) <= plan.delta_det * (1. + hadamard)) {
                ++d.rejected_det;
                continue;
            }
        } catch (const eval_error &) {
            ++d.rejected_eval;
            continue;
        }
        accepted.push_back(point{chart.x_names, x});
        ++d.accepted;
    }

    if (accepted.size() < plan.count) {
        throw admissibility_exhausted(
            "sample_admissible: " + std::to_string(d.accepted) + " admissible points in "
            + std::to_string(d.draws) + " draws (budget " + std::to_string(budget) + ")");
    }
    return accepted;
}

point chart_apply(const linearizing_chart &chart, const point &x)
{
    const eval_context ctx{x.names, x.coords};
    point u;
    u.names = chart.u_names;
    u.coords.reserve(chart.dimension());
    for (const auto &c : chart.components) {
        u.coords.push_back(eval_expr(c, ctx));
    }
    return u;
}

namespace
{

double inf_norm(std::span<const double> v)
{
    double m = 0;
    for (const double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

// Phi(x) - u, or nothing when evaluation faults (treated by the caller
// as a rejected trial step).
bool try_residual(const linearizing_chart &chart, std::span<const double> x,
                  std::span<const double> u, std::vector<double> &out)
{
    const eval_context ctx{chart.x_names, x};
    try {
        for (std::size_t i = 0; i < chart.dimension(); ++i) {
            out[i] = eval_expr(chart.components[i], ctx) - u[i];
        }
    } catch (const eval_error &) {
        return false;
    }
    return true;
}

} // namespace

point chart_invert(const linearizing_chart &chart, const point &u, const point &x0,
                   double delta_det)
{
    const std::size_t n = chart.dimension();
    std::vector<double> x = x0.coords;
    std::vector<double> r(n), trial(n), rt(n);
    const double tol = 1e-12 * (1. + inf_norm(u.coords));

    if (!try_residual(chart, x, u.coords, r)) {
        throw no_convergence("chart_invert: cannot evaluate the chart at the starting guess");
    }
    for (int iter = 0; iter < 50; ++iter) {
        double rnorm = inf_norm(r);
        if (rnorm <= tol) {
            return point{chart.x_names, x};
        }

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
        const lu_factors lu(std::move(jac), n);
        if (lu.singular() || std::abs(lu.det()) <= delta_det * (1. + hadamard)) {
            throw singular_jacobian("chart_invert: chart Jacobian degenerate at iterate "
                                    + std::to_string(iter));
        }
        std::vector<double> step(r);
        lu.solve(step);

        // Step halving: insist on strict residual decrease.
        double alpha = 1;
        bool advanced = false;
        for (int h = 0; h <= 20; ++h) {
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = x[i] - alpha * step[i];
            }
            if (try_residual(chart, trial, u.coords, rt) && inf_norm(rt) < rnorm) {
                x = trial;
                r = rt;
                advanced = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!advanced) {
            throw no_convergence("chart_invert: no residual decrease after 20 halvings");
        }
    }
    if (inf_norm(r) <= tol) {
        return point{chart.x_names, x};
    }
    throw no_convergence("chart_invert: residual " + std::to_string(inf_norm(r))
                         + " after 50 iterations");
}

residual_report linearization_check(const integrable_system &sys, const linearizing_chart &chart,
                                    std::span<const point> pts)
{
    const expr div_x = divergence(sys.field);
    const std::size_t n = sys.dimension();
    residual_report rep;
    rep.points = pts.size();
    double sum = 0;
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const eval_context ctx{pts[p].names, pts[p].coords};
        const double dv = eval_expr(div_x, ctx);
        double res = 0, scale = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0;
            for (std::size_t j = 0; j < n; ++j) {
                row += eval_expr(chart.jacobian.at(i, j), ctx)
                       * eval_expr(sys.field.component(j), ctx);
            }
            const double drift = dv * eval_expr(chart.components[i], ctx);
            res = std::max(res, std::abs(row + drift));
            scale = std::max(scale, std::abs(drift));
        }
        const double r = res / (1. + scale);
        sum += r;
        if (r > rep.max) {
            rep.max = r;
            rep.worst_index = p;
            rep.worst = pts[p];
        }
    }
    rep.mean = pts.empty() ? 0. : sum / static_cast<double>(pts.size());
    return rep;
}

double new_time_factor(const integrable_system &sys, const point &p)
{
    return -eval_expr(divergence(sys.field), eval_context{p.names, p.coords});
}

} // namespace integrasym
