#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <integrasym/linalg.hpp>
#include <integrasym/vcalc.hpp>

namespace integrasym
{

vector_field::vector_field(std::vector<std::string> vars, std::vector<expr> components)
    : m_vars(std::move(vars)), m_components(std::move(components))
{
    if (m_components.size() != m_vars.size()) {
        throw dimension_error("vector_field: " + std::to_string(m_components.size())
                              + " components over " + std::to_string(m_vars.size()) + " variables");
    }
    for (const auto &c : m_components) {
        for (const auto &name : free_variables(c)) {
            if (std::find(m_vars.begin(), m_vars.end(), name) == m_vars.end()) {
                throw dimension_error("vector_field: component mentions unlisted variable '" + name
                                      + "'");
            }
        }
    }
}

std::vector<double> vector_field::eval(std::span<const double> x) const
{
    const eval_context ctx{m_vars, x};
    std::vector<double> out(m_components.size());
    for (std::size_t i = 0; i < m_components.size(); ++i) {
        out[i] = eval_expr(m_components[i], ctx);
    }
    return out;
}

std::vector<double> expr_matrix::eval(const eval_context &ctx) const
{
    std::vector<double> out(m_entries.size());
    for (std::size_t i = 0; i < m_entries.size(); ++i) {
        out[i] = eval_expr(m_entries[i], ctx);
    }
    return out;
}

integrable_system make_system(vector_field field, std::vector<expr> casimirs, expr hamiltonian,
                              expr nu, std::vector<interval> domain, tolerances tol,
                              std::uint64_t seed)
{
    const std::size_t n = field.dimension();
    if (n < 2) {
        throw dimension_error("make_system: dimension must be at least 2");
    }
    if (casimirs.size() != n - 2) {
        throw dimension_error("make_system: expected " + std::to_string(n - 2)
                              + " casimirs, got " + std::to_string(casimirs.size()));
    }
    if (domain.size() != n) {
        throw dimension_error("make_system: domain box must have one interval per variable");
    }
    for (const auto &iv : domain) {
        if (!(iv.lo < iv.hi)) {
            throw dimension_error("make_system: empty domain interval");
        }
    }
    const auto &vars = field.variables();
    const auto check_vars = [&vars](const expr &e, const char *what) {
        for (const auto &name : free_variables(e)) {
            if (std::find(vars.begin(), vars.end(), name) == vars.end()) {
                throw dimension_error(std::string("make_system: ") + what
                                      + " mentions unlisted variable '" + name + "'");
            }
        }
    };
    for (const auto &c : casimirs) {
        check_vars(c, "casimir");
    }
    check_vars(hamiltonian, "hamiltonian");
    check_vars(nu, "rescaling");
    return integrable_system{std::move(field), std::move(casimirs), std::move(hamiltonian),
                             std::move(nu),    std::move(domain),   tol,
                             seed};
}

expr_matrix jacobian_matrix(std::span<const expr> fields, std::span<const std::string> vars)
{
    expr_matrix m(fields.size(), vars.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        for (std::size_t j = 0; j < vars.size(); ++j) {
            m.at(i, j) = diff_expr(fields[i], vars[j]);
        }
    }
    return m;
}

expr_matrix jacobian_matrix(const vector_field &x)
{
    return jacobian_matrix(x.components(), x.variables());
}

namespace
{

bool has_equal_rows(const expr_matrix &m)
{
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = i + 1; j < m.rows(); ++j) {
            bool equal = true;
            for (std::size_t c = 0; c < m.cols() && equal; ++c) {
                equal = structurally_equal(m.at(i, c), m.at(j, c));
            }
            if (equal) {
                return true;
            }
        }
    }
    return false;
}

expr det_cofactor(const expr_matrix &m)
{
    const std::size_t n = m.rows();
    if (n == 1) {
        return m.at(0, 0);
    }
    // Expand along the first row, skipping structural zeros.
    expr acc = expr::constant(0.);
    for (std::size_t j = 0; j < n; ++j) {
        if (m.at(0, j).is_constant(0.)) {
            continue;
        }
        expr_matrix minor(n - 1, n - 1);
        for (std::size_t r = 1; r < n; ++r) {
            std::size_t cc = 0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c != j) {
                    minor.at(r - 1, cc++) = m.at(r, c);
                }
            }
        }
        expr term = simplify(expr::mul(m.at(0, j), det_cofactor(minor)));
        acc = (j % 2 == 0) ? expr::add(std::move(acc), std::move(term))
                           : expr::sub(std::move(acc), std::move(term));
    }
    return simplify(acc);
}

// Fraction-free Bareiss elimination; divisions are exact over polynomial
// entries and remain value-exact (as quotient nodes) otherwise.
expr det_bareiss(expr_matrix m)
{
    const std::size_t n = m.rows();
    int sign = 1;
    expr prev_pivot = expr::constant(1.);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m.at(k, k).is_constant(0.)) {
            std::size_t swap_row = k;
            for (std::size_t i = k + 1; i < n; ++i) {
                if (!m.at(i, k).is_constant(0.)) {
                    swap_row = i;
                    break;
                }
            }
            if (swap_row == k) {
                return expr::constant(0.); // whole pivot column is zero
            }
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(m.at(k, c), m.at(swap_row, c));
            }
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                expr num = expr::sub(expr::mul(m.at(k, k), m.at(i, j)),
                                     expr::mul(m.at(i, k), m.at(k, j)));
                m.at(i, j) = simplify(expr::div(std::move(num), prev_pivot));
            }
            m.at(i, k) = expr::constant(0.);
        }
        prev_pivot = m.at(k, k);
    }
    expr d = m.at(n - 1, n - 1);
    return simplify(sign < 0 ? expr::neg(std::move(d)) : std::move(d));
}

} // namespace

expr det_symbolic(const expr_matrix &m)
{
    if (m.rows() != m.cols()) {
        throw dimension_error("det_symbolic: matrix is " + std::to_string(m.rows()) + "x"
                              + std::to_string(m.cols()));
    }
    if (m.rows() == 0) {
        return expr::constant(1.);
    }
    // Alternating property: two equal rows force a zero determinant.
    if (has_equal_rows(m)) {
        return expr::constant(0.);
    }
    return m.rows() <= 5 ? det_cofactor(m) : det_bareiss(m);
}

expr divergence(const vector_field &x)
{
    expr acc = expr::constant(0.);
    for (std::size_t i = 0; i < x.dimension(); ++i) {
        acc = expr::add(std::move(acc), diff_expr(x.component(i), x.variables()[i]));
    }
    return simplify(acc);
}

vector_field lie_bracket(const vector_field &x, const vector_field &y)
{
    if (x.variables() != y.variables()) {
        throw dimension_error("lie_bracket: fields use different variable lists");
    }
    const auto &vars = x.variables();
    const std::size_t n = vars.size();
    std::vector<expr> components;
    components.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        expr xdy = expr::constant(0.);
        expr ydx = expr::constant(0.);
        for (std::size_t j = 0; j < n; ++j) {
            xdy = expr::add(std::move(xdy), expr::mul(x.component(j), diff_expr(y.component(k), vars[j])));
            ydx = expr::add(std::move(ydx), expr::mul(y.component(j), diff_expr(x.component(k), vars[j])));
        }
        components.push_back(simplify(expr::sub(std::move(xdy), std::move(ydx))));
    }
    return vector_field(vars, std::move(components));
}

expr directional_derivative(const vector_field &x, const expr &f)
{
    expr acc = expr::constant(0.);
    for (std::size_t i = 0; i < x.dimension(); ++i) {
        acc = expr::add(std::move(acc), expr::mul(x.component(i), diff_expr(f, x.variables()[i])));
    }
    return simplify(acc);
}

expr nambu_bracket(std::span<const expr> fs, std::span<const std::string> vars)
{
    if (fs.size() != vars.size()) {
        throw dimension_error("nambu_bracket: " + std::to_string(fs.size()) + " functions in "
                              + std::to_string(vars.size()) + " variables");
    }
    return det_symbolic(jacobian_matrix(fs, vars));
}

expr poisson_bracket(const integrable_system &sys, const expr &f, const expr &g)
{
    std::vector<expr> fs = sys.casimirs;
    fs.push_back(f);
    fs.push_back(g);
    return simplify(expr::mul(sys.nu, nambu_bracket(fs, sys.variables())));
}

vector_field hamiltonian_vector_field(const integrable_system &sys)
{
    const auto &vars = sys.variables();
    std::vector<expr> components;
    components.reserve(vars.size());
    for (const auto &v : vars) {
        components.push_back(poisson_bracket(sys, expr::variable(v), sys.hamiltonian));
    }
    return vector_field(vars, std::move(components));
}

namespace
{

// Accumulates normalized residual samples into a report, remembering the
// worst offender.
struct residual_acc {
    double max = 0;
    double sum = 0;
    std::size_t count = 0;
    std::size_t worst_index = 0;

    // Returns true if this sample is the new worst.
    bool add(double r, std::size_t point_index)
    {
        sum += r;
        ++count;
        if (r > max) {
            max = r;
            worst_index = point_index;
            return true;
        }
        return false;
    }

    void fill(residual_report &rep) const
    {
        rep.max = max;
        rep.mean = count == 0 ? 0. : sum / static_cast<double>(count);
        rep.worst_index = worst_index;
    }
};

} // namespace

residual_report realization_check(const integrable_system &sys, std::span<const point> pts)
{
    const vector_field xh = hamiltonian_vector_field(sys);
    residual_report rep;
    rep.points = pts.size();
    residual_acc acc;
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const eval_context ctx{pts[p].names, pts[p].coords};
        for (std::size_t i = 0; i < sys.dimension(); ++i) {
            const double xi = eval_expr(sys.field.component(i), ctx);
            const double hi = eval_expr(xh.component(i), ctx);
            const double r = std::abs(xi - hi) / (1. + std::abs(xi));
            if (acc.add(r, p)) {
                rep.worst = pts[p];
            }
        }
    }
    acc.fill(rep);
    return rep;
}

residual_report conservation_check(const integrable_system &sys, std::span<const point> pts)
{
    std::vector<std::pair<expr, expr>> integrals; // (integral, X(integral))
    for (const auto &c : sys.casimirs) {
        integrals.emplace_back(c, directional_derivative(sys.field, c));
    }
    integrals.emplace_back(sys.hamiltonian, directional_derivative(sys.field, sys.hamiltonian));

    residual_report rep;
    rep.points = pts.size();
    residual_acc acc;
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const eval_context ctx{pts[p].names, pts[p].coords};
        for (const auto &[f, xf] : integrals) {
            const double r = std::abs(eval_expr(xf, ctx)) / (1. + std::abs(eval_expr(f, ctx)));
            if (acc.add(r, p)) {
                rep.worst = pts[p];
            }
        }
    }
    acc.fill(rep);
    return rep;
}

independence_result independence_check(const integrable_system &sys, const point &p)
{
    const std::size_t n = sys.dimension();
    std::vector<expr> integrals = sys.casimirs;
    integrals.push_back(sys.hamiltonian);
    const expr_matrix jac = jacobian_matrix(integrals, sys.variables());
    const std::vector<double> j = jac.eval(eval_context{p.names, p.coords});

    const std::size_t r = n - 1;
    independence_result res;
    // One minor per dropped column; n is tiny, so enumerate them all.
    for (std::size_t drop = 0; drop < n; ++drop) {
        std::vector<double> minor;
        minor.reserve(r * r);
        double scale = 1;
        for (std::size_t i = 0; i < r; ++i) {
            double row_norm2 = 0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == drop) {
                    continue;
                }
                const double v = j[i * n + c];
                minor.push_back(v);
                row_norm2 += v * v;
            }
            scale *= std::sqrt(row_norm2);
        }
        if (scale == 0.) {
            continue; // a zero row: this minor is singular
        }
        const double ratio = std::abs(det_numeric(std::move(minor), r)) / scale;
        res.proxy = std::max(res.proxy, ratio);
    }
    res.independent = res.proxy > sys.tol.delta_rank;
    return res;
}

} // namespace integrasym
