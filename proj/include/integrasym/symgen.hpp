#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <integrasym/expr.hpp>
#include <integrasym/linearize.hpp>
#include <integrasym/vcalc.hpp>

namespace integrasym
{

// X~ = u_1 d/du_1 + ... + u_n d/du_n, the field the linearized flow obeys.
vector_field euler_field(std::size_t n);
vector_field euler_field(std::vector<std::string> u_names);

// A candidate commuting field Ybar over the u-variables. Linear elements
// Ybar = A u commute with the Euler field identically; expression elements
// are only verified at sample points (residual holds the evidence).
struct kernel_element {
    vector_field ybar;
    // Row-major n x n matrix when the element is linear.
    std::optional<std::vector<double>> matrix;
    double residual = 0;
};

// Ybar(u) = A u over default u-names (or the given ones). The commutator
// [X~, A u] is formed symbolically and must simplify to the exact zero
// field; the residual is therefore 0. Throws dimension_error when a is
// not n x n.
kernel_element kernel_linear(const std::vector<double> &a_row_major, std::size_t n);
kernel_element kernel_linear(const std::vector<double> &a_row_major,
                             std::vector<std::string> u_names);

// Wraps a user-supplied field, recording kernel_verify as its residual.
kernel_element kernel_expressions(vector_field ybar);

// max |[X~, Ybar](u)|_inf over 200 seeded uniform points in [0.5,2]^n.
double kernel_verify(const vector_field &ybar, std::uint64_t seed = 0);

using field_fn = std::function<std::vector<double>(std::span<const double>)>;

// Y = pull-back of Ybar through the chart: the unique solution of
// DPhi(x) Y(x) = Ybar(Phi(x)). Primarily a numeric evaluator; for n <= 4
// a symbolic form via adjugate/determinant is kept alongside.
class pullback_field
{
public:
    pullback_field(linearizing_chart chart, vector_field ybar, double delta_det = 1e-8);

    const linearizing_chart &chart() const noexcept
    {
        return m_chart;
    }
    const vector_field &ybar() const noexcept
    {
        return m_ybar;
    }
    // Empty when n > 4.
    const std::vector<expr> &symbolic() const noexcept
    {
        return m_symbolic;
    }

    // Y(x). Throws singular_jacobian when the chart degenerates at x.
    std::vector<double> operator()(std::span<const double> x) const;

    // Y(x) and optionally DY(x) (row-major), the latter from the exact
    // relation DY = DPhi^{-1} [ (DYbar o Phi) DPhi - S ],
    // S_ij = sum_k d2Phi_i/dx_j dx_k * Y_k.
    void eval(std::span<const double> x, std::vector<double> &y, std::vector<double> *dy) const;

private:
    linearizing_chart m_chart;
    vector_field m_ybar;
    expr_matrix m_dybar;                 // DYbar over u
    std::vector<expr_matrix> m_hessians; // Hessian of each Phi_i over x
    std::vector<expr> m_symbolic;
    double m_delta_det;
};

// mu(x) = -<grad div X (x), Y(x)> / div X(x): the proportionality factor
// in [X,Y] = mu X, expressed in x-coordinates.
class mu_evaluator
{
public:
    mu_evaluator(const integrable_system &sys, field_fn y, double div_guard = 1e-12);

    // Throws degenerate_point when |div X(x)| <= guard.
    double operator()(std::span<const double> x) const;

private:
    std::vector<std::string> m_vars;
    expr m_div;
    std::vector<expr> m_div_grad;
    field_fn m_y;
    double m_guard;
};

mu_evaluator mu_factor(const integrable_system &sys, field_fn y, double div_guard = 1e-12);

struct symmetry_report {
    residual_report residual;   // |[X,Y] - mu X|_inf / (1 + |X|_inf)
    double dy_fd_deviation = 0; // exact vs finite-difference bracket, relative
    double mu_min = 0;
    double mu_max = 0;
    bool mu_finite = true;
};

// Evaluates the commutator [X,Y] = DY X - DX Y with the exact DY and
// cross-checks DY against central finite differences of y.
symmetry_report symmetry_check(const integrable_system &sys, const pullback_field &y,
                               const mu_evaluator &mu, std::span<const point> pts);

struct symmetry_certificate {
    kernel_element kernel;
    pullback_field y;
    mu_evaluator mu;
    std::optional<expr> mu_symbolic; // present when Y has a symbolic form
    symmetry_report report;
    bool valid = false;
    std::uint64_t seed = 0;
    double tolerance = 0;
};

// Pull back the kernel element, derive mu, and check [X,Y] = mu X on
// plan-sampled admissible points. VALID iff the kernel residual passes
// tol.kernel, the symmetry residual passes tol.symmetry and mu stayed
// finite. Sampling failures (admissibility_exhausted) propagate.
symmetry_certificate symmetry_certificate_for(const integrable_system &sys,
                                              const linearizing_chart &chart,
                                              const kernel_element &kernel,
                                              const sample_plan &plan);

// X' = m X componentwise, nu' = m nu; integrals and domain unchanged.
integrable_system apply_rescaling(const integrable_system &sys, const expr &m);

enum class integrator_kind { rk4, rk45 };

struct flow_spec {
    integrator_kind integrator = integrator_kind::rk45;
    double step = 1e-2;    // fixed step size (rk4)
    double tol = 1e-10;    // local error tolerance (rk45)
    double horizon = 1.0;  // orbit integration time
    double epsilon = 0.1;  // group parameter for the symmetry flow
};

// Integrates x' = f(x) from x0 to time t. A box, when given, guards the
// trajectory (domain_exit on leaving it). Throws step_failure when the
// adaptive step underflows.
point flow(const field_fn &f, const point &x0, double t, const flow_spec &spec,
           const std::vector<interval> *box = nullptr);

struct orbit_report {
    double drift_max = 0;
    std::vector<double> per_integral; // casimirs first, hamiltonian last
    std::size_t checkpoints = 0;
    double epsilon = 0;
};

// Takes checkpoints along an X-orbit from a seeded admissible start, maps
// each by the epsilon-flow of Y, and measures how far the mapped curve
// strays from a single level set of every first integral.
orbit_report orbit_permutation_check(const integrable_system &sys, const field_fn &y,
                                     const flow_spec &spec);
orbit_report orbit_permutation_check(const integrable_system &sys,
                                     const symmetry_certificate &cert, const flow_spec &spec);

// Max relative gap at the points between mu from the x-coordinate closed
// form and -Ybar(h)/h computed in u-coordinates, with h = -div X o Phi^{-1}
// evaluated through chart_invert and Ybar(h) by central differences.
double mu_cross_check(const integrable_system &sys, const symmetry_certificate &cert,
                      std::span<const point> pts);

} // namespace integrasym
