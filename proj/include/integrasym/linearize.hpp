#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <integrasym/expr.hpp>
#include <integrasym/vcalc.hpp>

namespace integrasym
{

// The linearizing change of variables u = Phi(x) with components, in this
// exact order: u_1 = 1/nu, u_{k+1} = C_k/nu (k = 1..n-2), u_n = H/nu.
// In these coordinates the flow becomes u' = u in the rescaled time
// ds = -div(X) dt, wherever the chart is nondegenerate.
struct linearizing_chart {
    std::vector<std::string> x_names;
    std::vector<std::string> u_names;
    std::vector<expr> components; // Phi_i as expressions over x
    expr_matrix jacobian;         // DPhi
    expr jacobian_det;            // det DPhi, symbolic

    std::size_t dimension() const noexcept
    {
        return components.size();
    }
};

// Rejection-sampling request. Thresholds gate |nu|, the degeneracy value
// and |det DPhi|; the box is the sampling window.
struct sample_plan {
    std::size_t count = 1000;
    std::uint64_t seed = 0;
    std::vector<interval> box;
    double delta_nu = 1e-8;
    double delta_oset = 1e-8;
    double delta_det = 1e-8;
};

// Plan using the system's own domain, seed and thresholds.
sample_plan make_plan(const integrable_system &sys, std::size_t count);

// Names the chart maps into: u1..un, with the prefix doubled ("uu1", ...)
// until it no longer collides with any system variable.
std::vector<std::string> chart_target_names(const std::vector<std::string> &x_names,
                                            std::size_t n);

// Where rejected draws went; filled even when sampling ultimately fails,
// so callers can report why a domain is degenerate.
struct sample_diagnostics {
    std::size_t draws = 0;
    std::size_t accepted = 0;
    std::size_t rejected_nu = 0;
    std::size_t rejected_oset = 0;
    std::size_t rejected_det = 0;
    std::size_t rejected_eval = 0;
    double max_abs_divergence = 0;  // max |div X| over draws
    double max_abs_jac_det = 0;     // max |det d(1/nu,C,H)/dx| over draws
    double max_abs_nu_gradient = 0; // max |grad(1/nu)|_inf over draws
};

// Degeneracy functional of the chart: div X * det d(1/nu,C_1..C_{n-2},H)/dx,
// precomputed symbolically so per-point evaluation is cheap.
struct oset_form {
    expr div_x;
    expr_matrix jacobian; // rows: 1/nu, C_1..C_{n-2}, H
    expr jacobian_det;
};

oset_form make_oset_form(const integrable_system &sys);

// Raw degeneracy value at the point; the point lies in the degenerate set
// when |value| <= delta_oset * scale (see oset_scale).
double oset_value(const oset_form &form, const eval_context &ctx);
double oset_value(const integrable_system &sys, const point &p);

// 1 + |div X| * (Hadamard row-norm bound of the oset Jacobian): relative
// scale with absolute floor for the degeneracy test.
double oset_scale(const oset_form &form, const eval_context &ctx);

// Draws uniform points from the plan box, rejecting degenerate ones.
// Returns exactly plan.count points. Throws admissibility_exhausted when
// the budget of 100*count draws runs out first (diagnostics, if given,
// are filled either way).
std::vector<point> sample_admissible(const integrable_system &sys, const sample_plan &plan,
                                     sample_diagnostics *diag = nullptr);

linearizing_chart build_chart(const integrable_system &sys);

// u = Phi(x). Evaluation faults (nu = 0) propagate.
point chart_apply(const linearizing_chart &chart, const point &x);

// Newton iteration for Phi(x) = u from guess x0, using the symbolic
// Jacobian: at most 50 iterations, step halving (up to 20 per step),
// success when |Phi(x)-u|_inf <= 1e-12*(1+|u|_inf). Throws
// singular_jacobian at a degenerate iterate, no_convergence otherwise.
point chart_invert(const linearizing_chart &chart, const point &u, const point &x0,
                   double delta_det = 1e-8);

// Max over points of |DPhi(x) X(x) + div X(x) Phi(x)|_inf normalized by
// 1 + |div X(x) Phi(x)|_inf, the pointwise form of the linearization
// statement (du/dt = -div X * u along trajectories).
residual_report linearization_check(const integrable_system &sys, const linearizing_chart &chart,
                                    std::span<const point> pts);

// -div X at the point: the factor turning old time into the rescaled time.
double new_time_factor(const integrable_system &sys, const point &p);

} // namespace integrasym
