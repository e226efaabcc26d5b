#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <integrasym/expr.hpp>

namespace integrasym
{

struct interval {
    double lo = 0;
    double hi = 0;
};

// A vector field X = sum_i X_i d/dx_i over an ordered variable list.
class vector_field
{
public:
    // Zero-dimensional placeholder, useful only as an assignment target.
    vector_field() = default;

    // Throws dimension_error if the component count differs from the
    // variable count or a component mentions an unlisted variable.
    vector_field(std::vector<std::string> vars, std::vector<expr> components);

    std::size_t dimension() const noexcept
    {
        return m_vars.size();
    }
    const std::vector<std::string> &variables() const noexcept
    {
        return m_vars;
    }
    const std::vector<expr> &components() const noexcept
    {
        return m_components;
    }
    const expr &component(std::size_t i) const
    {
        return m_components[i];
    }

    // Component values at coordinates given in variable order.
    std::vector<double> eval(std::span<const double> x) const;

private:
    std::vector<std::string> m_vars;
    std::vector<expr> m_components;
};

class expr_matrix
{
public:
    expr_matrix() = default;
    expr_matrix(std::size_t rows, std::size_t cols)
        : m_rows(rows), m_cols(cols), m_entries(rows * cols)
    {
    }

    std::size_t rows() const noexcept
    {
        return m_rows;
    }
    std::size_t cols() const noexcept
    {
        return m_cols;
    }
    expr &at(std::size_t r, std::size_t c)
    {
        return m_entries[r * m_cols + c];
    }
    const expr &at(std::size_t r, std::size_t c) const
    {
        return m_entries[r * m_cols + c];
    }

    // Row-major entry values at the given bindings.
    std::vector<double> eval(const eval_context &ctx) const;

private:
    std::size_t m_rows = 0, m_cols = 0;
    std::vector<expr> m_entries;
};

// Named thresholds. The delta_* family gates degeneracy/admissibility
// decisions; the rest bound check residuals.
struct tolerances {
    double delta_nu = 1e-8;
    double delta_oset = 1e-8;
    double delta_det = 1e-8;
    double delta_rank = 1e-8;
    double conservation = 1e-9;
    double realization = 1e-9;
    double linearization = 1e-8;
    double symmetry = 1e-6;
    double kernel = 1e-10;
    double orbit_drift = 1e-6;
    double mu_cross = 1e-6;
};

// A completely integrable system: field X of dimension n, the n-2
// Casimir candidates, the Hamiltonian (the remaining first integral),
// the rescaling nu, and the sampling window inside the open domain.
// Conservation/independence are verified by checks, never assumed.
struct integrable_system {
    vector_field field;
    std::vector<expr> casimirs;
    expr hamiltonian;
    expr nu;
    std::vector<interval> domain;
    tolerances tol;
    std::uint64_t seed = 0;

    std::size_t dimension() const noexcept
    {
        return field.dimension();
    }
    const std::vector<std::string> &variables() const noexcept
    {
        return field.variables();
    }
};

// Shape-validates and assembles a system: n >= 2, exactly n-2 casimirs,
// an n-interval domain box with lo < hi, and no stray variables in the
// scalar data. Throws dimension_error on violation.
integrable_system make_system(vector_field field, std::vector<expr> casimirs, expr hamiltonian,
                              expr nu, std::vector<interval> domain, tolerances tol = {},
                              std::uint64_t seed = 0);

// Jacobian: entry (i,j) = d fields_i / d vars_j, simplified.
expr_matrix jacobian_matrix(std::span<const expr> fields, std::span<const std::string> vars);
expr_matrix jacobian_matrix(const vector_field &x);

// Symbolic determinant: cofactor expansion with interleaved simplify up
// to 5x5, fraction-free Bareiss elimination above. Throws dimension_error
// if the matrix is not square.
expr det_symbolic(const expr_matrix &m);

expr divergence(const vector_field &x);

// [X,Y], component k = sum_j (X_j dY_k/dx_j - Y_j dX_k/dx_j), i.e. the
// commutator with sign convention [X,Y](f) = X(Y(f)) - Y(X(f)). Throws
// dimension_error unless the variable lists agree.
vector_field lie_bracket(const vector_field &x, const vector_field &y);

// X(f) = sum_i X_i df/dx_i.
expr directional_derivative(const vector_field &x, const expr &f);

// Determinant bracket {f_1,...,f_n} = det d(f_1,...,f_n)/d(vars).
// Throws dimension_error unless exactly vars.size() functions are given.
expr nambu_bracket(std::span<const expr> fs, std::span<const std::string> vars);

// {f,g} = nu * {C_1,...,C_{n-2},f,g}; for n=2 just nu * det d(f,g)/dx.
expr poisson_bracket(const integrable_system &sys, const expr &f, const expr &g);

// Component i = {x_i, H}. For a consistent system this reconstructs X.
vector_field hamiltonian_vector_field(const integrable_system &sys);

struct residual_report {
    double max = 0;
    double mean = 0;
    std::size_t points = 0;
    std::size_t worst_index = 0;
    point worst;
};

// Max/mean over points and components of |X_i - {x_i,H}| / (1 + |X_i|).
residual_report realization_check(const integrable_system &sys, std::span<const point> pts);

// Residuals |X(C_i)| and |X(H)|, normalized by 1 + |integral value|.
residual_report conservation_check(const integrable_system &sys, std::span<const point> pts);

struct independence_result {
    bool independent = false;
    // Best minor determinant over its row-norm-product scale; a crude
    // stand-in for the smallest singular value.
    double proxy = 0;
};

// True iff some (n-1)-minor of the Jacobian of (C_1,...,C_{n-2},H) at the
// point clears delta_rank relative to the minor's row-norm product.
independence_result independence_check(const integrable_system &sys, const point &p);

} // namespace integrasym
