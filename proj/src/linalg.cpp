#include <cmath>
#include <limits>
#include <utility>

#include <integrasym/errors.hpp>
#include <integrasym/linalg.hpp>

namespace integrasym
{

lu_factors::lu_factors(std::vector<double> a, std::size_t n) : m_lu(std::move(a)), m_perm(n), m_n(n)
{
    if (m_lu.size() != n * n) {
        throw dimension_error("lu_factors: matrix storage does not match dimension");
    }
    m_min_pivot = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        m_perm[i] = i;
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(m_lu[m_perm[k] * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(m_lu[m_perm[i] * n + k]);
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0.) {
            m_singular = true;
            m_min_pivot = 0.;
            return;
        }
        if (piv != k) {
            std::swap(m_perm[piv], m_perm[k]);
            m_sign = -m_sign;
        }
        m_min_pivot = std::min(m_min_pivot, best);
        const std::size_t rk = m_perm[k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const std::size_t ri = m_perm[i];
            const double f = m_lu[ri * n + k] / m_lu[rk * n + k];
            m_lu[ri * n + k] = f;
            for (std::size_t j = k + 1; j < n; ++j) {
                m_lu[ri * n + j] -= f * m_lu[rk * n + j];
            }
        }
    }
}

double lu_factors::det() const noexcept
{
    if (m_singular) {
        return 0.;
    }
    double d = m_sign;
    for (std::size_t k = 0; k < m_n; ++k) {
        d *= m_lu[m_perm[k] * m_n + k];
    }
    return d;
}

void lu_factors::solve(std::span<double> b) const
{
    const std::size_t n = m_n;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[m_perm[i]];
        for (std::size_t j = 0; j < i; ++j) {
            s -= m_lu[m_perm[i] * n + j] * y[j];
        }
        y[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            s -= m_lu[m_perm[i] * n + j] * b[j];
        }
        b[i] = s / m_lu[m_perm[i] * n + i];
    }
}

double det_numeric(std::vector<double> a, std::size_t n)
{
    return lu_factors(std::move(a), n).det();
}

std::vector<double> solve_linear(std::vector<double> a, std::size_t n, std::vector<double> b)
{
    const lu_factors f(std::move(a), n);
    if (f.singular()) {
        throw singular_jacobian("solve_linear: singular matrix");
    }
    f.solve(b);
    return b;
}

} // namespace integrasym
