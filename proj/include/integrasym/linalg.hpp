#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace integrasym
{

// Row-major dense LU factorization with partial pivoting, sized for the
// tiny (n <= 6) systems this library meets. singular() reports an exactly
// zero pivot; near-singularity is the caller's policy decision, via
// min_pivot() against a scale of its choosing.
class lu_factors
{
public:
    lu_factors(std::vector<double> a, std::size_t n);

    bool singular() const noexcept
    {
        return m_singular;
    }
    double min_pivot() const noexcept
    {
        return m_min_pivot;
    }
    double det() const noexcept;
    std::size_t size() const noexcept
    {
        return m_n;
    }

    // Solves A x = b in place. Undefined if singular().
    void solve(std::span<double> b) const;

private:
    std::vector<double> m_lu;
    std::vector<std::size_t> m_perm;
    std::size_t m_n;
    int m_sign = 1;
    bool m_singular = false;
    double m_min_pivot = 0;
};

// Convenience wrappers.
double det_numeric(std::vector<double> a, std::size_t n);
std::vector<double> solve_linear(std::vector<double> a, std::size_t n, std::vector<double> b);

} // namespace integrasym
