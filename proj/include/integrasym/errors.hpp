#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace integrasym
{

// Root of the library's exception hierarchy.
class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Text could not be parsed as an expression. offset() is the byte
// position in the input at which the problem was detected.
class parse_error : public error
{
public:
    parse_error(const std::string &msg, std::size_t offset)
        : error(msg + " (at byte " + std::to_string(offset) + ")"), m_offset(offset)
    {
    }
    std::size_t offset() const noexcept
    {
        return m_offset;
    }

private:
    std::size_t m_offset = 0;
};

// Identifier in the input is neither a declared variable nor a known function.
class unknown_identifier : public parse_error
{
public:
    using parse_error::parse_error;
};

// Base for failures raised while evaluating an expression at a point.
class eval_error : public error
{
public:
    using error::error;
};

class division_by_zero : public eval_error
{
public:
    using eval_error::eval_error;
};

// Argument outside the domain of a partial function (ln, sqrt, fractional pow).
class math_domain_error : public eval_error
{
public:
    using eval_error::eval_error;
};

class unbound_variable : public eval_error
{
public:
    using eval_error::eval_error;
};

// Shape/arity mismatches: non-square matrices, field vs. variable-list
// length disagreements, wrong number of first integrals, and the like.
class dimension_error : public error
{
public:
    using error::error;
};

// Base for failures of the numeric algorithms (Newton, LU, integrators).
class numeric_error : public error
{
public:
    using error::error;
};

class singular_jacobian : public numeric_error
{
public:
    using numeric_error::numeric_error;
};

class no_convergence : public numeric_error
{
public:
    using numeric_error::numeric_error;
};

class step_failure : public numeric_error
{
public:
    using numeric_error::numeric_error;
};

class domain_exit : public numeric_error
{
public:
    using numeric_error::numeric_error;
};

// A chart/bracket operation was requested at a point where the
// construction degenerates (zero rescaling, vanishing chart Jacobian, ...).
class degenerate_point : public numeric_error
{
public:
    using numeric_error::numeric_error;
};

// Rejection sampling could not reach the requested number of admissible
// points within its draw budget.
class admissibility_exhausted : public error
{
public:
    using error::error;
};

// Input document violates the system-description schema. path() identifies
// the offending field, e.g. "kernel_elements[2].matrix".
class schema_error : public error
{
public:
    schema_error(const std::string &msg, std::string path)
        : error(path + ": " + msg), m_path(std::move(path))
    {
    }
    const std::string &path() const noexcept
    {
        return m_path;
    }

private:
    std::string m_path;
};

class io_error : public error
{
public:
    using error::error;
};

} // namespace integrasym
