#include <cctype>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>

#include <integrasym/expr.hpp>

namespace integrasym
{

namespace
{

// Recursive-descent parser over a fixed grammar:
//
//   expression := term (('+' | '-') term)*
//   term       := factor (('*' | '/') factor)*
//   factor     := '-' factor | base ('^' factor)?
//   base       := number | identifier | function '(' expression ')'
//               | '(' expression ')'
//
// '^' is right-associative and binds tighter than unary minus, so
// "-x^2" is -(x^2). Whitespace is insignificant.
class parser
{
public:
    parser(std::string_view text, std::span<const std::string> vars) : m_text(text), m_vars(vars)
    {
    }

    expr run()
    {
        skip_ws();
        if (m_pos == m_text.size()) {
            throw parse_error("empty expression", 0);
        }
        expr e = expression();
        skip_ws();
        if (m_pos != m_text.size()) {
            throw parse_error("unexpected trailing input", m_pos);
        }
        return e;
    }

private:
    void skip_ws()
    {
        while (m_pos < m_text.size() && std::isspace(static_cast<unsigned char>(m_text[m_pos]))) {
            ++m_pos;
        }
    }

    bool eat(char c)
    {
        skip_ws();
        if (m_pos < m_text.size() && m_text[m_pos] == c) {
            ++m_pos;
            return true;
        }
        return false;
    }

    char peek()
    {
        skip_ws();
        return m_pos < m_text.size() ? m_text[m_pos] : '\0';
    }

    expr expression()
    {
        expr e = term();
        while (true) {
            if (eat('+')) {
                e = expr::add(std::move(e), term());
            } else if (eat('-')) {
                e = expr::sub(std::move(e), term());
            } else {
                return e;
            }
        }
    }

    expr term()
    {
        expr e = factor();
        while (true) {
            if (eat('*')) {
                e = expr::mul(std::move(e), factor());
            } else if (eat('/')) {
                e = expr::div(std::move(e), factor());
            } else {
                return e;
            }
        }
    }

    expr factor()
    {
        if (eat('-')) {
            // expr::neg folds a constant operand, so "-3" is the literal
            // -3 while "-3^2" stays -(3^2) because pow binds first.
            return expr::neg(factor());
        }
        expr b = base();
        if (eat('^')) {
            return expr::pow(std::move(b), factor());
        }
        return b;
    }

    expr base()
    {
        const char c = peek();
        if (c == '(') {
            ++m_pos;
            expr e = expression();
            if (!eat(')')) {
                throw parse_error("expected ')'", m_pos);
            }
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return identifier();
        }
        if (c == '\0') {
            throw parse_error("unexpected end of input", m_pos);
        }
        throw parse_error(std::string("unexpected character '") + c + "'", m_pos);
    }

    expr number()
    {
        const std::size_t start = m_pos;
        while (m_pos < m_text.size() && std::isdigit(static_cast<unsigned char>(m_text[m_pos]))) {
            ++m_pos;
        }
        if (m_pos < m_text.size() && m_text[m_pos] == '.') {
            ++m_pos;
            while (m_pos < m_text.size() && std::isdigit(static_cast<unsigned char>(m_text[m_pos]))) {
                ++m_pos;
            }
        }
        if (m_pos < m_text.size() && (m_text[m_pos] == 'e' || m_text[m_pos] == 'E')) {
            std::size_t epos = m_pos + 1;
            if (epos < m_text.size() && (m_text[epos] == '+' || m_text[epos] == '-')) {
                ++epos;
            }
            if (epos < m_text.size() && std::isdigit(static_cast<unsigned char>(m_text[epos]))) {
                m_pos = epos;
                while (m_pos < m_text.size() && std::isdigit(static_cast<unsigned char>(m_text[m_pos]))) {
                    ++m_pos;
                }
            }
        }
        if (m_pos == start || (m_pos == start + 1 && m_text[start] == '.')) {
            throw parse_error("malformed number", start);
        }
        const std::string tok(m_text.substr(start, m_pos - start));
        char *end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) {
            throw parse_error("malformed number", start);
        }
        if (!std::isfinite(v)) {
            throw parse_error("numeric literal out of range", start);
        }
        return expr::constant(v);
    }

    expr identifier()
    {
        const std::size_t start = m_pos;
        while (m_pos < m_text.size()
               && (std::isalnum(static_cast<unsigned char>(m_text[m_pos])) || m_text[m_pos] == '_')) {
            ++m_pos;
        }
        const std::string_view name = m_text.substr(start, m_pos - start);
        const expr_kind fk = function_kind(name);
        if (fk != expr_kind::constant) {
            if (!eat('(')) {
                throw parse_error("expected '(' after function name '" + std::string(name) + "'", m_pos);
            }
            expr arg = expression();
            if (!eat(')')) {
                throw parse_error("expected ')'", m_pos);
            }
            return expr::unary(fk, std::move(arg));
        }
        for (const auto &v : m_vars) {
            if (v == name) {
                return expr::variable(std::string(name));
            }
        }
        throw unknown_identifier("unknown identifier '" + std::string(name) + "'", start);
    }

    // Maps a name to its function kind; expr_kind::constant means "not a
    // function" (constants are never spelled by name).
    static expr_kind function_kind(std::string_view name)
    {
        if (name == "sin") {
            return expr_kind::sin;
        }
        if (name == "cos") {
            return expr_kind::cos;
        }
        if (name == "exp") {
            return expr_kind::exp;
        }
        if (name == "ln") {
            return expr_kind::ln;
        }
        if (name == "sqrt") {
            return expr_kind::sqrt;
        }
        return expr_kind::constant;
    }

    std::string_view m_text;
    std::span<const std::string> m_vars;
    std::size_t m_pos = 0;
};

} // namespace

expr parse_expr(std::string_view text, std::span<const std::string> vars)
{
    return parser(text, vars).run();
}

} // namespace integrasym
