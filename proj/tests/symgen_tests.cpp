#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "support.hpp"

using namespace integrasym;
using testsupport::expr_gen;
using testsupport::parse2;
using testsupport::vars2;

namespace
{

std::vector<point> admissible_points(const integrable_system &sys, std::size_t count)
{
    return sample_admissible(sys, make_plan(sys, count));
}

symmetry_certificate certify(const integrable_system &sys, const kernel_element &kern,
                             std::size_t count = 200)
{
    const linearizing_chart chart = build_chart(sys);
    return symmetry_certificate_for(sys, chart, kern, make_plan(sys, count));
}

} // namespace

TEST_CASE("euler field is u_i d/du_i")
{
    const vector_field e = euler_field(3);
    CHECK(e.variables() == std::vector<std::string>{"u1", "u2", "u3"});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(structurally_equal(e.component(i), expr::variable(e.variables()[i])));
    }
    const vector_field named = euler_field({"a", "b"});
    CHECK(to_string(named.component(0)) == "a");
    CHECK(to_string(named.component(1)) == "b");
}

TEST_CASE("linear kernel elements commute with the Euler field exactly")
{
    // Arbitrary dense matrix: [X~, A u] simplifies to zero structurally,
    // so the recorded residual is exactly 0.
    const kernel_element k =
        kernel_linear({1.5, -2., 0.25, 3., 0., -1., 7., 0.5, 2.}, 3);
    CHECK(k.residual == 0.);
    REQUIRE(k.matrix.has_value());
    CHECK(k.matrix->size() == 9);

    const vector_field e = euler_field(3);
    const vector_field br = lie_bracket(e, k.ybar);
    for (const expr &c : br.components()) {
        CHECK(c.is_constant(0.));
    }

    // Row-major layout: row i is the coefficient list of Ybar_i.
    const kernel_element shear = kernel_linear({0., 0., 1., 0.}, 2);
    CHECK(shear.ybar.component(0).is_constant(0.));
    CHECK(to_string(shear.ybar.component(1)) == "u1");

    CHECK_THROWS_AS(kernel_linear({1., 2., 3.}, 2), dimension_error);
}

TEST_CASE("expression kernel elements carry sampled evidence")
{
    const std::vector<std::string> u = {"u1", "u2"};
    // u2 d/du1 + u1 d/du2 is linear, hence in the kernel: tiny residual.
    const kernel_element good = kernel_expressions(
        vector_field(u, {parse_expr("u2", u), parse_expr("u1", u)}));
    CHECK(good.residual <= 1e-12);
    CHECK_FALSE(good.matrix.has_value());

    // A quadratic component scales differently under the Euler flow:
    // [X~, u1^2 d/du1] = u1^2 d/du1, far from zero on [0.5,2]^2.
    const kernel_element bad = kernel_expressions(
        vector_field(u, {parse_expr("u1^2", u), parse_expr("0", u)}));
    CHECK(bad.residual > 0.25);

    CHECK(kernel_verify(good.ybar) == good.residual);
}

TEST_CASE("pullback of the identity kernel is the scaling symmetry")
{
    const auto sys = testsupport::scaling2d();
    const linearizing_chart chart = build_chart(sys);
    const pullback_field y(chart, kernel_linear({1., 0., 0., 1.}, 2).ybar);

    // Hand solve DPhi Y = Phi: Y = (-x1/2, -x2/2).
    REQUIRE(y.symbolic().size() == 2);
    CHECK(structurally_equal(y.symbolic()[0],
                             simplify(parse2("-x1/2"))));
    CHECK(structurally_equal(y.symbolic()[1],
                             simplify(parse2("-x2/2"))));

    expr_gen gen(vars2(), 7);
    for (int k = 0; k < 100; ++k) {
        const point p = gen.sample_point();
        const auto v = y(p.coords);
        CHECK(std::abs(v[0] + 0.5 * p.coords[0]) <= 1e-12);
        CHECK(std::abs(v[1] + 0.5 * p.coords[1]) <= 1e-12);
    }
}

TEST_CASE("pullback of the shear kernel is translation-like with mu = 0")
{
    const auto sys = testsupport::scaling2d();
    const kernel_element shear = kernel_linear({0., 0., 1., 0.}, 2);
    const symmetry_certificate cert = certify(sys, shear);

    CHECK(cert.valid);
    // DPhi Y = (0, 1/nu) solves to Y = (0, x1).
    REQUIRE(cert.mu_symbolic.has_value());
    CHECK(cert.mu_symbolic->is_constant(0.));
    CHECK(std::abs(cert.report.mu_min) <= 1e-12);
    CHECK(std::abs(cert.report.mu_max) <= 1e-12);

    expr_gen gen(vars2(), 8);
    for (int k = 0; k < 50; ++k) {
        const point p = gen.sample_point();
        const auto v = cert.y(p.coords);
        CHECK(std::abs(v[0]) <= 1e-12);
        CHECK(std::abs(v[1] - p.coords[0]) <= 1e-12 * (1. + p.coords[0]));
    }
}

TEST_CASE("quadratic system certifies the diagonal kernel with mu = 1/3")
{
    const auto sys = testsupport::quadratic2d();
    const symmetry_certificate cert = certify(sys, kernel_linear({1., 0., 0., 0.}, 2));

    CHECK(cert.valid);
    CHECK(cert.report.residual.max <= 1e-10);

    // Hand oracle: Y = (-x1/3, -4 x2/3) and [X,Y] = (1/3) X.
    expr_gen gen(vars2(), 9);
    for (int k = 0; k < 100; ++k) {
        const point p = gen.sample_point();
        const auto v = cert.y(p.coords);
        CHECK(std::abs(v[0] + p.coords[0] / 3.) <= 1e-10);
        CHECK(std::abs(v[1] + 4. * p.coords[1] / 3.) <= 1e-10);
        CHECK(cert.mu(p.coords) == doctest::Approx(1. / 3.).epsilon(1e-10));
    }
    CHECK(cert.report.mu_min == doctest::Approx(1. / 3.).epsilon(1e-9));
    CHECK(cert.report.mu_max == doctest::Approx(1. / 3.).epsilon(1e-9));
    REQUIRE(cert.mu_symbolic.has_value());
    CHECK(cert.mu_symbolic->is_constant());
    CHECK(eval_expr(*cert.mu_symbolic, point{{}, {}}) == doctest::Approx(1. / 3.).epsilon(1e-12));
}

TEST_CASE("exact Jacobian of the pullback matches finite differences")
{
    const auto sys = testsupport::quadratic2d();
    const linearizing_chart chart = build_chart(sys);
    const pullback_field y(chart, kernel_linear({1., 2., -0.5, 0.75}, 2).ybar);

    expr_gen gen(vars2(), 10);
    std::vector<double> val, dy, vp, vm;
    for (int k = 0; k < 50; ++k) {
        const point p = gen.sample_point();
        y.eval(p.coords, val, &dy);
        for (std::size_t j = 0; j < 2; ++j) {
            std::vector<double> xs = p.coords;
            const double h = 1e-6 * (1. + std::abs(xs[j]));
            xs[j] += h;
            vp = y(xs);
            xs[j] -= 2. * h;
            vm = y(xs);
            for (std::size_t i = 0; i < 2; ++i) {
                const double fd = (vp[i] - vm[i]) / (2. * h);
                CHECK(std::abs(dy[i * 2 + j] - fd) <= 1e-5 * (1. + std::abs(fd)));
            }
        }
    }
}

TEST_CASE("pullback is linear in the kernel matrix")
{
    const auto sys = testsupport::scaling2d();
    const linearizing_chart chart = build_chart(sys);
    const std::vector<double> a = {1., 2., 3., 4.};
    const std::vector<double> b = {-0.5, 1., 0., 2.5};
    std::vector<double> ab(4);
    for (int i = 0; i < 4; ++i) {
        ab[i] = a[i] + b[i];
    }
    const pullback_field ya(chart, kernel_linear(a, 2).ybar);
    const pullback_field yb(chart, kernel_linear(b, 2).ybar);
    const pullback_field yab(chart, kernel_linear(ab, 2).ybar);

    expr_gen gen(vars2(), 11);
    for (int k = 0; k < 50; ++k) {
        const point p = gen.sample_point();
        const auto va = ya(p.coords), vb = yb(p.coords), vab = yab(p.coords);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(std::abs(vab[i] - va[i] - vb[i]) <= 1e-10 * (1. + std::abs(vab[i])));
        }
    }
}

TEST_CASE("symmetry residual is sensitive to a wrong mu")
{
    const auto sys = testsupport::quadratic2d();
    const linearizing_chart chart = build_chart(sys);
    const kernel_element kern = kernel_linear({1., 0., 0., 0.}, 2);
    const pullback_field y(chart, kern.ybar, sys.tol.delta_det);

    const auto pts = admissible_points(sys, 50);
    const mu_evaluator real = mu_factor(sys, [&y](std::span<const double> x) { return y(x); });
    const symmetry_report good = symmetry_check(sys, y, real, pts);
    CHECK(good.residual.max <= 1e-10);

    // With mu shifted by 1 the defect [X,Y] - (mu+1) X equals -X, whose
    // norm on this box is at least x1^2 >= 0.25. The check cannot be a
    // tautology that accepts any proportionality factor.
    const expr_matrix dxm = jacobian_matrix(sys.field);
    double worst = 0;
    for (const point &p : pts) {
        const eval_context ctx{p.names, p.coords};
        std::vector<double> xv(2);
        for (std::size_t i = 0; i < 2; ++i) {
            xv[i] = eval_expr(sys.field.component(i), ctx);
        }
        std::vector<double> yv, dy;
        y.eval(p.coords, yv, &dy);
        const double bad_mu = real(p.coords) + 1.;
        for (std::size_t i = 0; i < 2; ++i) {
            double commutator = 0;
            for (std::size_t j = 0; j < 2; ++j) {
                commutator += dy[i * 2 + j] * xv[j] - eval_expr(dxm.at(i, j), ctx) * yv[j];
            }
            worst = std::max(worst, std::abs(commutator - bad_mu * xv[i]));
        }
    }
    CHECK(worst > 0.2);
}

TEST_CASE("rescaling by x1 maps the scaling system onto the quadratic one")
{
    const integrable_system rescaled =
        apply_rescaling(testsupport::scaling2d(), expr::variable("x1"));
    const integrable_system quad = testsupport::quadratic2d();
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(structurally_equal(rescaled.field.component(i),
                                 simplify(quad.field.component(i))));
    }
    CHECK(structurally_equal(rescaled.nu, simplify(quad.nu)));
    CHECK(structurally_equal(rescaled.hamiltonian, quad.hamiltonian));
}

TEST_CASE("mu evaluation refuses points where the divergence vanishes")
{
    const auto rb = testsupport::rigidbody3d();
    const mu_evaluator mu =
        mu_factor(rb, [](std::span<const double> x) {
            return std::vector<double>(x.begin(), x.end());
        });
    const std::vector<double> p = {1., 1.2, 0.8};
    CHECK_THROWS_AS(mu(p), degenerate_point);
}

TEST_CASE("mu cross-check agrees through the chart")
{
    const auto sys = testsupport::quadratic2d();
    const symmetry_certificate cert = certify(sys, kernel_linear({1., 0., 0., 0.}, 2));
    REQUIRE(cert.valid);
    const auto pts = admissible_points(sys, 100);
    CHECK(mu_cross_check(sys, cert, pts) <= 1e-6);

    const auto rs = testsupport::rigidbody3d_rescaled();
    const symmetry_certificate rcert = certify(rs, kernel_linear({1., 0., 0., 0., 1., 0., 0., 0., 1.}, 3), 100);
    REQUIRE(rcert.valid);
    const auto rpts = admissible_points(rs, 50);
    CHECK(mu_cross_check(rs, rcert, rpts) <= 1e-6);
}

TEST_CASE("certificates for the bundled kernels are valid")
{
    const auto s2 = testsupport::scaling2d();
    CHECK(certify(s2, kernel_linear({1., 0., 0., 1.}, 2)).valid);
    CHECK(certify(s2, kernel_linear({0., 0., 1., 0.}, 2)).valid);

    const auto q2 = testsupport::quadratic2d();
    CHECK(certify(q2, kernel_linear({1., 0., 0., 0.}, 2)).valid);
    CHECK(certify(q2, kernel_linear({1., 0., 0., 1.}, 2)).valid);

    const auto rs = testsupport::rigidbody3d_rescaled();
    const symmetry_certificate rc =
        certify(rs, kernel_linear({1., 0., 0., 0., 1., 0., 0., 0., 1.}, 3), 100);
    CHECK(rc.valid);
    CHECK(rc.report.mu_finite);
    CHECK(rc.report.dy_fd_deviation <= 1e-5);

    // An out-of-kernel element must be rejected, not silently certified.
    const std::vector<std::string> u = {"u1", "u2"};
    const kernel_element quad = kernel_expressions(
        vector_field(u, {parse_expr("u1^2", u), parse_expr("0", u)}));
    const symmetry_certificate bad = certify(s2, quad);
    CHECK_FALSE(bad.valid);
}

TEST_CASE("orbit permutation drift separates true and corrupted symmetries")
{
    const auto sys = testsupport::quadratic2d();
    const symmetry_certificate cert = certify(sys, kernel_linear({1., 0., 0., 0.}, 2));
    REQUIRE(cert.valid);

    flow_spec spec;
    spec.integrator = integrator_kind::rk45;
    spec.tol = 1e-10;
    spec.horizon = 1.0;
    spec.epsilon = 0.1;

    const orbit_report good = orbit_permutation_check(sys, cert, spec);
    CHECK(good.drift_max <= 1e-6);
    CHECK(good.checkpoints >= 2);
    CHECK(good.epsilon == 0.1);
    REQUIRE(good.per_integral.size() == 1);
    CHECK(good.per_integral[0] <= 1e-6);

    // Corrupt the field: Y + (0, x1^2) is not a symmetry, and the mapped
    // orbit visibly leaves the level set.
    const pullback_field &y = cert.y;
    const field_fn corrupted = [&y](std::span<const double> x) {
        auto v = y(x);
        v[1] += x[0] * x[0];
        return v;
    };
    const orbit_report bad = orbit_permutation_check(sys, corrupted, spec);
    CHECK(bad.drift_max > 1e-3);
}
