#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <integrasym/symgen.hpp>

namespace integrasym
{

namespace
{

bool inside(std::span<const double> x, const std::vector<interval> &box)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= box[i].lo && x[i] <= box[i].hi)) {
            return false;
        }
    }
    return true;
}

void check_box(std::span<const double> x, const std::vector<interval> *box)
{
    if (box != nullptr && !inside(x, *box)) {
        throw domain_exit("flow: trajectory left the guarded box");
    }
}

std::vector<double> axpy(const std::vector<double> &x, double a, const std::vector<double> &y)
{
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        r[i] = x[i] + a * y[i];
    }
    return r;
}

std::vector<double> rk4_fixed(const field_fn &f, std::vector<double> x, double t, double step,
                              const std::vector<interval> *box)
{
    const double dir = t < 0 ? -1. : 1.;
    double remaining = std::abs(t);
    while (remaining > 0) {
        const double h = dir * std::min(step, remaining);
        const std::vector<double> k1 = f(x);
        const std::vector<double> k2 = f(axpy(x, h / 2, k1));
        const std::vector<double> k3 = f(axpy(x, h / 2, k2));
        const std::vector<double> k4 = f(axpy(x, h, k3));
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
        check_box(x, box);
        remaining -= std::abs(h);
    }
    return x;
}

// Dormand-Prince 5(4), FSAL: k7 at the accepted point is the next k1.
std::vector<double> rk45_adaptive(const field_fn &f, std::vector<double> x, double t, double tol,
                                  const std::vector<interval> *box)
{
    constexpr double a21 = 1. / 5;
    constexpr double a31 = 3. / 40, a32 = 9. / 40;
    constexpr double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
    constexpr double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                     a54 = -212. / 729;
    constexpr double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247, a64 = 49. / 176,
                     a65 = -5103. / 18656;
    constexpr double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784,
                     b6 = 11. / 84;
    constexpr double e1 = 35. / 384 - 5179. / 57600, e3 = 500. / 1113 - 7571. / 16695,
                     e4 = 125. / 192 - 393. / 640, e5 = -2187. / 6784 + 92097. / 339200,
                     e6 = 11. / 84 - 187. / 2100, e7 = -1. / 40;

    const std::size_t n = x.size();
    const double dir = t < 0 ? -1. : 1.;
    const double t_end = std::abs(t);
    double done = 0;
    double h = std::min(1e-2, t_end);
    std::vector<double> k1 = f(x), k2, k3, k4, k5, k6, k7;
    std::vector<double> x5(n), scratch(n);

    while (done < t_end) {
        h = std::min(h, t_end - done);
        const double hs = dir * h;

        for (std::size_t i = 0; i < n; ++i) {
            scratch[i] = x[i] + hs * a21 * k1[i];
        }
        k2 = f(scratch);
        for (std::size_t i = 0; i < n; ++i) {
            scratch[i] = x[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        }
        k3 = f(scratch);
        for (std::size_t i = 0; i < n; ++i) {
            scratch[i] = x[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        }
        k4 = f(scratch);
        for (std::size_t i = 0; i < n; ++i) {
            scratch[i] = x[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        }
        k5 = f(scratch);
        for (std::size_t i = 0; i < n; ++i) {
            scratch[i] = x[i]
                         + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i]
                                 + a65 * k5[i]);
        }
        k6 = f(scratch);
        for (std::size_t i = 0; i < n; ++i) {
            x5[i] = x[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        }
        k7 = f(x5);

        double err = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = hs
                             * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i]
                                + e7 * k7[i]);
            const double scale = tol + tol * std::max(std::abs(x[i]), std::abs(x5[i]));
            err = std::max(err, std::abs(e) / scale);
        }

        if (err <= 1.) {
            done += h;
            x = x5;
            k1 = k7;
            check_box(x, box);
        }
        const double factor = !std::isfinite(err)
                                  ? 0.2
                                  : (err == 0 ? 5. : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.));
        h *= factor;
        if (done < t_end && h < 1e-14 * std::max(1., done)) {
            throw step_failure("flow: adaptive step size underflow at t = "
                               + std::to_string(dir * done));
        }
    }
    return x;
}

} // namespace

point flow(const field_fn &f, const point &x0, double t, const flow_spec &spec,
           const std::vector<interval> *box)
{
    if (box != nullptr && box->size() != x0.coords.size()) {
        throw dimension_error("flow: guard box dimension does not match the state");
    }
    check_box(x0.coords, box);
    if (t == 0) {
        return x0;
    }
    std::vector<double> x;
    if (spec.integrator == integrator_kind::rk4) {
        if (!(spec.step > 0)) {
            throw numeric_error("flow: fixed step size must be positive");
        }
        x = rk4_fixed(f, x0.coords, t, spec.step, box);
    } else {
        if (!(spec.tol > 0)) {
            throw numeric_error("flow: adaptive tolerance must be positive");
        }
        x = rk45_adaptive(f, x0.coords, t, spec.tol, box);
    }
    return point{x0.names, std::move(x)};
}

} // namespace integrasym
