#pragma once

// Exponential-integral kernels F1, F2 and the Bessel J0 used by the
// closed-form rate expressions.
//
//   F1(x) = e^{1/x} E1(1/x)          = x * int_0^inf e^{-t}/(1+tx) dt / x
//   F2(x) = 1/x - F1(x)/x^2          =     int_0^inf e^{-t}/(1+tx)^2 dt
//
// Everything is evaluated through the scaled form e^y E1(y) so that tiny x
// (huge y = 1/x) cannot overflow.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace misosec::special {

inline constexpr double euler_gamma = 0.57721566490153286061;

// e^y E1(y) for y > 0. Series below y = 1, continued fraction above.
inline double scaled_e1(double y) {
    if (!(y > 0.0) || !std::isfinite(y)) {
        throw std::domain_error("scaled_e1: argument must be positive and finite");
    }
    if (y < 1.0) {
        // E1(y) = -gamma - log y + sum_{k>=1} (-1)^{k+1} y^k / (k k!)
        double sum = 0.0;
        double term = 1.0; // y^k / k!
        for (int k = 1; k <= 40; ++k) {
            term *= y / k;
            const double contrib = ((k & 1) ? term : -term) / k;
            sum += contrib;
            if (std::abs(contrib) < 1e-18 * std::abs(sum)) break;
        }
        return std::exp(y) * (-euler_gamma - std::log(y) + sum);
    }
    // Modified Lentz on  e^y E1(y) = 1/(y+1- 1/(y+3- 4/(y+5- 9/(...))))
    const double tiny = 1e-300;
    double f = y + 1.0;
    if (f == 0.0) f = tiny;
    double c = f, d = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double a = -static_cast<double>(k) * k;
        const double b = y + 2.0 * k + 1.0;
        d = b + a * d;
        if (d == 0.0) d = tiny;
        c = b + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 / f;
}

// F1(x) = e^{1/x} E1(1/x); strictly increasing, F1(x) ~ x (x -> 0),
// F1(x) ~ log x - gamma (x -> inf).
inline double F1(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("F1: argument must be positive and finite");
    }
    return scaled_e1(1.0 / x);
}

// F2(x) = 1/x - F1(x)/x^2 = int_0^inf e^{-t}/(1+tx)^2 dt, in (0,1).
inline double F2(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("F2: argument must be positive and finite");
    }
    if (x < 1e-3) {
        // asymptotic sum (-x)^k (k+1)!; truncation error < 10! x^9
        double sum = 0.0, term = 1.0;
        for (int k = 0; k <= 8; ++k) {
            sum += term;
            term *= -x * (k + 2);
        }
        return sum;
    }
    return (x - F1(x)) / (x * x);
}

// (F1(a) - F1(b)) / (a - b), continuously extended across a = b where the
// limit is F2(a). Switches to the midpoint F2 when a,b nearly cancel.
inline double F1_difference_quotient(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw std::domain_error("F1_difference_quotient: arguments must be positive and finite");
    }
    const double cancel = 1e-6 * std::max(a, b);
    if (std::abs(a - b) <= cancel) {
        return F2(0.5 * (a + b));
    }
    return (F1(a) - F1(b)) / (a - b);
}

// Zero-order Bessel function of the first kind (even in x).
inline double bessel_j0(double x) {
    if (!std::isfinite(x)) {
        throw std::domain_error("bessel_j0: argument must be finite");
    }
    return std::cyl_bessel_j(0.0, std::abs(x));
}

} // namespace misosec::special
